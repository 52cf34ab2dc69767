//! Binary model container (`.etg`).
//!
//! ```text
//! magic        8 bytes  "ETGMODEL"
//! version      u32      1
//! payload_len  u64
//! payload      payload_len bytes
//! checksum     32 bytes SHA-256 of payload
//! ```
//!
//! Integers are little-endian, floats are IEEE-754 binary64, strings are a
//! u64 byte length followed by UTF-8. The payload holds, in order: ensemble
//! parameters, feature names, class names, an optional preprocess model,
//! and the trees. Each tree is its seed, feature count, class count and
//! node count, then its nodes in preorder: tag 0 = split (feature u64,
//! threshold f64), tag 1 = leaf (predicted class u64, one u64 count per
//! class).

use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use sha2::{Digest, Sha256};

use crate::ensemble::{EnsembleParams, ExtraTreesModel};
use crate::error::{Error, Result};
use crate::ingest::ColumnKind;
use crate::preprocess::{CategoryEncoder, ColumnStats, PreprocessModel, Standardizer, Vocabulary};
use crate::tree::{DecisionTree, MaxFeatures, Splitter, TreeNode, TreeParams};

pub const MAGIC: &[u8; 8] = b"ETGMODEL";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;
const CHECKSUM_LEN: usize = 32;

struct Enc(Vec<u8>);

impl Enc {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.0.write_u64::<LE>(v).expect("vec write");
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.0.write_f64::<LE>(v).expect("vec write");
    }

    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }

    fn strs(&mut self, v: &[String]) {
        self.usize(v.len());
        for s in v {
            self.str(s);
        }
    }

    fn opt(&mut self, v: Option<usize>) {
        self.u8(v.is_some().into());
        self.usize(v.unwrap_or(0));
    }
}

struct Dec<'a>(&'a [u8]);

fn truncated(_: std::io::Error) -> Error {
    Error::Format("payload truncated".into())
}

impl Dec<'_> {
    fn u8(&mut self) -> Result<u8> {
        self.0.read_u8().map_err(truncated)
    }

    fn u64(&mut self) -> Result<u64> {
        self.0.read_u64::<LE>().map_err(truncated)
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("integer overflows usize".into()))
    }

    /// Element count, rejected if it could not fit in the remaining bytes.
    fn len(&mut self, min_elem_size: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(min_elem_size) > self.0.len() {
            return Err(Error::Format("length exceeds payload".into()));
        }
        Ok(n)
    }

    fn f64(&mut self) -> Result<f64> {
        self.0.read_f64::<LE>().map_err(truncated)
    }

    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Format(format!("invalid flag byte {b}"))),
        }
    }

    fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        String::from_utf8(head.to_vec()).map_err(|_| Error::Format("invalid UTF-8".into()))
    }

    fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.str()).collect()
    }

    fn opt(&mut self) -> Result<Option<usize>> {
        let present = self.bool()?;
        let v = self.usize()?;
        Ok(present.then_some(v))
    }
}

fn put_params(e: &mut Enc, p: &EnsembleParams) {
    e.usize(p.n_trees);
    e.u64(p.seed);
    e.u8(p.bootstrap.into());
    put_tree_params(e, &p.tree);
}

fn put_tree_params(e: &mut Enc, t: &TreeParams) {
    let (tag, k) = match t.max_features {
        MaxFeatures::Sqrt => (0, 0),
        MaxFeatures::All => (1, 0),
        MaxFeatures::Count(k) => (2, k),
    };
    e.u8(tag);
    e.usize(k);
    e.opt(t.max_depth);
    e.usize(t.min_samples_split);
    e.usize(t.min_samples_leaf);
    e.u8(match t.splitter {
        Splitter::Best => 0,
        Splitter::Random => 1,
    });
}

fn get_params(d: &mut Dec) -> Result<EnsembleParams> {
    let n_trees = d.usize()?;
    let seed = d.u64()?;
    let bootstrap = d.bool()?;
    let tree = get_tree_params(d)?;
    Ok(EnsembleParams {
        n_trees,
        tree,
        bootstrap,
        seed,
    })
}

fn get_tree_params(d: &mut Dec) -> Result<TreeParams> {
    let tag = d.u8()?;
    let k = d.usize()?;
    let max_features = match tag {
        0 => MaxFeatures::Sqrt,
        1 => MaxFeatures::All,
        2 => MaxFeatures::Count(k),
        _ => return Err(Error::Format(format!("invalid max_features tag {tag}"))),
    };
    let max_depth = d.opt()?;
    let min_samples_split = d.usize()?;
    let min_samples_leaf = d.usize()?;
    let splitter = match d.u8()? {
        0 => Splitter::Best,
        1 => Splitter::Random,
        t => return Err(Error::Format(format!("invalid splitter tag {t}"))),
    };
    Ok(TreeParams {
        max_features,
        max_depth,
        min_samples_split,
        min_samples_leaf,
        splitter,
    })
}

fn put_preprocess(e: &mut Enc, p: &PreprocessModel) {
    e.str(&p.label_column);
    e.usize(p.feature_names.len());
    for (name, kind) in p.feature_names.iter().zip(&p.feature_kinds) {
        e.str(name);
        e.u8(match kind {
            ColumnKind::Numeric => 0,
            ColumnKind::Categorical => 1,
        });
    }
    e.usize(p.standardizer.fitted_on_rows);
    e.usize(p.standardizer.columns.len());
    for c in &p.standardizer.columns {
        e.str(&c.name);
        e.f64(c.mean);
        e.f64(c.std);
    }
    e.usize(p.encoder.columns.len());
    for v in &p.encoder.columns {
        e.str(&v.column);
        e.strs(&v.values);
    }
    e.f64(p.train_fraction);
    e.u64(p.split_seed);
}

fn get_preprocess(d: &mut Dec) -> Result<PreprocessModel> {
    let label_column = d.str()?;
    let n = d.len(9)?;
    let mut feature_names = Vec::with_capacity(n);
    let mut feature_kinds = Vec::with_capacity(n);
    for _ in 0..n {
        feature_names.push(d.str()?);
        feature_kinds.push(match d.u8()? {
            0 => ColumnKind::Numeric,
            1 => ColumnKind::Categorical,
            k => return Err(Error::Format(format!("invalid column kind {k}"))),
        });
    }
    let fitted_on_rows = d.usize()?;
    let n = d.len(24)?;
    let columns = (0..n)
        .map(|_| {
            Ok(ColumnStats {
                name: d.str()?,
                mean: d.f64()?,
                std: d.f64()?,
            })
        })
        .collect::<Result<_>>()?;
    let n = d.len(16)?;
    let vocabularies = (0..n)
        .map(|_| {
            Ok(Vocabulary {
                column: d.str()?,
                values: d.strs()?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PreprocessModel {
        label_column,
        feature_names,
        feature_kinds,
        standardizer: Standardizer {
            columns,
            fitted_on_rows,
        },
        encoder: CategoryEncoder {
            columns: vocabularies,
        },
        train_fraction: d.f64()?,
        split_seed: d.u64()?,
    })
}

fn put_tree(e: &mut Enc, t: &DecisionTree) {
    e.u64(t.seed());
    e.usize(t.n_features());
    e.usize(t.n_classes());
    e.usize(t.nodes().len());
    for node in t.nodes() {
        match node {
            TreeNode::Internal {
                feature, threshold, ..
            } => {
                e.u8(0);
                e.usize(*feature);
                e.f64(*threshold);
            }
            TreeNode::Leaf {
                class_counts,
                predicted_class,
            } => {
                e.u8(1);
                e.usize(*predicted_class);
                for &c in class_counts {
                    e.usize(c);
                }
            }
        }
    }
}

fn get_tree(d: &mut Dec, params: TreeParams) -> Result<DecisionTree> {
    let seed = d.u64()?;
    let n_features = d.usize()?;
    let n_classes = d.len(8)?;
    let n_nodes = d.len(9)?;
    let mut nodes = Vec::with_capacity(n_nodes);
    // internal nodes still waiting for their right child
    let mut pending: Vec<usize> = Vec::new();
    for i in 0..n_nodes {
        match d.u8()? {
            0 => {
                let feature = d.usize()?;
                let threshold = d.f64()?;
                nodes.push(TreeNode::Internal {
                    feature,
                    threshold,
                    left: i + 1,
                    right: 0,
                });
                pending.push(i);
            }
            1 => {
                let predicted_class = d.usize()?;
                let class_counts = (0..n_classes).map(|_| d.usize()).collect::<Result<_>>()?;
                nodes.push(TreeNode::Leaf {
                    class_counts,
                    predicted_class,
                });
                if i + 1 < n_nodes {
                    let parent = pending
                        .pop()
                        .ok_or_else(|| Error::Format("nodes after a complete tree".into()))?;
                    if let TreeNode::Internal { right, .. } = &mut nodes[parent] {
                        *right = i + 1;
                    }
                }
            }
            t => return Err(Error::Format(format!("invalid node tag {t}"))),
        }
    }
    if !pending.is_empty() {
        return Err(Error::Format("tree ends inside a split".into()));
    }
    DecisionTree::from_parts(nodes, params, seed, n_features, n_classes)
}

pub fn to_bytes(model: &ExtraTreesModel) -> Vec<u8> {
    let mut e = Enc(Vec::new());
    put_params(&mut e, &model.params);
    e.strs(&model.feature_names);
    e.strs(&model.classes);
    match &model.preprocess {
        Some(p) => {
            e.u8(1);
            put_preprocess(&mut e, p);
        }
        None => e.u8(0),
    }
    e.usize(model.trees.len());
    for t in &model.trees {
        put_tree(&mut e, t);
    }
    let payload = e.0;

    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.write_u32::<LE>(VERSION).expect("vec write");
    out.write_u64::<LE>(payload.len() as u64).expect("vec write");
    out.extend_from_slice(&payload);
    out.extend_from_slice(&Sha256::digest(&payload));
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<ExtraTreesModel> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("not a model file (bad magic bytes)".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("header truncated".into()));
    }
    let mut header = &bytes[8..HEADER_LEN];
    let version = header.read_u32::<LE>().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: VERSION,
        });
    }
    let payload_len = header.read_u64::<LE>().map_err(truncated)?;
    let expected = (HEADER_LEN as u64)
        .checked_add(payload_len)
        .and_then(|n| n.checked_add(CHECKSUM_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(Error::Format(format!(
            "file is {} bytes, header declares {}",
            bytes.len(),
            expected.map_or_else(|| "an impossible length".to_string(), |n| n.to_string())
        )));
    }
    let payload = &bytes[HEADER_LEN..bytes.len() - CHECKSUM_LEN];
    if Sha256::digest(payload).as_slice() != &bytes[bytes.len() - CHECKSUM_LEN..] {
        return Err(Error::ChecksumMismatch);
    }

    let mut d = Dec(payload);
    let params = get_params(&mut d)?;
    let feature_names = d.strs()?;
    let classes = d.strs()?;
    let preprocess = if d.bool()? {
        Some(get_preprocess(&mut d)?)
    } else {
        None
    };
    let n_trees = d.len(33)?;
    let trees = (0..n_trees)
        .map(|_| get_tree(&mut d, params.tree))
        .collect::<Result<Vec<_>>>()?;
    if !d.0.is_empty() {
        return Err(Error::Format("trailing bytes in payload".into()));
    }
    if trees.is_empty() || trees.len() != params.n_trees {
        return Err(Error::Format(format!(
            "expected {} trees, found {}",
            params.n_trees,
            trees.len()
        )));
    }
    let (m, c) = (trees[0].n_features(), trees[0].n_classes());
    if trees.iter().any(|t| t.n_features() != m || t.n_classes() != c)
        || feature_names.len() != m
        || classes.len() != c
    {
        return Err(Error::Format("trees disagree on features or classes".into()));
    }
    Ok(ExtraTreesModel {
        trees,
        classes,
        feature_names,
        params,
        preprocess,
    })
}

pub fn save_model(model: &ExtraTreesModel, path: impl AsRef<Path>) -> Result<()> {
    crate::io::write_atomic(path, &to_bytes(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ExtraTreesModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
