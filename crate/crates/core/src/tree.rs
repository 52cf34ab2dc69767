//! Single decision tree: per-node random feature subsets, Gini impurity,
//! and exhaustive midpoint threshold search (or one uniform random
//! threshold per feature with [`Splitter::Random`]).
//!
//! Rows go left when `value <= threshold`.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::seed;

/// Gini impurity `1 − Σ p_c²`.
pub fn gini(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyRows);
    }
    let n = total as u128;
    Ok(ratio(n * n - sum_of_squares(class_counts), n * n))
}

fn sum_of_squares(counts: &[usize]) -> u128 {
    counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `num / den` correctly rounded when both fit in an f64 mantissa, so equal
/// fractions always produce the same float.
fn ratio(num: u128, den: u128) -> f64 {
    const EXACT: u128 = 1 << f64::MANTISSA_DIGITS;
    if den <= EXACT {
        num as f64 / den as f64
    } else {
        let g = gcd(num, den);
        (num / g) as f64 / (den / g) as f64
    }
}

/// Child impurity weighted by child size: `(N_l/N)·G_l + (N_r/N)·G_r`.
pub fn split_impurity(left_counts: &[usize], right_counts: &[usize]) -> Result<f64> {
    let nl: usize = left_counts.iter().sum();
    let nr: usize = right_counts.iter().sum();
    if nl == 0 || nr == 0 {
        return Err(Error::InvalidParameter("split has an empty side".into()));
    }
    Ok(weighted_impurity(
        sum_of_squares(left_counts),
        nl,
        sum_of_squares(right_counts),
        nr,
    ))
}

/// Weighted Gini from per-side sums of squared class counts:
/// `(N·N_l·N_r − S_l·N_r − S_r·N_l) / (N·N_l·N_r)`.
fn weighted_impurity(left_sq: u128, nl: usize, right_sq: u128, nr: usize) -> f64 {
    let (nl, nr) = (nl as u128, nr as u128);
    let den = (nl + nr) * nl * nr;
    ratio(den - left_sq * nr - right_sq * nl, den)
}

/// Threshold between two consecutive distinct values. Falls back to the
/// lower value when the midpoint rounds up to the upper one.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    /// Exhaustive search over all midpoints.
    #[default]
    Best,
    /// One uniform threshold in `[min, max)` per sampled feature.
    Random,
}

/// Number of features drawn at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// `ceil(sqrt(m))`
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k,
        }
    }
}

impl std::fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Count(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for MaxFeatures {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "all" => Ok(MaxFeatures::All),
            _ => s
                .parse()
                .map(MaxFeatures::Count)
                .map_err(|_| format!("expected `sqrt`, `all` or a count, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub splitter: Splitter,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            splitter: Splitter::Best,
        }
    }
}

impl TreeParams {
    /// Checks the parameters against `n_features` and returns the resolved
    /// per-node feature count.
    pub fn validate(&self, n_features: usize) -> Result<usize> {
        let k = self.max_features.resolve(n_features);
        if n_features == 0 {
            return Err(Error::InvalidParameter("no features".into()));
        }
        if k < 1 || k > n_features {
            return Err(Error::InvalidParameter(format!(
                "max_features resolves to {k}, must lie in 1..={n_features}"
            )));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be >= 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub impurity: f64,
    pub left_count: usize,
    pub right_count: usize,
}

impl SplitCandidate {
    /// Ordering used for the argmin: impurity, then feature, then threshold.
    fn beats(&self, other: &SplitCandidate) -> bool {
        self.impurity
            .total_cmp(&other.impurity)
            .then(self.feature.cmp(&other.feature))
            .then(self.threshold.total_cmp(&other.threshold))
            .is_lt()
    }
}

fn class_counts(samples: &[usize], y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &s in samples {
        counts[y[s]] += 1;
    }
    counts
}

/// The `(feature, threshold)` minimizing weighted Gini over all midpoints of
/// the given features, or `None` when every feature is constant on `samples`.
pub fn find_best_split(
    samples: &[usize],
    features: &[usize],
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
) -> Option<SplitCandidate> {
    let total = class_counts(samples, y, n_classes);
    let n = samples.len();
    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];

    for &f in features {
        let col = x.column(f);
        pairs.clear();
        pairs.extend(samples.iter().map(|&s| (col[s], y[s])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&total);
        let mut left_sq = 0u128;
        let mut right_sq = sum_of_squares(&total);
        for i in 0..n.saturating_sub(1) {
            let (v, c) = pairs[i];
            left_sq += 2 * left[c] as u128 + 1;
            right_sq -= 2 * right[c] as u128 - 1;
            left[c] += 1;
            right[c] -= 1;
            let next = pairs[i + 1].0;
            if v >= next {
                continue;
            }
            let cand = SplitCandidate {
                feature: f,
                threshold: midpoint(v, next),
                impurity: weighted_impurity(left_sq, i + 1, right_sq, n - i - 1),
                left_count: i + 1,
                right_count: n - i - 1,
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
    }
    best
}

/// Like [`find_best_split`] but evaluates a single uniform random threshold
/// in `[min, max)` per feature.
pub fn find_random_split(
    samples: &[usize],
    features: &[usize],
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    rng: &mut seed::Rng,
) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &f in features {
        let col = x.column(f);
        let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
            (lo.min(col[s]), hi.max(col[s]))
        });
        if lo >= hi {
            continue;
        }
        let threshold = rng.random_range(lo..hi);
        left.iter_mut().for_each(|c| *c = 0);
        right.iter_mut().for_each(|c| *c = 0);
        for &s in samples {
            if col[s] <= threshold {
                left[y[s]] += 1;
            } else {
                right[y[s]] += 1;
            }
        }
        let nl: usize = left.iter().sum();
        let nr = samples.len() - nl;
        let cand = SplitCandidate {
            feature: f,
            threshold,
            impurity: weighted_impurity(sum_of_squares(&left), nl, sum_of_squares(&right), nr),
            left_count: nl,
            right_count: nr,
        };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class_counts: Vec<usize>,
        predicted_class: usize,
    },
}

impl TreeNode {
    pub fn leaf(class_counts: Vec<usize>) -> TreeNode {
        let predicted_class = majority(&class_counts);
        TreeNode::Leaf {
            class_counts,
            predicted_class,
        }
    }
}

/// Index of the largest count; the lowest index wins ties.
pub fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// A fitted tree. Nodes are stored in preorder; node 0 is the root and
/// every internal node's left child immediately follows it.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    depth: usize,
    leaf_count: usize,
    params: TreeParams,
    seed: u64,
    n_features: usize,
    n_classes: usize,
}

struct Pending {
    samples: Vec<usize>,
    depth: usize,
    /// Parent whose right link points at this node.
    right_of: Option<usize>,
}

/// Grows a tree on `samples` (indices into `x`/`y`, repeats allowed).
///
/// A node becomes a leaf when it is pure, holds fewer than
/// `min_samples_split` samples, sits at `max_depth`, has no feature with two
/// distinct values among the sampled features, or its best split leaves
/// fewer than `min_samples_leaf` samples on a side.
pub fn build_tree(
    samples: &[usize],
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    params: &TreeParams,
    rng_seed: u64,
) -> Result<DecisionTree> {
    if samples.is_empty() {
        return Err(Error::EmptyRows);
    }
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::ClassOutOfRange {
            id: bad,
            classes: n_classes,
        });
    }
    let m = x.n_features();
    let k = params.validate(m)?;
    let mut rng = seed::rng(rng_seed);

    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut depth = 0;
    let mut stack = vec![Pending {
        samples: samples.to_vec(),
        depth: 0,
        right_of: None,
    }];

    while let Some(Pending {
        samples,
        depth: d,
        right_of,
    }) = stack.pop()
    {
        let idx = nodes.len();
        if let Some(parent) = right_of {
            if let TreeNode::Internal { right, .. } = &mut nodes[parent] {
                *right = idx;
            }
        }
        depth = depth.max(d);

        let counts = class_counts(&samples, y, n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || samples.len() < params.min_samples_split || params.max_depth == Some(d) {
            nodes.push(TreeNode::leaf(counts));
            continue;
        }

        let mut features = index::sample(&mut rng, m, k).into_vec();
        features.sort_unstable();
        let split = match params.splitter {
            Splitter::Best => find_best_split(&samples, &features, x, y, n_classes),
            Splitter::Random => find_random_split(&samples, &features, x, y, n_classes, &mut rng),
        };
        let split = match split {
            Some(s)
                if s.left_count >= params.min_samples_leaf
                    && s.right_count >= params.min_samples_leaf =>
            {
                s
            }
            _ => {
                nodes.push(TreeNode::leaf(counts));
                continue;
            }
        };

        let col = x.column(split.feature);
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&s| col[s] <= split.threshold);
        nodes.push(TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: idx + 1,
            right: usize::MAX,
        });
        stack.push(Pending {
            samples: right,
            depth: d + 1,
            right_of: Some(idx),
        });
        stack.push(Pending {
            samples: left,
            depth: d + 1,
            right_of: None,
        });
    }

    let leaf_count = nodes
        .iter()
        .filter(|n| matches!(n, TreeNode::Leaf { .. }))
        .count();
    Ok(DecisionTree {
        nodes,
        depth,
        leaf_count,
        params: *params,
        seed: rng_seed,
        n_features: m,
        n_classes,
    })
}

impl DecisionTree {
    /// Reassembles a tree from preorder nodes, checking child links.
    pub(crate) fn from_parts(
        nodes: Vec<TreeNode>,
        params: TreeParams,
        seed: u64,
        n_features: usize,
        n_classes: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        let mut depth_of = vec![usize::MAX; nodes.len()];
        depth_of[0] = 0;
        let mut leaf_count = 0;
        let mut depth = 0;
        for (i, node) in nodes.iter().enumerate() {
            let d = depth_of[i];
            if d == usize::MAX {
                return Err(Error::Format(format!("node {i} is unreachable")));
            }
            depth = depth.max(d);
            match node {
                TreeNode::Internal {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    if *feature >= n_features || *left != i + 1 || *right <= *left || *right >= nodes.len() {
                        return Err(Error::Format(format!("node {i} has invalid links")));
                    }
                    for &c in [left, right] {
                        if depth_of[c] != usize::MAX {
                            return Err(Error::Format(format!("node {c} has two parents")));
                        }
                        depth_of[c] = d + 1;
                    }
                }
                TreeNode::Leaf {
                    class_counts,
                    predicted_class,
                } => {
                    if class_counts.len() != n_classes || *predicted_class >= n_classes {
                        return Err(Error::Format(format!("leaf {i} has wrong class count")));
                    }
                    leaf_count += 1;
                }
            }
        }
        Ok(DecisionTree {
            nodes,
            depth,
            leaf_count,
            params,
            seed,
            n_features,
            n_classes,
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: row.len(),
            });
        }
        Ok(self.predict_unchecked(row))
    }

    pub(crate) fn predict_unchecked(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf {
                    predicted_class, ..
                } => return *predicted_class,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::from_columns(cols).unwrap()
    }

    fn all_params() -> TreeParams {
        TreeParams {
            max_features: MaxFeatures::All,
            ..Default::default()
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[2, 2]).unwrap(), 0.5);
        assert_eq!(gini(&[3, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[3, 1]).unwrap(), 0.375);
        assert!(gini(&[0, 0]).is_err());
    }

    #[test]
    fn split_impurity_values() {
        assert_eq!(split_impurity(&[2, 0], &[0, 2]).unwrap(), 0.0);
        assert_eq!(split_impurity(&[1, 1], &[1, 1]).unwrap(), 0.5);
        assert!((split_impurity(&[1, 0], &[1, 2]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(split_impurity(&[0, 0], &[1, 2]).is_err());
    }

    #[test]
    fn best_split_simple() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let s = find_best_split(&[0, 1, 2, 3], &[0], &x, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.impurity, 0.0);
        assert_eq!((s.left_count, s.right_count), (2, 2));
    }

    #[test]
    fn best_split_constant_feature() {
        let x = matrix(vec![vec![5.0; 4]]);
        assert!(find_best_split(&[0, 1, 2, 3], &[0], &x, &[0, 1, 0, 1], 2).is_none());
    }

    #[test]
    fn best_split_pure_node() {
        let x = matrix(vec![vec![1.0, 2.0]]);
        let s = find_best_split(&[0, 1], &[0], &x, &[0, 0], 1).unwrap();
        assert_eq!((s.impurity, s.threshold), (0.0, 1.5));
    }

    #[test]
    fn best_split_ties_prefer_lower_feature_then_threshold() {
        // both features separate perfectly; feature 0 must win
        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]]);
        let s = find_best_split(&[0, 1, 2, 3], &[0, 1], &x, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(s.feature, 0);
        // labels [0,1,1,0]: thresholds 1.5 and 3.5 tie at 1/3
        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let s = find_best_split(&[0, 1, 2, 3], &[0], &x, &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn midpoint_of_adjacent_floats_stays_below_upper() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo <= t && t < hi);
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0]]);
        let t = build_tree(&[0, 1, 2], &x, &[1, 1, 1], 2, &all_params(), 0).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&[10.0]).unwrap(), 1);
    }

    fn xor() -> (FeatureMatrix, Vec<usize>) {
        (
            matrix(vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]]),
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        let t = build_tree(&[0, 1, 2, 3], &x, &y, 2, &all_params(), 7).unwrap();
        assert_eq!(t.depth(), 2);
        assert_eq!(t.leaf_count(), 4);
        for (r, &label) in y.iter().enumerate() {
            assert_eq!(t.predict(&x.row(r)).unwrap(), label);
        }
    }

    #[test]
    fn max_depth_zero_is_majority_leaf() {
        let x = matrix(vec![vec![1.0, 2.0, 3.0]]);
        let p = TreeParams {
            max_depth: Some(0),
            ..all_params()
        };
        let t = build_tree(&[0, 1, 2], &x, &[2, 0, 2], 3, &p, 0).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[0.0]).unwrap(), 2);
    }

    #[test]
    fn min_samples_stopping() {
        let (x, y) = xor();
        let p = TreeParams {
            min_samples_split: 5,
            ..all_params()
        };
        assert_eq!(build_tree(&[0, 1, 2, 3], &x, &y, 2, &p, 0).unwrap().nodes().len(), 1);

        let x = matrix(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let p = TreeParams {
            min_samples_leaf: 2,
            ..all_params()
        };
        // best split isolates the first row
        let t = build_tree(&[0, 1, 2, 3], &x, &[1, 0, 0, 0], 2, &p, 0).unwrap();
        assert_eq!(t.nodes().len(), 1);
    }

    #[test]
    fn leaf_tie_prefers_lowest_class() {
        assert_eq!(majority(&[2, 2, 1]), 0);
        assert_eq!(majority(&[0, 3, 3]), 1);
        let x = matrix(vec![vec![1.0, 1.0]]);
        let t = build_tree(&[0, 1], &x, &[1, 0], 2, &all_params(), 0).unwrap();
        assert_eq!(t.predict(&[1.0]).unwrap(), 0);
    }

    #[test]
    fn boundary_value_goes_left() {
        let t = DecisionTree::from_parts(
            vec![
                TreeNode::Internal { feature: 0, threshold: 2.5, left: 1, right: 2 },
                TreeNode::leaf(vec![1, 0]),
                TreeNode::leaf(vec![0, 1]),
            ],
            TreeParams::default(),
            0,
            1,
            2,
        )
        .unwrap();
        assert_eq!(t.predict(&[2.5]).unwrap(), 0);
        assert_eq!(t.predict(&[2.6]).unwrap(), 1);
        assert!(t.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn single_leaf_predicts_its_class() {
        let t = DecisionTree::from_parts(vec![TreeNode::leaf(vec![0, 0, 0, 5])], TreeParams::default(), 0, 3, 4).unwrap();
        assert_eq!(t.predict(&[1.0, -4.0, 9.0]).unwrap(), 3);
    }

    #[test]
    fn from_parts_rejects_bad_links() {
        let bad = vec![
            TreeNode::Internal { feature: 0, threshold: 0.0, left: 1, right: 1 },
            TreeNode::leaf(vec![1]),
        ];
        assert!(DecisionTree::from_parts(bad, TreeParams::default(), 0, 1, 1).is_err());
    }

    #[test]
    fn param_validation() {
        let x = matrix(vec![vec![1.0, 2.0]]);
        let bad_k = TreeParams { max_features: MaxFeatures::Count(2), ..Default::default() };
        assert!(build_tree(&[0, 1], &x, &[0, 1], 2, &bad_k, 0).is_err());
        let bad_split = TreeParams { min_samples_split: 1, ..Default::default() };
        assert!(build_tree(&[0, 1], &x, &[0, 1], 2, &bad_split, 0).is_err());
        assert!(build_tree(&[], &x, &[0, 1], 2, &TreeParams::default(), 0).is_err());
        assert!(build_tree(&[0], &x, &[0, 2], 2, &TreeParams::default(), 0).is_err());
        assert_eq!(MaxFeatures::Sqrt.resolve(46), 7);
        assert_eq!(MaxFeatures::Sqrt.resolve(9), 3);
    }

    #[test]
    fn random_splitter_fits_separable_data() {
        let x = matrix(vec![(0..40).map(f64::from).collect()]);
        let y: Vec<usize> = (0..40).map(|i| usize::from(i >= 17)).collect();
        let p = TreeParams { splitter: Splitter::Random, ..all_params() };
        let samples: Vec<usize> = (0..40).collect();
        let t = build_tree(&samples, &x, &y, 2, &p, 3).unwrap();
        for (r, &label) in y.iter().enumerate() {
            assert_eq!(t.predict(&x.row(r)).unwrap(), label);
        }
    }

    fn brute_force_min(samples: &[usize], features: &[usize], x: &FeatureMatrix, y: &[usize], c: usize) -> Option<f64> {
        let mut best: Option<f64> = None;
        for &f in features {
            let mut vals: Vec<f64> = samples.iter().map(|&s| x.get(s, f)).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = midpoint(w[0], w[1]);
                let mut l = vec![0; c];
                let mut r = vec![0; c];
                for &s in samples {
                    if x.get(s, f) <= t { l[y[s]] += 1 } else { r[y[s]] += 1 }
                }
                let imp = split_impurity(&l, &r).unwrap();
                best = Some(best.map_or(imp, |b: f64| b.min(imp)));
            }
        }
        best
    }

    proptest! {
        #[test]
        fn gini_bounds(counts in prop::collection::vec(0usize..50, 1..6)) {
            prop_assume!(counts.iter().sum::<usize>() > 0);
            let g = gini(&counts).unwrap();
            let c = counts.len() as f64;
            prop_assert!(g >= 0.0 && g <= 1.0 - 1.0 / c + 1e-12);
            let pure = counts.iter().filter(|&&x| x > 0).count() == 1;
            prop_assert_eq!(g == 0.0, pure);
        }

        #[test]
        fn best_split_is_argmin(seed in any::<u64>(), n in 2usize..50, m in 1usize..4, c in 1usize..4) {
            let mut rng = seed::rng(seed);
            let cols: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| f64::from(rng.random_range(0..6))).collect()).collect();
            let x = matrix(cols);
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
            let samples: Vec<usize> = (0..n).collect();
            let features: Vec<usize> = (0..m).collect();
            let got = find_best_split(&samples, &features, &x, &y, c).map(|s| s.impurity);
            prop_assert_eq!(got, brute_force_min(&samples, &features, &x, &y, c));
        }

        #[test]
        fn full_growth_fits_consistent_data(seed in any::<u64>()) {
            let mut rng = seed::rng(seed);
            let n = 100;
            let x = matrix((0..3).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect());
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let samples: Vec<usize> = (0..n).collect();
            let t = build_tree(&samples, &x, &y, 3, &all_params(), seed).unwrap();
            for (r, &label) in y.iter().enumerate() {
                prop_assert_eq!(t.predict(&x.row(r)).unwrap(), label);
            }
        }

        #[test]
        fn build_is_deterministic(seed in any::<u64>()) {
            let mut rng = seed::rng(seed);
            let n = 60;
            let x = matrix((0..5).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect());
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let samples: Vec<usize> = (0..n).collect();
            let a = build_tree(&samples, &x, &y, 2, &TreeParams::default(), seed).unwrap();
            let b = build_tree(&samples, &x, &y, 2, &TreeParams::default(), seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
