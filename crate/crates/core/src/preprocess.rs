//! Cleaning, z-score standardization, sorted-vocabulary label encoding and
//! the train/test split.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Column, ColumnKind, RawTable};
use crate::matrix::FeatureMatrix;
use crate::seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub duplicates_removed: usize,
    pub nonfinite_cells_marked: usize,
    pub rows_dropped_missing: usize,
    pub rows_remaining: usize,
}

fn hash_cell(col: &Column, row: usize, h: &mut DefaultHasher) {
    match col {
        Column::Numeric(v) => match v[row] {
            None => 0u8.hash(h),
            Some(x) if x.is_nan() => 1u8.hash(h),
            // +0.0 and -0.0 compare equal, so they must hash equal
            Some(x) => (x + 0.0).to_bits().hash(h),
        },
        Column::Categorical(v) => v[row].hash(h),
    }
}

fn cells_equal(col: &Column, a: usize, b: usize) -> bool {
    match col {
        Column::Numeric(v) => match (v[a], v[b]) {
            (Some(x), Some(y)) => x == y || (x.is_nan() && y.is_nan()),
            (None, None) => true,
            _ => false,
        },
        Column::Categorical(v) => v[a] == v[b],
    }
}

/// Removes exact duplicate rows (first occurrence kept), turns every
/// non-finite numeric cell into a missing cell, then drops every row with a
/// missing cell.
pub fn clean(table: &RawTable) -> (RawTable, CleanReport) {
    let columns = table.columns();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut unique = Vec::with_capacity(table.row_count());
    for row in 0..table.row_count() {
        let mut h = DefaultHasher::new();
        for col in columns {
            hash_cell(col, row, &mut h);
        }
        let bucket = buckets.entry(h.finish()).or_default();
        let dup = bucket
            .iter()
            .any(|&other| columns.iter().all(|c| cells_equal(c, row, other)));
        if !dup {
            bucket.push(row);
            unique.push(row);
        }
    }
    let duplicates_removed = table.row_count() - unique.len();

    let (out, nonfinite_cells_marked, rows_dropped_missing) =
        drop_incomplete_rows(&table.select_rows(&unique));
    let report = CleanReport {
        duplicates_removed,
        nonfinite_cells_marked,
        rows_dropped_missing,
        rows_remaining: out.row_count(),
    };
    (out, report)
}

/// The last two cleaning stages without deduplication: non-finite numeric
/// cells become missing, then rows with any missing cell are dropped.
/// Returns the table, the number of cells marked and the rows dropped.
pub fn drop_incomplete_rows(table: &RawTable) -> (RawTable, usize, usize) {
    let (schema, mut cols, label) = table.clone().into_parts();
    let mut marked = 0;
    for col in &mut cols {
        if let Column::Numeric(v) = col {
            for cell in v.iter_mut() {
                if matches!(cell, Some(x) if !x.is_finite()) {
                    *cell = None;
                    marked += 1;
                }
            }
        }
    }
    let scrubbed = RawTable::new(schema.into_iter().map(|s| s.name).zip(cols).collect(), label)
        .expect("schema preserved");
    let complete: Vec<usize> = (0..scrubbed.row_count())
        .filter(|&r| scrubbed.columns().iter().all(|c| !c.is_missing(r)))
        .collect();
    let dropped = scrubbed.row_count() - complete.len();
    (scrubbed.select_rows(&complete), marked, dropped)
}

/// Mean and population standard deviation of one numeric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<ColumnStats>,
    pub fitted_on_rows: usize,
}

impl Standardizer {
    /// Names of columns with zero variance; these map to 0.
    pub fn constant_columns(&self) -> impl Iterator<Item = &str> {
        self.columns
            .iter()
            .filter(|c| c.std == 0.0)
            .map(|c| c.name.as_str())
    }

    pub fn transform_value(stats: &ColumnStats, x: f64) -> f64 {
        if stats.std == 0.0 {
            0.0
        } else {
            (x - stats.mean) / stats.std
        }
    }
}

/// Fits per-column mean and population standard deviation over `rows` for
/// every numeric non-label column.
pub fn fit_standardizer(table: &RawTable, rows: &[usize]) -> Result<Standardizer> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let n = rows.len() as f64;
    let mut columns = Vec::new();
    for (schema, col) in table.schema().iter().zip(table.columns()) {
        if Some(schema.name.as_str()) == table.label_column() {
            continue;
        }
        let Column::Numeric(v) = col else { continue };
        let mut values = Vec::with_capacity(rows.len());
        for &r in rows {
            match v[r] {
                Some(x) if x.is_finite() => values.push(x),
                _ => {
                    return Err(Error::NonFiniteInput {
                        row: r + 1,
                        column: schema.name.clone(),
                    })
                }
            }
        }
        let rough = values.iter().sum::<f64>() / n;
        let mean = rough + values.iter().map(|x| x - rough).sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        columns.push(ColumnStats {
            name: schema.name.clone(),
            mean,
            std: var.sqrt(),
        });
    }
    Ok(Standardizer {
        columns,
        fitted_on_rows: rows.len(),
    })
}

/// Maps every standardized column through `(x − μ) / σ`, or to 0 when σ = 0.
/// Missing cells stay missing.
pub fn apply_standardizer(standardizer: &Standardizer, table: &RawTable) -> Result<RawTable> {
    let (schema, mut cols, label) = table.clone().into_parts();
    for stats in &standardizer.columns {
        let idx = schema
            .iter()
            .position(|s| s.name == stats.name)
            .ok_or_else(|| Error::ColumnMismatch(format!("column `{}` not in table", stats.name)))?;
        let Column::Numeric(v) = &mut cols[idx] else {
            return Err(Error::ColumnMismatch(format!(
                "column `{}` is not numeric",
                stats.name
            )));
        };
        for x in v.iter_mut().flatten() {
            *x = Standardizer::transform_value(stats, *x);
        }
    }
    RawTable::new(schema.into_iter().map(|s| s.name).zip(cols).collect(), label)
}

/// Sorted vocabulary of one categorical column. A value's code is its rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub column: String,
    pub values: Vec<String>,
}

impl Vocabulary {
    pub fn code(&self, value: &str) -> Option<usize> {
        self.values
            .binary_search_by(|v| v.as_str().cmp(value))
            .ok()
    }

    pub fn decode(&self, code: usize) -> Option<&str> {
        self.values.get(code).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryEncoder {
    pub columns: Vec<Vocabulary>,
}

impl CategoryEncoder {
    pub fn vocabulary(&self, column: &str) -> Option<&Vocabulary> {
        self.columns.iter().find(|v| v.column == column)
    }

    /// Inverse of [`apply_encoder`]: code columns that have a vocabulary
    /// become categorical again.
    pub fn decode(&self, table: &RawTable) -> Result<RawTable> {
        let (schema, mut cols, label) = table.clone().into_parts();
        for (s, col) in schema.iter().zip(cols.iter_mut()) {
            let (Some(vocab), Column::Numeric(v)) = (self.vocabulary(&s.name), &*col) else {
                continue;
            };
            let decoded = v
                .iter()
                .map(|cell| {
                    cell.map(|x| {
                        vocab
                            .decode(x as usize)
                            .filter(|_| x >= 0.0 && x.fract() == 0.0)
                            .map(String::from)
                            .ok_or_else(|| Error::UnseenCategory {
                                column: s.name.clone(),
                                value: x.to_string(),
                            })
                    })
                    .transpose()
                })
                .collect::<Result<Vec<_>>>()?;
            *col = Column::Categorical(decoded);
        }
        RawTable::new(schema.into_iter().map(|s| s.name).zip(cols).collect(), label)
    }
}

/// Vocabulary per categorical column (label included) from the given rows.
pub fn fit_encoder(table: &RawTable, rows: &[usize]) -> Result<CategoryEncoder> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let columns = table
        .schema()
        .iter()
        .zip(table.columns())
        .filter_map(|(s, col)| {
            let v = col.as_categorical()?;
            let distinct: BTreeSet<&str> = rows.iter().filter_map(|&r| v[r].as_deref()).collect();
            Some(Vocabulary {
                column: s.name.clone(),
                values: distinct.into_iter().map(String::from).collect(),
            })
        })
        .collect();
    Ok(CategoryEncoder { columns })
}

/// Replaces every categorical cell by its code. Categorical columns without
/// a vocabulary are a mismatch; vocabularies for absent columns are ignored.
pub fn apply_encoder(encoder: &CategoryEncoder, table: &RawTable) -> Result<RawTable> {
    let (schema, mut cols, label) = table.clone().into_parts();
    for (s, col) in schema.iter().zip(cols.iter_mut()) {
        let Column::Categorical(v) = &*col else { continue };
        let vocab = encoder.vocabulary(&s.name).ok_or_else(|| {
            Error::ColumnMismatch(format!("no vocabulary for categorical column `{}`", s.name))
        })?;
        let codes = v
            .iter()
            .map(|cell| {
                cell.as_deref()
                    .map(|value| {
                        vocab.code(value).map(|c| c as f64).ok_or_else(|| {
                            Error::UnseenCategory {
                                column: s.name.clone(),
                                value: value.to_string(),
                            }
                        })
                    })
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        *col = Column::Numeric(codes);
    }
    RawTable::new(schema.into_iter().map(|s| s.name).zip(cols).collect(), label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

fn check_split_args(row_count: usize, train_fraction: f64) -> Result<()> {
    if row_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "split needs at least 2 rows, got {row_count}"
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    Ok(())
}

/// Seeded uniform permutation; the first `floor(fraction × n)` indices train.
pub fn train_test_split(row_count: usize, train_fraction: f64, seed: u64) -> Result<SplitSpec> {
    check_split_args(row_count, train_fraction)?;
    let mut perm: Vec<usize> = (0..row_count).collect();
    perm.shuffle(&mut seed::rng(seed));
    let n_train = (train_fraction * row_count as f64).floor() as usize;
    let test_indices = perm.split_off(n_train);
    Ok(SplitSpec {
        train_fraction,
        seed,
        stratified: false,
        train_indices: perm,
        test_indices,
    })
}

/// Split that keeps class proportions. Per-class train quotas are
/// `floor(fraction × n_c)`, topped up by largest remainder (lowest class id
/// on ties) so the train size is still `floor(fraction × n)`.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> Result<SplitSpec> {
    check_split_args(labels.len(), train_fraction)?;
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = seed::rng(seed);
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }
    let target = (train_fraction * labels.len() as f64).floor() as usize;
    let exact: Vec<f64> = by_class
        .iter()
        .map(|m| train_fraction * m.len() as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(quota.iter().sum());
    for &c in order.iter().cycle().take(n_classes * 2) {
        if remaining == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    let mut train_indices = Vec::with_capacity(target);
    let mut test_indices = Vec::with_capacity(labels.len() - target);
    for (members, &q) in by_class.iter().zip(&quota) {
        train_indices.extend_from_slice(&members[..q]);
        test_indices.extend_from_slice(&members[q..]);
    }
    train_indices.shuffle(&mut rng);
    test_indices.shuffle(&mut rng);
    Ok(SplitSpec {
        train_fraction,
        seed,
        stratified: true,
        train_indices,
        test_indices,
    })
}

/// Everything needed to turn a raw table into model inputs: the feature
/// list, the fitted standardizer and encoder, and the split that produced
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessModel {
    pub label_column: String,
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<ColumnKind>,
    pub standardizer: Standardizer,
    pub encoder: CategoryEncoder,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl PreprocessModel {
    /// Fits encoder and standardizer on the training rows of a cleaned table.
    pub fn fit(table: &RawTable, split: &SplitSpec) -> Result<Self> {
        let label_column = table
            .label_column()
            .ok_or_else(|| Error::InvalidParameter("table has no label column".into()))?
            .to_string();
        let feature_names = table.feature_names();
        let feature_kinds = feature_names
            .iter()
            .map(|n| table.column(n).expect("feature exists").kind())
            .collect();
        let encoder = fit_encoder(table, &split.train_indices)?;
        let standardizer = fit_standardizer(table, &split.train_indices)?;
        Ok(PreprocessModel {
            label_column,
            feature_names,
            feature_kinds,
            standardizer,
            encoder,
            train_fraction: split.train_fraction,
            split_seed: split.seed,
        })
    }

    pub fn classes(&self) -> &[String] {
        self.encoder
            .vocabulary(&self.label_column)
            .map_or(&[], |v| v.values.as_slice())
    }

    /// Feature columns in model order with training-time kinds. Columns the
    /// model saw as categorical but that parsed as numbers here are turned
    /// back into text.
    fn feature_table(&self, table: &RawTable) -> Result<RawTable> {
        let mut cols = Vec::with_capacity(self.feature_names.len());
        for (name, &kind) in self.feature_names.iter().zip(&self.feature_kinds) {
            let col = table.column(name).ok_or_else(|| {
                Error::ColumnMismatch(format!("model feature `{name}` missing from input"))
            })?;
            let col = match (kind, col) {
                (ColumnKind::Numeric, Column::Numeric(_))
                | (ColumnKind::Categorical, Column::Categorical(_)) => col.clone(),
                (ColumnKind::Categorical, Column::Numeric(v)) => Column::Categorical(
                    v.iter().map(|c| c.map(|x| x.to_string())).collect(),
                ),
                (ColumnKind::Numeric, Column::Categorical(_)) => {
                    return Err(Error::ColumnMismatch(format!(
                        "feature `{name}` was numeric in training but holds text"
                    )))
                }
            };
            cols.push((name.clone(), col));
        }
        RawTable::new(cols, None)
    }

    /// Encodes and standardizes the feature columns. Any missing or
    /// non-finite cell is an error naming its row (1-based) and column.
    pub fn transform_features(&self, table: &RawTable) -> Result<FeatureMatrix> {
        let features = self.feature_table(table)?;
        let encoded = apply_encoder(&self.encoder, &features)?;
        let scaled = apply_standardizer(&self.standardizer, &encoded)?;
        let columns = scaled
            .schema()
            .iter()
            .zip(scaled.columns())
            .map(|(s, col)| {
                let v = col.as_numeric().expect("all columns numeric after encoding");
                v.iter()
                    .enumerate()
                    .map(|(r, cell)| match cell {
                        Some(x) if x.is_finite() => Ok(*x),
                        _ => Err(Error::NonFiniteInput {
                            row: r + 1,
                            column: s.name.clone(),
                        }),
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if columns.is_empty() {
            return Err(Error::ColumnMismatch("model has no feature columns".into()));
        }
        FeatureMatrix::from_columns(columns)
    }

    /// Class ids of the label column.
    pub fn transform_labels(&self, table: &RawTable) -> Result<Vec<usize>> {
        let col = table
            .column(&self.label_column)
            .ok_or_else(|| Error::MissingLabelColumn(self.label_column.clone()))?;
        let vocab = self
            .encoder
            .vocabulary(&self.label_column)
            .ok_or_else(|| Error::ColumnMismatch("label vocabulary missing".into()))?;
        let text: Vec<Option<String>> = match col {
            Column::Categorical(v) => v.clone(),
            Column::Numeric(v) => v.iter().map(|c| c.map(|x| x.to_string())).collect(),
        };
        text.iter()
            .enumerate()
            .map(|(r, cell)| {
                let value = cell.as_deref().ok_or_else(|| Error::NonFiniteInput {
                    row: r + 1,
                    column: self.label_column.clone(),
                })?;
                vocab.code(value).ok_or_else(|| Error::UnseenCategory {
                    column: self.label_column.clone(),
                    value: value.to_string(),
                })
            })
            .collect()
    }
}
