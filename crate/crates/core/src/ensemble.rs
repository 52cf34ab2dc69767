//! The tree ensemble: bootstrap sampling, parallel fitting with per-tree
//! seeds, hard majority voting, vote shares, and grid search.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::preprocess::{train_test_split, PreprocessModel};
use crate::seed;
use crate::tree::{build_tree, majority, DecisionTree, MaxFeatures, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
            seed: 42,
        }
    }
}

impl EnsembleParams {
    /// Seed of tree `i`'s bootstrap draw.
    pub fn bootstrap_seed(&self, i: usize) -> u64 {
        seed::derive(seed::derive(self.seed, i as u64), 0)
    }

    /// Seed of tree `i`'s feature sampling.
    pub fn tree_seed(&self, i: usize) -> u64 {
        seed::derive(seed::derive(self.seed, i as u64), 1)
    }
}

/// `n_train` indices drawn uniformly with replacement from `0..n_train`.
pub fn bootstrap_indices(n_train: usize, rng_seed: u64) -> Result<Vec<usize>> {
    if n_train == 0 {
        return Err(Error::EmptyRows);
    }
    let mut rng = seed::rng(rng_seed);
    Ok((0..n_train).map(|_| rng.random_range(0..n_train)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtraTreesModel {
    pub(crate) trees: Vec<DecisionTree>,
    pub(crate) classes: Vec<String>,
    pub(crate) feature_names: Vec<String>,
    pub(crate) params: EnsembleParams,
    pub(crate) preprocess: Option<PreprocessModel>,
}

impl ExtraTreesModel {
    /// Trains `params.n_trees` trees on `(x, y)`. Tree `i` sees a bootstrap
    /// sample drawn with [`EnsembleParams::bootstrap_seed`] (or every row
    /// when bootstrap is off) and grows with [`EnsembleParams::tree_seed`],
    /// so the result does not depend on thread scheduling.
    pub fn fit(
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        params: &EnsembleParams,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyRows);
        }
        if y.len() != x.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: x.n_rows(),
                found: y.len(),
            });
        }
        if params.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::ClassOutOfRange {
                id: bad,
                classes: n_classes,
            });
        }
        params.tree.validate(x.n_features())?;

        let all: Vec<usize> = (0..x.n_rows()).collect();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|i| {
                let samples = if params.bootstrap {
                    bootstrap_indices(x.n_rows(), params.bootstrap_seed(i))?
                } else {
                    all.clone()
                };
                build_tree(&samples, x, y, n_classes, &params.tree, params.tree_seed(i))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(ExtraTreesModel {
            trees,
            classes: (0..n_classes).map(|c| c.to_string()).collect(),
            feature_names: (0..x.n_features()).map(|f| format!("f{f}")).collect(),
            params: *params,
            preprocess: None,
        })
    }

    pub fn with_classes(mut self, classes: Vec<String>) -> Result<Self> {
        if classes.len() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes(),
                found: classes.len(),
            });
        }
        self.classes = classes;
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn with_preprocess(mut self, preprocess: PreprocessModel) -> Self {
        self.preprocess = Some(preprocess);
        self
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn preprocess(&self) -> Option<&PreprocessModel> {
        self.preprocess.as_ref()
    }

    pub fn n_classes(&self) -> usize {
        self.trees[0].n_classes()
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    fn check_width(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        Ok(())
    }

    /// Number of trees voting for each class.
    pub fn votes(&self, row: &[f64]) -> Result<Vec<usize>> {
        self.check_width(row)?;
        let mut votes = vec![0; self.n_classes()];
        for t in &self.trees {
            votes[t.predict_unchecked(row)] += 1;
        }
        Ok(votes)
    }

    /// Most-voted class; the lowest class code wins ties.
    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        self.votes(row).map(|v| majority(&v))
    }

    /// Fraction of trees voting for each class.
    pub fn vote_shares(&self, row: &[f64]) -> Result<Vec<f64>> {
        let n = self.trees.len() as f64;
        self.votes(row)
            .map(|v| v.into_iter().map(|c| c as f64 / n).collect())
    }

    pub fn predict_batch(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|r| self.predict(&x.row(r)))
            .collect()
    }

    pub fn vote_shares_batch(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|r| self.vote_shares(&x.row(r)))
            .collect()
    }

    /// Fraction of rows of `x` whose prediction equals `y`.
    pub fn accuracy(&self, x: &FeatureMatrix, y: &[usize]) -> Result<f64> {
        if y.len() != x.n_rows() || y.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: x.n_rows(),
                found: y.len(),
            });
        }
        let pred = self.predict_batch(x)?;
        let hits = pred.iter().zip(y).filter(|(p, t)| p == t).count();
        Ok(hits as f64 / y.len() as f64)
    }
}

/// The candidate grid searched when none is given: `n_trees` in
/// {50, 100, 200}, `max_depth` in {unbounded, 20}, features per node in
/// {sqrt(m), m}. Other settings come from `base`.
pub fn default_grid(base: &EnsembleParams) -> Vec<EnsembleParams> {
    let mut grid = Vec::new();
    for n_trees in [50, 100, 200] {
        for max_depth in [None, Some(20)] {
            for max_features in [MaxFeatures::Sqrt, MaxFeatures::All] {
                grid.push(EnsembleParams {
                    n_trees,
                    tree: TreeParams {
                        max_depth,
                        max_features,
                        ..base.tree
                    },
                    ..*base
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: EnsembleParams,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: EnsembleParams,
    pub best_accuracy: f64,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub rows: Vec<GridRow>,
}

/// Holds out `validation_fraction` of the rows (seeded by `seed`), fits every
/// candidate on the rest and picks the highest validation accuracy; the
/// earliest candidate wins ties.
pub fn grid_search(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    grid: &[EnsembleParams],
    validation_fraction: f64,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty parameter grid".into()));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "validation fraction must lie in (0, 1), got {validation_fraction}"
        )));
    }
    let split = train_test_split(x.n_rows(), 1.0 - validation_fraction, seed)?;
    if split.train_indices.is_empty() || split.test_indices.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "validation split of {} rows leaves an empty side",
            x.n_rows()
        )));
    }
    let train_y: Vec<usize> = split.train_indices.iter().map(|&i| y[i]).collect();
    let val_y: Vec<usize> = split.test_indices.iter().map(|&i| y[i]).collect();
    let train_x = x.select_rows(&split.train_indices);
    let val_x = x.select_rows(&split.test_indices);

    let mut rows = Vec::with_capacity(grid.len());
    for params in grid {
        let model = ExtraTreesModel::fit(&train_x, &train_y, n_classes, params)?;
        let acc = model.accuracy(&val_x, &val_y)?;
        log::info!(
            "grid: trees={} depth={:?} features={} -> {acc:.6}",
            params.n_trees,
            params.tree.max_depth,
            params.tree.max_features
        );
        rows.push(GridRow {
            params: *params,
            validation_accuracy: acc,
        });
    }
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.validation_accuracy > rows[best].validation_accuracy {
            best = i;
        }
    }
    Ok(GridSearchResult {
        best: rows[best].params,
        best_accuracy: rows[best].validation_accuracy,
        train_rows: split.train_indices.len(),
        validation_rows: split.test_indices.len(),
        rows,
    })
}
