//! Seeded Gaussian-blob data for examples, tests and benchmarks.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::ingest::{Column, RawTable};
use crate::matrix::FeatureMatrix;
use crate::seed;

/// `n_rows` points in `n_features` dimensions; row `i` belongs to class
/// `i % n_classes`. Class centers are uniform in `[-10, 10]^d` and points
/// are isotropic normal around them with standard deviation `spread`.
pub fn gaussian_blobs(
    n_rows: usize,
    n_features: usize,
    n_classes: usize,
    spread: f64,
    seed: u64,
) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..n_features).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let noise = Normal::new(0.0, spread).expect("spread must be finite and non-negative");
    let y: Vec<usize> = (0..n_rows).map(|i| i % n_classes).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&c| centers[c].iter().map(|m| m + noise.sample(&mut rng)).collect())
        .collect();
    let x = FeatureMatrix::from_rows(&rows).expect("rows are rectangular");
    (x, y)
}

/// [`gaussian_blobs`] as a table with columns `f0..f{d-1}` and a text
/// `label` column holding `class_names[y]`.
pub fn blob_table(
    n_rows: usize,
    n_features: usize,
    class_names: &[&str],
    spread: f64,
    seed: u64,
) -> RawTable {
    let (x, y) = gaussian_blobs(n_rows, n_features, class_names.len(), spread, seed);
    let mut cols: Vec<(String, Column)> = (0..n_features)
        .map(|f| {
            (
                format!("f{f}"),
                Column::Numeric(x.column(f).iter().map(|&v| Some(v)).collect()),
            )
        })
        .collect();
    cols.push((
        "label".into(),
        Column::Categorical(y.iter().map(|&c| Some(class_names[c].to_string())).collect()),
    ));
    RawTable::new(cols, Some("label".into())).expect("generated columns are consistent")
}
