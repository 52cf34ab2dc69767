//! Attack detection for IoT network-flow tables with an ensemble of
//! randomized decision trees.
//!
//! The crate covers the whole workflow:
//!
//! - [`ingest`]: CSV loading with numeric/categorical column inference
//! - [`preprocess`]: deduplication, non-finite scrubbing, z-scoring, label
//!   encoding and the train/test split
//! - [`tree`]: Gini split search and tree induction
//! - [`ensemble`]: bootstrap aggregation, majority voting, grid search
//! - [`metrics`]: confusion matrix, accuracy, precision, recall, F1,
//!   Cohen's kappa, ROC AUC and error rate
//! - [`container`]: the versioned, checksummed `.etg` model file
//! - [`pipeline`] and [`cli`]: the end-to-end driver behind the `etg` binary
//!
//! Runnable programs for each part live in `examples/`:
//!
//! ```bash
//! cargo run --release -p etg --example end_to_end
//! ```

pub mod cli;
pub mod container;
pub mod ensemble;
pub mod error;
pub mod ingest;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod seed;
pub mod synth;
pub mod tree;

pub use container::{load_model, save_model};
pub use ensemble::{bootstrap_indices, grid_search, EnsembleParams, ExtraTreesModel};
pub use error::{Error, Result};
pub use ingest::{load_csv, ColumnKind, ColumnSchema, LoadOptions, RawTable};
pub use matrix::FeatureMatrix;
pub use metrics::{full_report, Averaging, ConfusionMatrix, MetricsReport};
pub use preprocess::{clean, CleanReport, PreprocessModel, SplitSpec};
pub use tree::{build_tree, DecisionTree, MaxFeatures, Splitter, TreeParams};
