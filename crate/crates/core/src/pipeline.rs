//! End-to-end workflow: clean → split → fit transforms on the training rows
//! → encode both splits → fit the ensemble → evaluate on the test rows.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::ensemble::{EnsembleParams, ExtraTreesModel};
use crate::error::{Error, Result};
use crate::ingest::{Column, RawTable};
use crate::matrix::FeatureMatrix;
use crate::metrics::{full_report, Averaging, MetricsReport};
use crate::preprocess::{
    clean, drop_incomplete_rows, stratified_split, train_test_split, CleanReport, PreprocessModel,
    SplitSpec,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.7,
            seed: 42,
            stratified: false,
        }
    }
}

/// A cleaned, split and encoded dataset ready for training.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub clean_report: CleanReport,
    pub cleaned: RawTable,
    pub split: SplitSpec,
    pub preprocess: PreprocessModel,
    pub train_x: FeatureMatrix,
    pub train_y: Vec<usize>,
    pub test_x: FeatureMatrix,
    pub test_y: Vec<usize>,
}

impl Prepared {
    pub fn n_classes(&self) -> usize {
        self.preprocess.classes().len()
    }
}

fn label_groups(table: &RawTable) -> Result<Vec<usize>> {
    let label = table
        .label_column()
        .ok_or_else(|| Error::InvalidParameter("no label column".into()))?;
    let Some(Column::Categorical(v)) = table.column(label) else {
        return Err(Error::ColumnMismatch(format!("label column `{label}` is not categorical")));
    };
    let vocab: BTreeSet<&str> = v.iter().flatten().map(String::as_str).collect();
    let vocab: Vec<&str> = vocab.into_iter().collect();
    Ok(v.iter()
        .map(|c| vocab.binary_search(&c.as_deref().unwrap_or("")).unwrap_or(0))
        .collect())
}

/// Cleans `table`, splits it, fits the standardizer and encoder on the
/// training rows only, and encodes both splits.
///
/// Test rows whose categorical values never appear in the training rows
/// cannot be encoded and fail with [`Error::UnseenCategory`].
pub fn prepare(table: &RawTable, split: &SplitConfig) -> Result<Prepared> {
    if table.label_column().is_none() {
        return Err(Error::InvalidParameter("a label column is required".into()));
    }
    let (cleaned, clean_report) = clean(table);
    log::info!(
        "clean: {} duplicates removed, {} non-finite cells, {} incomplete rows dropped, {} rows remain",
        clean_report.duplicates_removed,
        clean_report.nonfinite_cells_marked,
        clean_report.rows_dropped_missing,
        clean_report.rows_remaining
    );
    let plan = if split.stratified {
        stratified_split(&label_groups(&cleaned)?, split.train_fraction, split.seed)?
    } else {
        train_test_split(cleaned.row_count(), split.train_fraction, split.seed)?
    };
    log::info!(
        "split: {} train / {} test (seed {})",
        plan.train_indices.len(),
        plan.test_indices.len(),
        plan.seed
    );
    let preprocess = PreprocessModel::fit(&cleaned, &plan)?;
    for name in preprocess.standardizer.constant_columns() {
        log::warn!("column `{name}` is constant on the training rows and maps to 0");
    }
    let train = cleaned.select_rows(&plan.train_indices);
    let test = cleaned.select_rows(&plan.test_indices);
    let train_x = preprocess.transform_features(&train)?;
    let train_y = preprocess.transform_labels(&train)?;
    let (test_x, test_y) = if test.row_count() == 0 {
        (train_x.select_rows(&[]), Vec::new())
    } else {
        (
            preprocess.transform_features(&test)?,
            preprocess.transform_labels(&test)?,
        )
    };
    Ok(Prepared {
        clean_report,
        cleaned,
        split: plan,
        preprocess,
        train_x,
        train_y,
        test_x,
        test_y,
    })
}

/// Fits an ensemble on prepared data, attaching class names, feature names
/// and the preprocess model.
pub fn fit_prepared(prepared: &Prepared, params: &EnsembleParams) -> Result<ExtraTreesModel> {
    ExtraTreesModel::fit(
        &prepared.train_x,
        &prepared.train_y,
        prepared.n_classes(),
        params,
    )?
    .with_classes(prepared.preprocess.classes().to_vec())?
    .with_feature_names(prepared.preprocess.feature_names.clone())
    .map(|m| m.with_preprocess(prepared.preprocess.clone()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub clean: CleanReport,
    pub train_rows: usize,
    pub test_rows: usize,
    pub n_features: usize,
    pub classes: Vec<String>,
    pub constant_columns: Vec<String>,
    pub params: EnsembleParams,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub stratified: bool,
    pub test_metrics: Option<MetricsReport>,
    pub fit_seconds: f64,
    pub total_seconds: f64,
}

pub struct TrainOutcome {
    pub model: ExtraTreesModel,
    pub prepared: Prepared,
    pub summary: TrainSummary,
}

/// Full training run; the held-out split is scored when it is non-empty.
pub fn train(
    table: &RawTable,
    split: &SplitConfig,
    params: &EnsembleParams,
    averaging: Averaging,
) -> Result<TrainOutcome> {
    let started = Instant::now();
    let prepared = prepare(table, split)?;
    let fit_started = Instant::now();
    let model = fit_prepared(&prepared, params)?;
    let fit_seconds = fit_started.elapsed().as_secs_f64();
    log::info!("fit: {} trees in {fit_seconds:.3}s", params.n_trees);

    let test_metrics = if prepared.test_y.is_empty() {
        None
    } else {
        Some(score(&model, &prepared.test_x, &prepared.test_y, averaging)?)
    };
    let summary = TrainSummary {
        clean: prepared.clean_report,
        train_rows: prepared.train_y.len(),
        test_rows: prepared.test_y.len(),
        n_features: prepared.train_x.n_features(),
        classes: prepared.preprocess.classes().to_vec(),
        constant_columns: prepared
            .preprocess
            .standardizer
            .constant_columns()
            .map(String::from)
            .collect(),
        params: *params,
        split_seed: prepared.split.seed,
        train_fraction: prepared.split.train_fraction,
        stratified: prepared.split.stratified,
        test_metrics,
        fit_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        model,
        prepared,
        summary,
    })
}

/// Metrics of `model` on already-encoded rows.
pub fn score(
    model: &ExtraTreesModel,
    x: &FeatureMatrix,
    y: &[usize],
    averaging: Averaging,
) -> Result<MetricsReport> {
    let pred = model.predict_batch(x)?;
    let shares = model.vote_shares_batch(x)?;
    full_report(y, &pred, &shares, model.classes(), averaging)
}

fn preprocess_of(model: &ExtraTreesModel) -> Result<&PreprocessModel> {
    model
        .preprocess()
        .ok_or_else(|| Error::Format("model carries no preprocess section".into()))
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub rows_evaluated: usize,
    pub rows_dropped: usize,
}

/// Scores a model on a raw labeled table using the model's own transforms.
/// Rows with missing or non-finite cells are dropped first.
pub fn evaluate(model: &ExtraTreesModel, table: &RawTable, averaging: Averaging) -> Result<Evaluation> {
    let pre = preprocess_of(model)?;
    if table.column(&pre.label_column).is_none() {
        return Err(Error::MissingLabelColumn(pre.label_column.clone()));
    }
    // check the schema before any rows are dropped so mismatches surface even
    // on tables that would clean to nothing
    for name in &pre.feature_names {
        if table.column(name).is_none() {
            return Err(Error::ColumnMismatch(format!(
                "model feature `{name}` missing from input"
            )));
        }
    }
    let (complete, _, rows_dropped) = drop_incomplete_rows(table);
    if rows_dropped > 0 {
        log::warn!("evaluate: dropped {rows_dropped} rows with missing or non-finite cells");
    }
    let x = pre.transform_features(&complete)?;
    let y = pre.transform_labels(&complete)?;
    let report = score(model, &x, &y, averaging)?;
    Ok(Evaluation {
        report,
        rows_evaluated: y.len(),
        rows_dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub predicted_class: String,
    pub confidence: f64,
}

/// One prediction per input row: the decoded class and its vote share.
pub fn predict(model: &ExtraTreesModel, table: &RawTable) -> Result<Vec<Prediction>> {
    let pre = preprocess_of(model)?;
    if table.row_count() == 0 {
        for name in &pre.feature_names {
            if table.column(name).is_none() {
                return Err(Error::ColumnMismatch(format!(
                    "model feature `{name}` missing from input"
                )));
            }
        }
        return Ok(Vec::new());
    }
    let x = pre.transform_features(table)?;
    let shares = model.vote_shares_batch(&x)?;
    let preds = model.predict_batch(&x)?;
    Ok(preds
        .into_iter()
        .zip(shares)
        .map(|(p, s)| Prediction {
            predicted_class: model.classes()[p].clone(),
            confidence: s[p],
        })
        .collect())
}
