//! Confusion matrix and classification metrics: accuracy, precision,
//! recall, F1, Cohen's kappa, one-vs-rest ROC AUC and error rate.
//!
//! Multiclass precision, recall and F1 are per-class values averaged with
//! weights equal to each class's support (its number of true instances).
//! With that weighting aggregate recall always equals accuracy.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(ConfusionMatrix {
            n_classes: n,
            counts: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    /// True instances of class `c` (its support).
    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|p| self.get(c, p)).sum()
    }

    /// Predictions of class `c`.
    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|t| self.get(t, c)).sum()
    }

    pub fn true_positives(&self, c: usize) -> u64 {
        self.get(c, c)
    }

    pub fn false_negatives(&self, c: usize) -> u64 {
        self.row_sum(c) - self.get(c, c)
    }

    pub fn false_positives(&self, c: usize) -> u64 {
        self.col_sum(c) - self.get(c, c)
    }

    pub fn true_negatives(&self, c: usize) -> u64 {
        self.total() - self.get(c, c) - self.false_negatives(c) - self.false_positives(c)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.n_classes.max(1))
    }

    /// CSV with a header of predicted class names and one row per true class.
    pub fn to_csv(&self, classes: &[String]) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(classes.iter().cloned());
        wtr.write_record(&header).expect("in-memory write");
        for (c, row) in self.rows().enumerate() {
            let mut rec = vec![classes.get(c).cloned().unwrap_or_else(|| c.to_string())];
            rec.extend(row.iter().map(u64::to_string));
            wtr.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    fn nonempty(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::EmptyRows),
            n => Ok(n as f64),
        }
    }
}

pub fn build_confusion(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.is_empty() {
        return Err(Error::EmptyRows);
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    let mut counts = vec![0u64; n_classes * n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for id in [t, p] {
            if id >= n_classes {
                return Err(Error::ClassOutOfRange {
                    id,
                    classes: n_classes,
                });
            }
        }
        counts[t * n_classes + p] += 1;
    }
    Ok(ConfusionMatrix { n_classes, counts })
}

/// `(trace / N, 1 − trace / N)`.
pub fn accuracy_and_error(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    let n = cm.nonempty()?;
    let accuracy = cm.trace() as f64 / n;
    Ok((accuracy, 1.0 - accuracy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRecallF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassScores>,
    /// Per-class precision or recall values that hit a zero denominator and
    /// were set to 0.
    pub zero_division: usize,
}

fn ratio(num: u64, den: u64, zero_division: &mut usize) -> f64 {
    if den == 0 {
        *zero_division += 1;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn per_class_scores(cm: &ConfusionMatrix) -> (Vec<ClassScores>, usize) {
    let mut zero_division = 0;
    let scores = (0..cm.n_classes())
        .map(|c| {
            let tp = cm.true_positives(c);
            let precision = ratio(tp, cm.col_sum(c), &mut zero_division);
            let recall = ratio(tp, cm.row_sum(c), &mut zero_division);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScores {
                support: cm.row_sum(c),
                precision,
                recall,
                f1,
            }
        })
        .collect();
    (scores, zero_division)
}

/// Support-weighted precision, recall and F1 (F1 is the weighted mean of
/// per-class F1). Zero denominators yield 0.
pub fn weighted_precision_recall_f1(cm: &ConfusionMatrix) -> Result<PrecisionRecallF1> {
    let n = cm.nonempty()?;
    let (per_class, zero_division) = per_class_scores(cm);
    let weighted = |f: fn(&ClassScores) -> f64| {
        per_class.iter().map(|s| s.support as f64 * f(s)).sum::<f64>() / n
    };
    Ok(PrecisionRecallF1 {
        precision: weighted(|s| s.precision),
        recall: weighted(|s| s.recall),
        f1: weighted(|s| s.f1),
        zero_division,
        per_class,
    })
}

/// Unweighted mean over classes that occur in the truth or the predictions.
pub fn macro_precision_recall_f1(cm: &ConfusionMatrix) -> Result<PrecisionRecallF1> {
    cm.nonempty()?;
    let (per_class, zero_division) = per_class_scores(cm);
    let present: Vec<&ClassScores> = per_class
        .iter()
        .enumerate()
        .filter(|(c, _)| cm.row_sum(*c) + cm.col_sum(*c) > 0)
        .map(|(_, s)| s)
        .collect();
    let k = present.len() as f64;
    let mean = |f: fn(&ClassScores) -> f64| present.iter().map(|s| f(s)).sum::<f64>() / k;
    Ok(PrecisionRecallF1 {
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        zero_division,
        per_class,
    })
}

/// `(P_o − P_e) / (1 − P_e)`; when `P_e = 1` the result is 1 if `P_o = 1`
/// and 0 otherwise.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonempty()?;
    let observed = cm.trace() as f64 / n;
    let expected = (0..cm.n_classes())
        .map(|c| cm.row_sum(c) as f64 * cm.col_sum(c) as f64)
        .sum::<f64>()
        / (n * n);
    if expected == 1.0 {
        return Ok(if observed == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((observed - expected) / (1.0 - expected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    /// Support-weighted mean over classes with a defined AUC.
    pub weighted: f64,
    /// Unweighted mean over classes with a defined AUC.
    pub macro_average: f64,
    pub per_class: Vec<Option<f64>>,
}

/// Area under the one-vs-rest ROC curve of one class: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half. Computed from midranks in `O(R log R)`.
pub fn binary_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let midrank = (i + j + 2) as f64 / 2.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| positive[k]).count();
        rank_sum += midrank * tied_pos as f64;
        i = j + 1;
    }
    let p = n_pos as f64;
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

/// One-vs-rest AUC per class from per-row class scores.
pub fn roc_auc(y_true: &[usize], scores: &[Vec<f64>], n_classes: usize) -> Result<AucResult> {
    if y_true.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| s.len() != n_classes) {
        return Err(Error::DimensionMismatch {
            expected: n_classes,
            found: bad.len(),
        });
    }
    if let Some(&id) = y_true.iter().find(|&&c| c >= n_classes) {
        return Err(Error::ClassOutOfRange {
            id,
            classes: n_classes,
        });
    }
    let per_class: Vec<Option<f64>> = (0..n_classes)
        .map(|c| {
            let positive: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
            let col: Vec<f64> = scores.iter().map(|s| s[c]).collect();
            binary_auc(&positive, &col)
        })
        .collect();
    let mut weight = 0.0;
    let mut weighted = 0.0;
    let mut defined = 0.0;
    let mut sum = 0.0;
    for (c, auc) in per_class.iter().enumerate() {
        if let Some(a) = auc {
            let support = y_true.iter().filter(|&&t| t == c).count() as f64;
            weighted += support * a;
            weight += support;
            sum += a;
            defined += 1.0;
        }
    }
    if defined == 0.0 {
        return Err(Error::AucUndefined);
    }
    Ok(AucResult {
        weighted: weighted / weight,
        macro_average: sum / defined,
        per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Weighted,
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

/// All seven headline metrics plus the per-class breakdown. Serializes to
/// JSON with exactly the keys `accuracy`, `precision`, `recall`, `f1`,
/// `cohen_kappa`, `auc`, `error_rate`, `per_class` and `averaging`; an
/// undefined AUC is `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub cohen_kappa: f64,
    pub auc: Option<f64>,
    pub error_rate: f64,
    pub per_class: Vec<ClassReport>,
    pub averaging: Averaging,
    #[serde(skip)]
    pub confusion: Option<ConfusionMatrix>,
    /// Harmonic mean of the aggregate precision and recall.
    #[serde(skip)]
    pub f1_of_aggregates: f64,
    #[serde(skip)]
    pub zero_division: usize,
}

pub fn full_report(
    y_true: &[usize],
    y_pred: &[usize],
    scores: &[Vec<f64>],
    classes: &[String],
    averaging: Averaging,
) -> Result<MetricsReport> {
    let c = classes.len();
    let cm = build_confusion(y_true, y_pred, c)?;
    let (accuracy, error_rate) = accuracy_and_error(&cm)?;
    let prf = match averaging {
        Averaging::Weighted => weighted_precision_recall_f1(&cm)?,
        Averaging::Macro => macro_precision_recall_f1(&cm)?,
    };
    let cohen_kappa = cohen_kappa(&cm)?;
    let auc = match roc_auc(y_true, scores, c) {
        Ok(a) => Some(a),
        Err(Error::AucUndefined) => None,
        Err(e) => return Err(e),
    };
    if prf.zero_division > 0 {
        log::warn!(
            "{} precision/recall values had a zero denominator and were set to 0",
            prf.zero_division
        );
    }
    let per_class = classes
        .iter()
        .zip(&prf.per_class)
        .enumerate()
        .map(|(i, (name, s))| ClassReport {
            class: name.clone(),
            support: s.support,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            auc: auc.as_ref().and_then(|a| a.per_class[i]),
        })
        .collect();
    let f1_of_aggregates = if prf.precision + prf.recall == 0.0 {
        0.0
    } else {
        2.0 * prf.precision * prf.recall / (prf.precision + prf.recall)
    };
    Ok(MetricsReport {
        accuracy,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        cohen_kappa,
        auc: auc.map(|a| match averaging {
            Averaging::Weighted => a.weighted,
            Averaging::Macro => a.macro_average,
        }),
        error_rate,
        per_class,
        averaging,
        confusion: Some(cm),
        f1_of_aggregates,
        zero_division: prf.zero_division,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"))
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The seven headline numbers, one per line.
    pub fn headline(&self) -> String {
        format!(
            "accuracy     {:.6}\nprecision    {:.6}\nrecall       {:.6}\nf1           {:.6}\ncohen_kappa  {:.6}\nauc          {}\nerror_rate   {:.6}\n",
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.cohen_kappa,
            fmt_opt(self.auc),
            self.error_rate
        )
    }

    /// Headline numbers followed by the per-class table.
    pub fn to_text(&self) -> String {
        let mut s = format!("averaging: {:?}\n", self.averaging).to_lowercase();
        s.push_str(&self.headline());
        let width = self.per_class.iter().map(|c| c.class.len()).max().unwrap_or(5).max(9);
        let _ = writeln!(
            s,
            "\n{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}",
            "class", "support", "precision", "recall", "f1", "auc"
        );
        for c in &self.per_class {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9}",
                c.class,
                c.support,
                c.precision,
                c.recall,
                c.f1,
                fmt_opt(c.auc)
            );
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>9.6}  {:>9.6}  {:>9.6}  {:>9}",
            "aggregate",
            self.per_class.iter().map(|c| c.support).sum::<u64>(),
            self.precision,
            self.recall,
            self.f1,
            fmt_opt(self.auc)
        );
        let _ = writeln!(s, "f1 from aggregate precision/recall: {:.6}", self.f1_of_aggregates);
        if self.zero_division > 0 {
            let _ = writeln!(s, "zero-denominator precision/recall values: {}", self.zero_division);
        }
        s
    }
}
