//! Acceptance suite. Runs without the libtest harness so every check prints
//! its PASS/FAIL line; the process exits non-zero if any check fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use etg::container::{from_bytes, to_bytes};
use etg::ensemble::{bootstrap_indices, EnsembleParams, ExtraTreesModel};
use etg::ingest::{load_csv, save_csv, Column, LoadOptions, RawTable};
use etg::matrix::FeatureMatrix;
use etg::metrics::{
    accuracy_and_error, binary_auc, cohen_kappa, full_report, roc_auc,
    weighted_precision_recall_f1, Averaging, ConfusionMatrix,
};
use etg::pipeline::{self, SplitConfig};
use etg::preprocess::{apply_standardizer, fit_standardizer};
use etg::seed;
use etg::synth;
use etg::tree::{find_best_split, split_impurity, MaxFeatures, TreeParams};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// Exact fraction `num / den` with `den > 0`.
#[derive(Clone, Copy, Debug)]
struct Frac {
    num: u128,
    den: u128,
}

impl Frac {
    fn less(self, o: Frac) -> bool {
        self.num * o.den < o.num * self.den
    }
    fn eq(self, o: Frac) -> bool {
        self.num * o.den == o.num * self.den
    }
}

/// Weighted Gini of a partition computed from the class proportions
/// directly, as an exact fraction.
fn exact_split_gini(left: &[usize], right: &[usize]) -> Frac {
    // G_side = 1 - sum(c^2)/n^2 ; weighted = sum_side n_side/n * G_side
    // common denominator n * nl^2 * nr^2
    let nl: u128 = left.iter().map(|&c| c as u128).sum();
    let nr: u128 = right.iter().map(|&c| c as u128).sum();
    let n = nl + nr;
    let sq = |v: &[usize]| v.iter().map(|&c| (c as u128).pow(2)).sum::<u128>();
    let gl_num = nl * nl - sq(left);
    let gr_num = nr * nr - sq(right);
    Frac {
        num: gl_num * nr * nr * nl + gr_num * nl * nl * nr,
        den: n * nl * nl * nr * nr,
    }
}

fn partition(rows: &[usize], x: &[Vec<f64>], y: &[usize], f: usize, t: f64, c: usize) -> (Vec<usize>, Vec<usize>) {
    let mut l = vec![0; c];
    let mut r = vec![0; c];
    for &i in rows {
        if x[i][f] <= t {
            l[y[i]] += 1;
        } else {
            r[y[i]] += 1;
        }
    }
    (l, r)
}

fn candidate_thresholds(rows: &[usize], x: &[Vec<f64>], f: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.dedup();
    vals.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
}

/// Reference tree grown by exhaustive enumeration of every
/// `(feature, midpoint)` pair, recursive, with ties broken by lower
/// feature index and then lower threshold.
enum OracleNode {
    Leaf(usize),
    Split { f: usize, t: f64, left: Box<OracleNode>, right: Box<OracleNode> },
}

fn oracle_grow(rows: &[usize], x: &[Vec<f64>], y: &[usize], c: usize) -> OracleNode {
    let mut counts = vec![0; c];
    for &i in rows {
        counts[y[i]] += 1;
    }
    let majority = (0..c).rev().max_by_key(|&k| counts[k]).unwrap();
    if counts.iter().filter(|&&k| k > 0).count() <= 1 || rows.len() < 2 {
        return OracleNode::Leaf(majority);
    }
    let mut best: Option<(Frac, usize, f64)> = None;
    for f in 0..x[0].len() {
        for t in candidate_thresholds(rows, x, f) {
            let (l, r) = partition(rows, x, y, f, t, c);
            let g = exact_split_gini(&l, &r);
            let better = match best {
                None => true,
                Some((bg, bf, bt)) => g.less(bg) || (g.eq(bg) && (f, t) < (bf, bt)),
            };
            if better {
                best = Some((g, f, t));
            }
        }
    }
    let Some((_, f, t)) = best else {
        return OracleNode::Leaf(majority);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= t);
    OracleNode::Split {
        f,
        t,
        left: Box::new(oracle_grow(&l, x, y, c)),
        right: Box::new(oracle_grow(&r, x, y, c)),
    }
}

fn oracle_predict(node: &OracleNode, row: &[f64]) -> usize {
    match node {
        OracleNode::Leaf(c) => *c,
        OracleNode::Split { f, t, left, right } => {
            if row[*f] <= *t {
                oracle_predict(left, row)
            } else {
                oracle_predict(right, row)
            }
        }
    }
}

/// Features on a coarse grid so duplicate values and exact impurity ties
/// are common.
fn random_dataset(rng: &mut seed::Rng, n: usize, m: usize, c: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let levels: Vec<u32> = (0..m).map(|_| rng.random_range(2..40)).collect();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| levels.iter().map(|&l| f64::from(rng.random_range(0..l)) / 4.0).collect())
        .collect();
    let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    (x, y)
}

fn oracle_tree_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = seed::rng(1);
    let mut checked = 0usize;
    let mut disagreements = 0usize;
    for d in 0..20 {
        let n = rng.random_range(2..=200);
        let m = rng.random_range(1..=6);
        let c = rng.random_range(2..=4);
        let (rows, y) = random_dataset(&mut rng, n, m, c);
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let params = EnsembleParams {
            n_trees: 1,
            tree: TreeParams {
                max_features: MaxFeatures::All,
                ..TreeParams::default()
            },
            bootstrap: false,
            seed: d,
        };
        let model = ExtraTreesModel::fit(&x, &y, c, &params).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let oracle = oracle_grow(&all, &rows, &y, c);

        let mut queries = rows.clone();
        for _ in 0..200 {
            queries.push((0..m).map(|_| f64::from(rng.random_range(-2..45)) / 8.0).collect());
        }
        for q in &queries {
            checked += 1;
            if model.predict(q).unwrap() != oracle_predict(&oracle, q) {
                disagreements += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    verdict(
        disagreements == 0 && elapsed < Duration::from_secs(30),
        format!("20 datasets, {checked} queries, {disagreements} disagreements, {elapsed:.2?}"),
    )
}

fn split_argmin() -> Outcome {
    let mut rng = seed::rng(2);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n_rows = rng.random_range(2..=80);
        let m = rng.random_range(1..=6);
        let c = rng.random_range(1..=4);
        let (rows, y) = random_dataset(&mut rng, n_rows, m, c);
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let mut node: Vec<usize> = (0..n_rows).collect();
        node.shuffle(&mut rng);
        node.truncate(rng.random_range(1..=50.min(n_rows)));
        let mut features: Vec<usize> = (0..m).collect();
        features.shuffle(&mut rng);
        features.truncate(rng.random_range(1..=m));
        features.sort_unstable();

        let mut brute: Option<(f64, Frac)> = None;
        for &f in &features {
            for t in candidate_thresholds(&node, &rows, f) {
                let (l, r) = partition(&node, &rows, &y, f, t, c);
                let imp = split_impurity(&l, &r).unwrap();
                let exact = exact_split_gini(&l, &r);
                brute = Some(match brute {
                    Some((bi, be)) => (bi.min(imp), if exact.less(be) { exact } else { be }),
                    None => (imp, exact),
                });
            }
        }
        let got = find_best_split(&node, &features, &x, &y, c);
        let ok = match (got, brute) {
            (None, None) => true,
            (Some(s), Some((imp, exact))) => {
                let (l, r) = partition(&node, &rows, &y, s.feature, s.threshold, c);
                s.impurity == imp && exact_split_gini(&l, &r).eq(exact)
            }
            _ => false,
        };
        if !ok {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("200 nodes, {mismatches} mismatches"))
}

fn metric_formulas() -> Outcome {
    let cm_rows = [[3u64, 1], [0, 2]];
    let mut y_true = Vec::new();
    let mut y_pred = Vec::new();
    for (t, row) in cm_rows.iter().enumerate() {
        for (p, &k) in row.iter().enumerate() {
            for _ in 0..k {
                y_true.push(t);
                y_pred.push(p);
            }
        }
    }
    let scores: Vec<Vec<f64>> = y_pred.iter().map(|&p| if p == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect();
    let classes = vec!["a".to_string(), "b".to_string()];
    let r = full_report(&y_true, &y_pred, &scores, &classes, Averaging::Weighted).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let mut failures = Vec::new();
    for (name, got, want) in [
        ("accuracy", r.accuracy, 5.0 / 6.0),
        ("precision", r.precision, 8.0 / 9.0),
        ("recall", r.recall, 5.0 / 6.0),
        ("f1", r.f1, 88.0 / 105.0),
        ("kappa", r.cohen_kappa, 2.0 / 3.0),
        ("error", r.error_rate, 1.0 / 6.0),
    ] {
        if !close(got, want) {
            failures.push(format!("{name}={got} want {want}"));
        }
    }
    if (r.f1 - 0.838095).abs() > 5e-7 {
        failures.push(format!("f1={} not ~0.838095", r.f1));
    }
    let auc = binary_auc(&[false, false, true, true], &[0.1, 0.4, 0.35, 0.8]);
    if auc != Some(0.75) {
        failures.push(format!("auc={auc:?}"));
    }
    verdict(failures.is_empty(), if failures.is_empty() { "all seven metrics exact".into() } else { failures.join("; ") })
}

fn metric_identities() -> Outcome {
    let mut rng = seed::rng(4);
    let mut failures = Vec::new();
    let mut kappa_cases = 0;
    for i in 0..1500 {
        let c = rng.random_range(2..=5);
        let diagonal = i % 4 == 0;
        let rows: Vec<Vec<u64>> = (0..c)
            .map(|t| {
                (0..c)
                    .map(|p| if diagonal && t != p { 0 } else { rng.random_range(0..30) })
                    .collect()
            })
            .collect();
        let cm = ConfusionMatrix::from_rows(&rows).unwrap();
        if cm.total() == 0 {
            continue;
        }
        let (acc, err) = accuracy_and_error(&cm).unwrap();
        if err != 1.0 - acc {
            failures.push(format!("error identity at case {i}"));
        }
        let prf = weighted_precision_recall_f1(&cm).unwrap();
        if (prf.recall - acc).abs() > 1e-12 {
            failures.push(format!("recall {} != accuracy {acc} at case {i}", prf.recall));
        }
        let nonempty = (0..c).filter(|&k| cm.row_sum(k) > 0).count();
        if nonempty >= 2 {
            kappa_cases += 1;
            let is_diag = cm.trace() == cm.total();
            let k = cohen_kappa(&cm).unwrap();
            if (k == 1.0) != is_diag {
                failures.push(format!("kappa {k} diagonal={is_diag} at case {i}"));
            }
        }
    }
    for i in 0..1000 {
        let n = rng.random_range(2..60);
        let c = rng.random_range(2..=4);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..c).map(|_| f64::from(rng.random_range(0..21)) / 20.0).collect())
            .collect();
        let warped: Vec<Vec<f64>> = scores
            .iter()
            .map(|s| s.iter().map(|&v| v.powi(3) * 7.0 + 2.0 * v - 5.0).collect())
            .collect();
        let a = roc_auc(&y, &scores, c);
        let b = roc_auc(&y, &warped, c);
        match (a, b) {
            (Ok(a), Ok(b)) if a.per_class == b.per_class && a.weighted == b.weighted => {}
            (Err(_), Err(_)) => {}
            _ => failures.push(format!("auc not invariant at case {i}")),
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("1500 matrices ({kappa_cases} kappa cases), 1000 score sets")
        } else {
            failures.into_iter().take(5).collect::<Vec<_>>().join("; ")
        },
    )
}

fn standardization() -> Outcome {
    let mut rng = seed::rng(5);
    let mut worst_mean = 0f64;
    let mut worst_std = 0f64;
    let mut constant_ok = true;
    for _ in 0..50 {
        let n = rng.random_range(5..400);
        let m = rng.random_range(1..6);
        let mut cols: Vec<(String, Column)> = (0..m)
            .map(|f| {
                let scale = 10f64.powi(rng.random_range(-3..4));
                let offset = scale * rng.random_range(-1e4..1e4);
                let v = (0..n).map(|_| Some(offset + scale * rng.random::<f64>())).collect();
                (format!("f{f}"), Column::Numeric(v))
            })
            .collect();
        cols.push(("flat".into(), Column::Numeric(vec![Some(3.5); n])));
        let table = RawTable::new(cols, None).unwrap();
        let train: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.7)).collect();
        if train.is_empty() {
            continue;
        }
        let st = fit_standardizer(&table, &train).unwrap();
        let out = apply_standardizer(&st, &table).unwrap().select_rows(&train);
        let constant: Vec<&str> = st.constant_columns().collect();
        for name in out.column_names() {
            let v: Vec<f64> = out.column(name).unwrap().as_numeric().unwrap().iter().map(|c| c.unwrap()).collect();
            let k = v.len() as f64;
            let mean = v.iter().sum::<f64>() / k;
            let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k).sqrt();
            if constant.contains(&name) {
                constant_ok &= v.iter().all(|&x| x == 0.0);
            } else {
                worst_mean = worst_mean.max(mean.abs());
                worst_std = worst_std.max((std - 1.0).abs());
            }
        }
        constant_ok &= constant.contains(&"flat");
    }
    verdict(
        worst_mean < 1e-9 && worst_std < 1e-9 && constant_ok,
        format!("max |mean| {worst_mean:.2e}, max |std-1| {worst_std:.2e}, constant columns map to 0: {constant_ok}"),
    )
}

fn synthetic_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("blobs.csv");
    save_csv(&synth::blob_table(3000, 8, &["Benign", "DDoS", "Mirai"], 1.0, 6), &csv).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let started = Instant::now();
    let report = pool.install(|| {
        let table = load_csv(&csv, &LoadOptions::with_label("label")).unwrap();
        pipeline::train(&table, &SplitConfig::default(), &EnsembleParams::default(), Averaging::Weighted)
            .unwrap()
            .summary
            .test_metrics
            .unwrap()
    });
    let elapsed = started.elapsed();
    verdict(
        report.accuracy >= 0.99 && report.f1 >= 0.99 && report.cohen_kappa >= 0.985 && elapsed < Duration::from_secs(10),
        format!(
            "accuracy {:.5}, f1 {:.5}, kappa {:.5}, {elapsed:.2?} on 1 thread",
            report.accuracy, report.f1, report.cohen_kappa
        ),
    )
}

fn determinism() -> Outcome {
    let table = synth::blob_table(1500, 6, &["a", "b", "c", "d"], 3.0, 7);
    let train_at = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            pipeline::train(&table, &SplitConfig::default(), &EnsembleParams::default(), Averaging::Weighted)
                .unwrap()
                .model
        })
    };
    let max = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let serial = to_bytes(&train_at(1));
    let parallel = to_bytes(&train_at(max));
    let identical = serial == parallel;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.etg");
    let model = from_bytes(&parallel).unwrap();
    etg::save_model(&model, &path).unwrap();
    let loaded = etg::load_model(&path).unwrap();
    let mut rng = seed::rng(7);
    let rows: Vec<Vec<f64>> = (0..1000).map(|_| (0..6).map(|_| rng.random_range(-4.0..4.0)).collect()).collect();
    let x = FeatureMatrix::from_rows(&rows).unwrap();
    let same_preds = model.predict_batch(&x).unwrap() == loaded.predict_batch(&x).unwrap();
    let same_shares = model.vote_shares_batch(&x).unwrap() == loaded.vote_shares_batch(&x).unwrap();
    verdict(
        identical && same_preds && same_shares,
        format!(
            "1 vs {max} threads byte-identical: {identical} ({} bytes); roundtrip predictions equal: {same_preds}, vote shares equal: {same_shares}",
            serial.len()
        ),
    )
}

fn bootstrap_statistics() -> Outcome {
    let n = 10_000;
    let mut total = 0.0;
    for s in 0..30u64 {
        let mut idx = bootstrap_indices(n, seed::derive(99, s)).unwrap();
        idx.sort_unstable();
        idx.dedup();
        total += idx.len() as f64 / n as f64;
    }
    let mean = total / 30.0;
    verdict((mean - 0.632).abs() <= 0.02, format!("mean distinct fraction {mean:.4} over 30 seeds"))
}

const EXTERNAL_CSV: &str = "ETG_CICIOT2023_CSV";
const EXTERNAL_LABEL: &str = "ETG_CICIOT2023_LABEL";

fn external_binary() -> Outcome {
    let Some(path) = std::env::var_os(EXTERNAL_CSV).map(PathBuf::from) else {
        return Outcome::Skip(format!("set {EXTERNAL_CSV} to a CICIoT2023 CSV to run"));
    };
    let label = std::env::var(EXTERNAL_LABEL).unwrap_or_else(|_| "label".into());
    let table = match load_csv(&path, &LoadOptions::with_label(&label)) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(format!("cannot load {}: {e}", path.display())),
    };
    let mut rows: Vec<usize> = (0..table.row_count()).collect();
    rows.shuffle(&mut seed::rng(9));
    rows.truncate(100_000);
    rows.sort_unstable();
    let sample = table.select_rows(&rows);
    let binary: Vec<Option<String>> = sample
        .column(&label)
        .unwrap()
        .as_categorical()
        .unwrap()
        .iter()
        .map(|v| v.as_ref().map(|s| if s.to_ascii_lowercase().contains("benign") { "Benign" } else { "Attack" }.to_string()))
        .collect();
    let cols: Vec<(String, Column)> = sample
        .column_names()
        .map(|n| {
            let col = if n == label { Column::Categorical(binary.clone()) } else { sample.column(n).unwrap().clone() };
            (n.to_string(), col)
        })
        .collect();
    let sample = RawTable::new(cols, Some(label)).unwrap();
    match pipeline::train(&sample, &SplitConfig::default(), &EnsembleParams::default(), Averaging::Weighted) {
        Ok(out) => {
            let m = out.summary.test_metrics.unwrap();
            verdict(m.accuracy >= 0.99, format!("{} rows, test accuracy {:.5}", sample.row_count(), m.accuracy))
        }
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn main() {
    // libtest-style flags such as --nocapture may be passed by cargo
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let checks: [(&str, Check); 9] = [
        ("oracle tree equivalence", oracle_tree_equivalence),
        ("split argmin", split_argmin),
        ("metric formulas", metric_formulas),
        ("metric identities", metric_identities),
        ("standardization", standardization),
        ("synthetic end to end", synthetic_end_to_end),
        ("determinism and roundtrip", determinism),
        ("bootstrap statistics", bootstrap_statistics),
        ("external binary detection", external_binary),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::Fail(format!("panicked: {msg}"))
            });
        let (status, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("acceptance {}: {name}: {status} ({detail})", i + 1);
    }
    if failed > 0 {
        println!("acceptance: {failed} failed");
        std::process::exit(1);
    }
}
