//! The full workflow on a generated CSV: train with a held-out split,
//! evaluate, and predict, as the `etg` binary does.
//!
//! ```bash
//! cargo run --release -p etg --example end_to_end
//! ```

use etg::ingest::{load_csv, save_csv, LoadOptions};
use etg::metrics::Averaging;
use etg::pipeline::{self, SplitConfig};
use etg::{synth, EnsembleParams};

fn main() -> etg::Result<()> {
    let dir = std::env::temp_dir().join("etg-end-to-end");
    std::fs::create_dir_all(&dir).map_err(|e| etg::Error::Io { path: dir.clone(), source: e })?;
    let csv = dir.join("flows.csv");
    save_csv(&synth::blob_table(3000, 8, &["Benign", "DDoS", "Mirai"], 1.5, 21), &csv)?;

    let table = load_csv(&csv, &LoadOptions::with_label("label"))?;
    let outcome = pipeline::train(&table, &SplitConfig::default(), &EnsembleParams::default(), Averaging::Weighted)?;
    println!(
        "trained on {} rows in {:.2}s",
        outcome.summary.train_rows, outcome.summary.fit_seconds
    );
    if let Some(m) = &outcome.summary.test_metrics {
        print!("{}", m.to_text());
    }

    let model_path = dir.join("model.etg");
    etg::save_model(&outcome.model, &model_path)?;
    let model = etg::load_model(&model_path)?;

    let held_out = outcome.prepared.cleaned.select_rows(&outcome.prepared.split.test_indices);
    let eval = pipeline::evaluate(&model, &held_out, Averaging::Weighted)?;
    println!("reloaded model accuracy on held-out rows: {:.6}", eval.report.accuracy);

    for p in pipeline::predict(&model, &held_out.select_rows(&[0, 1, 2]))? {
        println!("  {} ({:.2})", p.predicted_class, p.confidence);
    }
    Ok(())
}
