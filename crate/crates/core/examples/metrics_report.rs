//! Compute the full metrics report from predictions and vote shares.
//!
//! ```bash
//! cargo run -p etg --example metrics_report
//! ```

use etg::metrics::{build_confusion, cohen_kappa, full_report, Averaging};

fn main() -> etg::Result<()> {
    let classes: Vec<String> = ["Benign", "DDoS", "Mirai"].map(String::from).to_vec();
    let y_true = [0, 0, 0, 1, 1, 1, 1, 2, 2, 2];
    let y_pred = [0, 0, 1, 1, 1, 1, 1, 2, 2, 0];
    let scores: Vec<Vec<f64>> = y_pred
        .iter()
        .map(|&p| (0..3).map(|c| if c == p { 0.8 } else { 0.1 }).collect())
        .collect();

    let cm = build_confusion(&y_true, &y_pred, 3)?;
    print!("{}", cm.to_csv(&classes));
    println!("kappa {:.4}\n", cohen_kappa(&cm)?);

    let weighted = full_report(&y_true, &y_pred, &scores, &classes, Averaging::Weighted)?;
    print!("{}", weighted.to_text());
    let macro_avg = full_report(&y_true, &y_pred, &scores, &classes, Averaging::Macro)?;
    println!("\nmacro f1 {:.4} vs weighted f1 {:.4}", macro_avg.f1, weighted.f1);
    println!("{}", weighted.to_json());
    Ok(())
}
