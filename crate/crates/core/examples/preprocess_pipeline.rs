//! Split a table, fit the standardizer and label encoder on the training
//! rows, and encode both splits.
//!
//! ```bash
//! cargo run -p etg --example preprocess_pipeline
//! ```

use etg::preprocess::{clean, stratified_split, train_test_split, PreprocessModel};
use etg::synth;

fn main() -> etg::Result<()> {
    let table = synth::blob_table(500, 3, &["Benign", "DDoS", "Recon"], 2.0, 1);
    let (cleaned, _) = clean(&table);

    let split = train_test_split(cleaned.row_count(), 0.7, 42)?;
    println!("random split: {} train / {} test", split.train_indices.len(), split.test_indices.len());

    let model = PreprocessModel::fit(&cleaned, &split)?;
    println!("classes: {:?}", model.classes());
    for stats in &model.standardizer.columns {
        println!("  {:<4} mean {:>8.4}  std {:>7.4}", stats.name, stats.mean, stats.std);
    }

    let train = cleaned.select_rows(&split.train_indices);
    let x = model.transform_features(&train)?;
    let y = model.transform_labels(&train)?;
    println!("first encoded row: {:?} -> class {}", x.row(0), y[0]);

    let labels = model.transform_labels(&cleaned)?;
    let strat = stratified_split(&labels, 0.7, 42)?;
    let per_class: Vec<usize> = (0..3)
        .map(|c| strat.train_indices.iter().filter(|&&i| labels[i] == c).count())
        .collect();
    println!("stratified train rows per class: {per_class:?}");
    Ok(())
}
