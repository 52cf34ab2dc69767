//! Pick ensemble parameters by validation accuracy.
//!
//! ```bash
//! cargo run --release -p etg --example grid_search
//! ```

use etg::ensemble::{default_grid, grid_search, EnsembleParams};
use etg::synth;

fn main() -> etg::Result<()> {
    let (x, y) = synth::gaussian_blobs(1200, 8, 5, 4.5, 3);
    let grid = default_grid(&EnsembleParams::default());
    let result = grid_search(&x, &y, 5, &grid, 0.2, 42)?;
    println!("{} train / {} validation rows", result.train_rows, result.validation_rows);
    for row in &result.rows {
        println!(
            "  trees {:>3}  depth {:>4}  features {:<4}  accuracy {:.4}",
            row.params.n_trees,
            row.params.tree.max_depth.map_or("none".into(), |d| d.to_string()),
            row.params.tree.max_features,
            row.validation_accuracy
        );
    }
    println!("best: {:?} at {:.4}", result.best, result.best_accuracy);
    Ok(())
}
