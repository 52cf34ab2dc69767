//! Fit an ensemble on synthetic blobs and look at individual votes.
//!
//! ```bash
//! cargo run --release -p etg --example train_ensemble
//! ```

use etg::ensemble::{EnsembleParams, ExtraTreesModel};
use etg::synth;

fn main() -> etg::Result<()> {
    let (x, y) = synth::gaussian_blobs(2000, 6, 4, 3.0, 5);
    let train: Vec<usize> = (0..1400).collect();
    let test: Vec<usize> = (1400..2000).collect();
    let (train_x, test_x) = (x.select_rows(&train), x.select_rows(&test));

    let params = EnsembleParams {
        n_trees: 50,
        ..Default::default()
    };
    let model = ExtraTreesModel::fit(&train_x, &y[..1400], 4, &params)?;
    let depths: Vec<usize> = model.trees().iter().map(|t| t.depth()).collect();
    println!("{} trees, depth {}..{}", depths.len(), depths.iter().min().unwrap(), depths.iter().max().unwrap());
    println!("test accuracy {:.4}", model.accuracy(&test_x, &y[1400..])?);

    let row = test_x.row(0);
    println!("row 0 votes per class {:?}", model.votes(&row)?);
    println!("row 0 vote shares    {:?}", model.vote_shares(&row)?);
    println!("row 0 prediction {} (true {})", model.predict(&row)?, y[1400]);
    Ok(())
}
