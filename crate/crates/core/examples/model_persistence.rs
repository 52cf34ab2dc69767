//! Save a model to a `.etg` file, load it back, and show that damaged
//! files are refused.
//!
//! ```bash
//! cargo run -p etg --example model_persistence
//! ```

use etg::container::{from_bytes, to_bytes};
use etg::ensemble::{EnsembleParams, ExtraTreesModel};
use etg::{load_model, save_model, synth};

fn main() -> etg::Result<()> {
    let (x, y) = synth::gaussian_blobs(300, 4, 2, 1.0, 9);
    let params = EnsembleParams {
        n_trees: 10,
        ..Default::default()
    };
    let model = ExtraTreesModel::fit(&x, &y, 2, &params)?.with_classes(vec!["Benign".into(), "Attack".into()])?;

    let dir = std::env::temp_dir().join("etg-example");
    std::fs::create_dir_all(&dir).map_err(|e| etg::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("model.etg");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    println!("saved {} bytes to {}", to_bytes(&model).len(), path.display());
    println!("same predictions: {}", model.predict_batch(&x)? == loaded.predict_batch(&x)?);

    let mut bytes = to_bytes(&model);
    let last = bytes.len() - 40;
    bytes[last] ^= 1;
    println!("flipped bit: {}", from_bytes(&bytes).unwrap_err());

    let mut bytes = to_bytes(&model);
    bytes[8] = 2;
    println!("future version: {}", from_bytes(&bytes).unwrap_err());
    Ok(())
}
