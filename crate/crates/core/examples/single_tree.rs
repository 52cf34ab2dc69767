//! Grow one decision tree on XOR and print its nodes.
//!
//! ```bash
//! cargo run -p etg --example single_tree
//! ```

use etg::tree::{build_tree, find_best_split, gini, MaxFeatures, TreeNode, TreeParams};
use etg::FeatureMatrix;

fn main() -> etg::Result<()> {
    let x = FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]])?;
    let y = [0, 1, 1, 0];
    let samples: Vec<usize> = (0..4).collect();

    println!("root gini: {}", gini(&[2, 2])?);
    println!("best root split: {:?}", find_best_split(&samples, &[0, 1], &x, &y, 2));

    let params = TreeParams {
        max_features: MaxFeatures::All,
        ..TreeParams::default()
    };
    let tree = build_tree(&samples, &x, &y, 2, &params, 7)?;
    println!("depth {}, {} leaves", tree.depth(), tree.leaf_count());
    for (i, node) in tree.nodes().iter().enumerate() {
        match node {
            TreeNode::Internal { feature, threshold, left, right } => {
                println!("  #{i}: f{feature} <= {threshold} ? #{left} : #{right}")
            }
            TreeNode::Leaf { class_counts, predicted_class } => {
                println!("  #{i}: leaf {class_counts:?} -> {predicted_class}")
            }
        }
    }
    for r in 0..4 {
        println!("predict {:?} = {}", x.row(r), tree.predict(&x.row(r))?);
    }
    Ok(())
}
