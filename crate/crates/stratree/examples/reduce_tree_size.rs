//! Shrink a tree with the two safety-preserving knobs: minimum split size
//! (stop splitting small nodes) and safe pruning (merge sibling leaves with
//! intersecting pure sets).
//!
//! ```bash
//! cargo run --example reduce_tree_size
//! ```

use stratree::cruise::{synthesize_safe, CruiseModel};
use stratree::prune::safe_prune;
use stratree::tree::learn;
use stratree::view::lookup;

fn main() {
    let model = CruiseModel::mini();
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();
    println!(
        "safe strategy: {} states, alphabet {:?}\n",
        table.len(),
        table.actions()
    );

    println!("{:>6} {:>4} {:>10} {:>12}", "k", "p", "tree size", "avg allowed");
    for k in [2u32, 8, 32, 128] {
        let base = learn(&table, k).unwrap();
        for p in [0u32, 1, 2, 4] {
            let tree = safe_prune(&base, p).unwrap();
            // permissiveness: average number of allowed actions over the table
            let mut total = 0usize;
            for (config, _) in table.rows() {
                let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
                total += lookup(&tree, &point).unwrap().len();
            }
            println!(
                "{:>6} {:>4} {:>10} {:>12.3}",
                k,
                p,
                tree.size(),
                total as f64 / table.len() as f64
            );
        }
    }
    println!(
        "\nevery answer above is a subset of the safe set's actions, so any of\n\
         these trees controls the system safely; smaller trees are simply less\n\
         permissive"
    );
}
