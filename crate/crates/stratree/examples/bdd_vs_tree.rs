//! Compare representation sizes: explicit list, BDD (over random initial
//! orders, with sifting), and exact decision tree.
//!
//! ```bash
//! cargo run --release --example bdd_vs_tree
//! ```

use stratree::cruise::{synthesize_safe, CruiseModel};
use stratree::harness::{size_report, SizeReport};
use stratree::strategy::{FeatureSchema, StrategyTable};

fn main() {
    println!("{}", SizeReport::csv_header());

    // the mini cruise model's safe strategy
    let model = CruiseModel::mini();
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();
    let row = size_report("cruise-mini-safe", &table, 40, 1).unwrap();
    println!("{}", row.to_csv_row());

    // a trivial strategy: same action everywhere; the tree spots it, the
    // BDD still has to encode the domain
    let schema = FeatureSchema::ordered(&[("level_a", 0, 63), ("level_b", 0, 63)]);
    let mut trivial =
        StrategyTable::new(schema, vec!["open".into(), "close".into()]).unwrap();
    for a in 0..64 {
        for b in 0..64 {
            if (a + b) % 3 == 0 {
                trivial.insert_named(vec![a, b], &["open"]).unwrap();
            }
        }
    }
    let row = size_report("trivial", &trivial, 40, 2).unwrap();
    println!("{}", row.to_csv_row());
}
