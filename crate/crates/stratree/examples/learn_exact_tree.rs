//! Learn an exact decision tree from a small permissive strategy table and
//! print its structure.
//!
//! ```bash
//! cargo run --example learn_exact_tree
//! ```

use stratree::strategy::{FeatureSchema, StrategyTable};
use stratree::tree::{learn, Node};
use stratree::view::lookup;

fn main() {
    // A toy following-distance controller: close means brake, mid-range
    // allows coasting, one sweet spot allows everything.
    let schema = FeatureSchema::ordered(&[("distance", 0, 100), ("velocity", 0, 100)]);
    let mut table =
        StrategyTable::new(schema, vec!["dec".into(), "neu".into(), "acc".into()]).unwrap();
    for (d, v, actions) in [
        (2, 51, vec!["dec"]),
        (3, 20, vec!["dec"]),
        (5, 30, vec!["dec"]),
        (7, 1, vec!["dec", "neu"]),
        (20, 46, vec!["dec", "neu"]),
        (25, 25, vec!["dec", "neu", "acc"]),
        (45, 70, vec!["dec", "neu"]),
    ] {
        table.insert_named(vec![d, v], &actions).unwrap();
    }

    let tree = learn(&table, 2).unwrap();
    println!(
        "{} table entries -> tree with {} nodes (depth {})\n",
        table.len(),
        tree.size(),
        tree.depth()
    );
    print_node(&tree, tree.root(), 0);

    // the tree reproduces the table exactly, and generalizes off-grid
    println!("\nqueries:");
    for point in [[3.0, 20.0], [25.0, 25.0], [6.4, 33.0], [80.0, 12.0]] {
        let set = lookup(&tree, &point).unwrap();
        let names: Vec<&str> = set.iter().map(|i| tree.actions()[i].as_str()).collect();
        println!("  ({:>5}, {:>5}) -> {{{}}}", point[0], point[1], names.join(", "));
    }
}

fn print_node(tree: &stratree::DecisionTree, id: usize, depth: usize) {
    let pad = "  ".repeat(depth);
    match tree.node(id) {
        Node::Inner {
            predicate,
            left,
            right,
        } => {
            println!("{pad}{}", predicate.display(tree.schema()));
            print_node(tree, *left, depth + 1);
            println!("{pad}else");
            print_node(tree, *right, depth + 1);
        }
        Node::Leaf { stats } => {
            let names: Vec<&str> = stats
                .pure_actions()
                .iter()
                .map(|i| tree.actions()[i].as_str())
                .collect();
            println!("{pad}-> {{{}}}  (counts {:?})", names.join(", "), stats.counts());
        }
    }
}
