//! The two workflow paths end to end on the mini model.
//!
//! Top path: safe strategy -> optimize -> exact tree of the optimum.
//! Bottom path: safe strategy -> reduced tree (k, p) -> optimize within the
//! reduced strategy -> exact tree. The bottom path trades performance for
//! a smaller safe tree, never safety.
//!
//! ```bash
//! cargo run --release --example optimize_within_safety
//! ```

use stratree::cruise::{optimize, synthesize_safe, CruiseModel};
use stratree::prune::safe_prune;
use stratree::tree::learn;
use stratree::view::materialize_on;

fn main() {
    let model = CruiseModel::mini();
    let horizon = 20;
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();

    // top path
    let top = optimize(&model, &table, horizon).unwrap();
    let top_tree = learn(&top.strategy, 2).unwrap();
    println!(
        "top path:    safe table {} entries -> optimal tree {} nodes, E[cost] = {:.2}",
        table.len(),
        top_tree.size(),
        top.value(model.initial)
    );

    // bottom path for a few (k, p)
    for (k, p) in [(2, 0), (16, 1), (64, 2)] {
        let reduced = safe_prune(&learn(&table, k).unwrap(), p).unwrap();
        let allowed = materialize_on(
            &reduced,
            table.schema(),
            table.configs().map(|c| c.to_vec()),
        )
        .unwrap();
        let opt = optimize(&model, &allowed, horizon).unwrap();
        let exact = learn(&opt.strategy, 2).unwrap();
        println!(
            "bottom path: k={k:>3}, p={p}: safe tree {:>4} nodes -> optimal tree {:>4} nodes, E[cost] = {:.2}",
            reduced.size(),
            exact.size(),
            opt.value(model.initial)
        );
    }
    println!(
        "\nthe (k=2, p=0) bottom cell equals the top path by construction;\n\
         larger k and p shrink the safe tree and can only restrict the optimizer"
    );
}
