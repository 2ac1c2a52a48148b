//! Synthesize the maximally permissive safe strategy of the full cruise
//! model and save it in the strategy file format.
//!
//! ```bash
//! cargo run --release --example synthesize_safe_policy
//! ```

use stratree::cruise::{synthesize_safe, CruiseModel, GridState};
use stratree::strategy::save_strategy;

fn main() {
    let model = CruiseModel::default();
    let t0 = std::time::Instant::now();
    let safe = synthesize_safe(&model).unwrap();
    println!(
        "safe set: {} of {} grid states ({:?})",
        safe.len(),
        model.grid().len(),
        t0.elapsed()
    );

    // permissiveness histogram
    let mut by_count = [0usize; 4];
    for s in model.grid().states() {
        by_count[safe.allowed(s).len()] += 1;
    }
    for (n, count) in by_count.iter().enumerate() {
        println!("  states allowing {n} modes: {count}");
    }

    // a few spot checks
    for (s, label) in [
        (GridState { ve: 0, vf: 0, d: 100 }, "initial"),
        (GridState { ve: 20, vf: -10, d: 5 }, "head-on at the boundary"),
        (GridState { ve: 0, vf: 0, d: 4 }, "below the safe gap"),
        (GridState { ve: 10, vf: 10, d: 201 }, "front beyond the sensor"),
    ] {
        let set = safe.allowed(s);
        let names: Vec<&str> = set
            .iter()
            .map(|i| ["dec", "neu", "acc"][i])
            .collect();
        println!("  {label}: {s:?} -> {{{}}}", names.join(", "));
    }

    let table = safe.to_table(&model).unwrap();
    let path = std::env::temp_dir().join("cruise_safe.strat");
    save_strategy(&table, &path).unwrap();
    println!("saved {} entries to {}", table.len(), path.display());
}
