//! Seeded Monte-Carlo evaluation: expected cost with confidence interval,
//! plus the safety-violation count (which must stay zero for anything
//! derived from the safe set).
//!
//! ```bash
//! cargo run --release --example monte_carlo_eval
//! ```

use stratree::cruise::{optimize, synthesize_safe, CruiseModel};
use stratree::harness::{estimate_expected_cost, simulate, TablePolicy, TreePolicy};
use stratree::tree::learn;
use stratree::view::DeterminizeRule;

fn main() {
    let model = CruiseModel::mini();
    let horizon = 30;
    let n_runs = 4000;
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();
    let safe_tree = learn(&table, 2).unwrap();
    let opt = optimize(&model, &table, horizon).unwrap();

    // one run in detail
    let mut policy = TablePolicy::new(&opt.strategy).unwrap();
    let run = simulate(&model, &mut policy, 10, 42).unwrap();
    println!("one run (seed 42):");
    for (i, gap) in run.gaps.iter().enumerate() {
        let min = if i == 0 {
            String::from("      -")
        } else {
            format!("{:7.2}", run.min_gaps[i - 1])
        };
        println!(
            "  t={:>2}  v_ego {:>2}  v_front {:>2}  gap {:>7.2}  min gap in period {}",
            i,
            run.velocities[i].0,
            run.velocities[i].1,
            gap.meters_or(f64::NAN),
            min
        );
    }
    println!("  cost {:.2}, violations {}\n", run.cost, run.violations);

    // batched estimates: the optimized strategy vs. random safe behaviour
    let optimal = estimate_expected_cost(
        &model,
        |_| TablePolicy::new(&opt.strategy),
        horizon,
        n_runs,
        7,
    )
    .unwrap();
    let random_safe = estimate_expected_cost(
        &model,
        |i| TreePolicy::new(&safe_tree, DeterminizeRule::UniformSeeded(1000 + i)),
        horizon,
        n_runs,
        7,
    )
    .unwrap();
    println!("{n_runs} runs, horizon {horizon}:");
    println!(
        "  optimized strategy: E[cost] = {:.1} ± {:.1}, violations {}",
        optimal.mean, optimal.ci_half_width, optimal.violations
    );
    println!(
        "  uniform safe play:  E[cost] = {:.1} ± {:.1}, violations {}",
        random_safe.mean, random_safe.ci_half_width, random_safe.violations
    );
}
