//! The full k x p sweep: how much tree size the reduction knobs buy and
//! what it costs in expected performance.
//!
//! ```bash
//! cargo run --release --example size_performance_sweep
//! ```

use stratree::cruise::{synthesize_safe, CruiseModel};
use stratree::harness::{sweep, sweep_csv};

fn main() {
    let model = CruiseModel::mini();
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();

    let cells = sweep(
        &model,
        &table,
        &[2, 8, 32, 128],
        &[0, 1, 2],
        20,   // horizon
        1000, // runs per cell
        3,    // seed
    )
    .unwrap();

    // ratios column normalizes against the exact (2, 0) cell
    print!("{}", sweep_csv(&cells, true));
}
