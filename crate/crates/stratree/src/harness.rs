//! Evaluation harness: seeded simulation, Monte-Carlo cost estimation, the
//! k x p size/performance sweep, and size-comparison reports.
//!
//! Runs follow the period structure of the model: from each decision point
//! the environment picks a front mode (uniform over its support), the
//! controller picks an ego mode, and the state flows for one period. The
//! controller observes the integer abstraction of the state — velocities
//! are already integral, the gap is rounded down to its grid cell — which
//! is the same conservative abstraction the safety synthesis uses, so a
//! strategy derived from the safe set stays safe along the true continuous
//! trajectory. Safety accounting nevertheless uses the exact intra-period
//! minimum of the continuous gap, not just its value at decision points.
//!
//! Reproducibility: every run's randomness comes from a ChaCha stream
//! derived from (seed, run index), so batches are independent of thread
//! scheduling and batch size.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bdd::{self, ActionBits, BddError, BitEncoding};
use crate::cruise::{
    Accel, CruiseError, CruiseModel, Gap, GridState, StepTable,
};
use crate::prune::{safe_prune, PruneError};
use crate::strategy::{StrategyError, StrategyTable};
use crate::tree::{learn, DecisionTree, TreeError};
use crate::view::{lookup, materialize_on, DeterminizeRule, ViewError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("strategy action {name:?} is not a mode of the model")]
    UnknownMode { name: String },
    #[error("strategy does not cover the observed state {0:?}")]
    Uncovered(GridState),
    #[error("n_runs must be at least 1")]
    NoRuns,
    #[error(transparent)]
    Cruise(#[from] CruiseError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error(transparent)]
    Bdd(#[from] BddError),
}

/// A controller under evaluation: maps the observed grid abstraction of the
/// state to an ego mode. Implementations may be stateful (seeded draws).
pub trait Policy {
    fn decide(&mut self, observation: GridState) -> Result<Accel, HarnessError>;
}

/// Deterministic table policy: exact lookup of the observed grid state,
/// taking the first allowed action. Built from tables whose alphabet names
/// the model's modes.
pub struct TablePolicy<'a> {
    table: &'a StrategyTable,
    modes: Vec<Accel>,
}

impl<'a> TablePolicy<'a> {
    pub fn new(table: &'a StrategyTable) -> Result<Self, HarnessError> {
        let modes = mode_map(table.actions())?;
        Ok(TablePolicy { table, modes })
    }
}

impl Policy for TablePolicy<'_> {
    fn decide(&mut self, obs: GridState) -> Result<Accel, HarnessError> {
        let set = self
            .table
            .get(&[obs.ve, obs.vf, obs.d])
            .ok_or(HarnessError::Uncovered(obs))?;
        Ok(self.modes[set.first().expect("table sets are non-empty")])
    }
}

/// Tree-backed policy: routes the observation through the tree and
/// determinizes the pure-action answer by the given rule.
pub struct TreePolicy<'a> {
    det: crate::view::Determinized<'a>,
    modes: Vec<Accel>,
}

impl<'a> TreePolicy<'a> {
    pub fn new(tree: &'a DecisionTree, rule: DeterminizeRule) -> Result<Self, HarnessError> {
        let modes = mode_map(tree.actions())?;
        Ok(TreePolicy {
            det: crate::view::Determinized::new(tree, rule),
            modes,
        })
    }
}

impl Policy for TreePolicy<'_> {
    fn decide(&mut self, obs: GridState) -> Result<Accel, HarnessError> {
        let point = [obs.ve as f64, obs.vf as f64, obs.d as f64];
        let idx = self.det.pick(&point)?;
        Ok(self.modes[idx])
    }
}

/// Map alphabet positions to model modes by name; rejects unknown names, so
/// a policy can never return an action outside the model's mode set.
fn mode_map(actions: &[String]) -> Result<Vec<Accel>, HarnessError> {
    actions
        .iter()
        .map(|name| {
            Accel::from_name(name).ok_or_else(|| HarnessError::UnknownMode {
                name: name.clone(),
            })
        })
        .collect()
}

/// One simulated trajectory: decision-point states, per-period chosen modes
/// and intra-period minimum gaps, the accumulated cost, and the number of
/// safety violations (periods whose minimum gap dropped below the safe
/// gap). FAR periods record an infinite minimum gap.
#[derive(Debug, Clone)]
pub struct Run {
    pub horizon: u32,
    pub seed: u64,
    pub velocities: Vec<(i64, i64)>,
    pub gaps: Vec<Gap>,
    pub ego_modes: Vec<Accel>,
    pub front_modes: Vec<Accel>,
    pub min_gaps: Vec<f64>,
    pub cost: f64,
    pub violations: usize,
}

/// Simulate `horizon` periods from the model's initial state.
pub fn simulate<P: Policy>(
    model: &CruiseModel,
    policy: &mut P,
    horizon: u32,
    seed: u64,
) -> Result<Run, HarnessError> {
    let steps = StepTable::new(model);
    simulate_with(model, &steps, policy, horizon, seed, 0)
}

/// As [`simulate`], with an explicit ChaCha stream index for batches. The
/// step table is passed in so batch callers precompute it once.
pub fn simulate_with<P: Policy>(
    model: &CruiseModel,
    steps: &StepTable,
    policy: &mut P,
    horizon: u32,
    seed: u64,
    stream: u64,
) -> Result<Run, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let grid = model.grid();
    let mut ve = model.initial.ve;
    let mut vf = model.initial.vf;
    let mut gap = if model.initial.d > model.d_max {
        Gap::Far
    } else {
        Gap::Range(model.initial.d as f64)
    };

    let mut run = Run {
        horizon,
        seed,
        velocities: vec![(ve, vf)],
        gaps: vec![gap],
        ego_modes: Vec::with_capacity(horizon as usize),
        front_modes: Vec::with_capacity(horizon as usize),
        min_gaps: Vec::with_capacity(horizon as usize),
        cost: 0.0,
        violations: 0,
    };

    for _ in 0..horizon {
        let obs = observe(&grid, ve, vf, gap);
        let support = steps.support(vf);
        let u = support[rng.random_range(0..support.len())];
        let c = policy.decide(obs)?;

        let step = steps.step(ve, vf, c, u);
        let min_gap = match gap {
            Gap::Far => f64::INFINITY,
            Gap::Range(g) => g + step.delta_min,
        };
        gap = match gap {
            Gap::Far => Gap::Far,
            Gap::Range(g) => {
                let g2 = g + step.delta_end;
                if g2 > model.d_max as f64 {
                    Gap::Far
                } else {
                    Gap::Range(g2)
                }
            }
        };
        ve = step.ve_end;
        vf = step.vf_end;

        if min_gap < model.safe_gap {
            run.violations += 1;
        }
        run.cost += gap.meters_or(model.d_max as f64);
        run.ego_modes.push(c);
        run.front_modes.push(u);
        run.min_gaps.push(min_gap);
        run.velocities.push((ve, vf));
        run.gaps.push(gap);
    }
    Ok(run)
}

/// The grid abstraction the controller observes: integral velocities and
/// the gap rounded down to its cell (FAR keeps the FAR cell).
fn observe(grid: &crate::cruise::Grid, ve: i64, vf: i64, gap: Gap) -> GridState {
    let d = match gap {
        Gap::Far => grid.far_cell(),
        Gap::Range(g) => (g.floor() as i64).clamp(0, grid.d_max),
    };
    GridState { ve, vf, d }
}

#[derive(Debug, Clone, Copy)]
pub struct CostEstimate {
    pub mean: f64,
    /// 95% confidence half-width under the normal approximation.
    pub ci_half_width: f64,
    pub n_runs: usize,
    pub violations: usize,
}

/// Estimate the expected cost by `n_runs` independent seeded runs. The
/// factory builds a fresh policy per run from the run index, so stateful
/// policies get independent, reproducible streams.
pub fn estimate_expected_cost<P, F>(
    model: &CruiseModel,
    make_policy: F,
    horizon: u32,
    n_runs: usize,
    seed: u64,
) -> Result<CostEstimate, HarnessError>
where
    P: Policy,
    F: Fn(u64) -> Result<P, HarnessError> + Sync,
{
    if n_runs == 0 {
        return Err(HarnessError::NoRuns);
    }
    let steps = StepTable::new(model);
    let results: Vec<(f64, usize)> = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut policy = make_policy(i)?;
            let run = simulate_with(model, &steps, &mut policy, horizon, seed, i + 1)?;
            Ok((run.cost, run.violations))
        })
        .collect::<Result<_, HarnessError>>()?;

    let n = results.len() as f64;
    let mean = results.iter().map(|(c, _)| c).sum::<f64>() / n;
    let ci_half_width = if results.len() < 2 {
        0.0
    } else {
        let var = results
            .iter()
            .map(|(c, _)| (c - mean) * (c - mean))
            .sum::<f64>()
            / (n - 1.0);
        1.96 * (var / n).sqrt()
    };
    Ok(CostEstimate {
        mean,
        ci_half_width,
        n_runs,
        violations: results.iter().map(|(_, v)| v).sum(),
    })
}

// ---------------------------------------------------------------------------
// k x p sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum CellStatus {
    Feasible {
        /// Node count of the exact tree of the cell's optimized strategy.
        tree_size: usize,
        mean_cost: f64,
        ci_half_width: f64,
        violations: usize,
    },
    /// The minimum split size leaves a leaf without a pure action.
    Infeasible { reason: String },
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub k: u32,
    pub p: u32,
    pub status: CellStatus,
}

/// For each (k, p): learn the reduced tree of the safe strategy, optimize
/// within it, learn the exact tree of the optimized strategy, and estimate
/// its expected cost. Cells whose k admits no pure action are marked
/// infeasible rather than failing the sweep.
pub fn sweep(
    model: &CruiseModel,
    safe_table: &StrategyTable,
    ks: &[u32],
    ps: &[u32],
    horizon: u32,
    n_runs: usize,
    seed: u64,
) -> Result<Vec<SweepCell>, HarnessError> {
    let mut cells = Vec::with_capacity(ks.len() * ps.len());
    for &k in ks {
        let base = match learn(safe_table, k) {
            Ok(tree) => tree,
            Err(e @ TreeError::NoPureAction { .. }) => {
                for &p in ps {
                    cells.push(SweepCell {
                        k,
                        p,
                        status: CellStatus::Infeasible {
                            reason: e.to_string(),
                        },
                    });
                }
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for &p in ps {
            let reduced = safe_prune(&base, p)?;
            let allowed = materialize_on(
                &reduced,
                safe_table.schema(),
                safe_table.configs().map(|c| c.to_vec()),
            )?;
            let opt = crate::cruise::optimize(model, &allowed, horizon)?;
            let exact = learn(&opt.strategy, 2)?;
            let est = estimate_expected_cost(
                model,
                |_| TablePolicy::new(&opt.strategy),
                horizon,
                n_runs,
                seed,
            )?;
            cells.push(SweepCell {
                k,
                p,
                status: CellStatus::Feasible {
                    tree_size: exact.size(),
                    mean_cost: est.mean,
                    ci_half_width: est.ci_half_width,
                    violations: est.violations,
                },
            });
        }
    }
    Ok(cells)
}

/// CSV for a sweep. With `ratios`, two extra columns normalize size and
/// cost against the (k=2, p=0) cell.
pub fn sweep_csv(cells: &[SweepCell], ratios: bool) -> String {
    let mut out = String::new();
    out.push_str("k,p,status,tree_size,mean_cost,ci_half_width,violations");
    if ratios {
        out.push_str(",size_ratio,cost_ratio");
    }
    out.push('\n');
    let baseline = cells.iter().find_map(|c| match (&c.status, c.k, c.p) {
        (
            CellStatus::Feasible {
                tree_size,
                mean_cost,
                ..
            },
            2,
            0,
        ) => Some((*tree_size as f64, *mean_cost)),
        _ => None,
    });
    for cell in cells {
        match &cell.status {
            CellStatus::Feasible {
                tree_size,
                mean_cost,
                ci_half_width,
                violations,
            } => {
                out.push_str(&format!(
                    "{},{},ok,{},{:.4},{:.4},{}",
                    cell.k, cell.p, tree_size, mean_cost, ci_half_width, violations
                ));
                if ratios {
                    match baseline {
                        Some((bs, bc)) if bc != 0.0 => out.push_str(&format!(
                            ",{:.4},{:.4}",
                            *tree_size as f64 / bs,
                            mean_cost / bc
                        )),
                        _ => out.push_str(",,"),
                    }
                }
                out.push('\n');
            }
            CellStatus::Infeasible { .. } => {
                out.push_str(&format!("{},{},infeasible,,,,", cell.k, cell.p));
                if ratios {
                    out.push_str(",,");
                }
                out.push('\n');
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Size-comparison report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SizeReport {
    pub model: String,
    /// Total entries in the strategy list.
    pub list: usize,
    /// Entries making an actual decision (allowing a proper subset of the
    /// alphabet).
    pub relevant: usize,
    pub trials: usize,
    pub bdd_min: usize,
    pub bdd_median: usize,
    pub bdd_max: usize,
    pub dt_size: usize,
}

impl SizeReport {
    pub fn csv_header() -> &'static str {
        "model,list,relevant,R,bdd_min,bdd_med,bdd_max,dt_size"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.model,
            self.list,
            self.relevant,
            self.trials,
            self.bdd_min,
            self.bdd_median,
            self.bdd_max,
            self.dt_size
        )
    }
}

/// Compare representation sizes of one strategy: explicit list length,
/// relevant entries, post-sifting BDD sizes over `r` random initial orders,
/// and the exact decision-tree size.
pub fn size_report(
    name: &str,
    table: &StrategyTable,
    r: usize,
    seed: u64,
) -> Result<SizeReport, HarnessError> {
    let relevant = table
        .rows()
        .iter()
        .filter(|(_, set)| set.len() < table.actions().len())
        .count();
    let enc = BitEncoding::new(table.schema(), table.actions().len(), ActionBits::OneHot)?;
    let sizes = bdd::random_order_sizes(table, &enc, r, seed)?;
    let (bdd_min, bdd_median, bdd_max) = bdd::size_summary(&sizes);
    let dt = learn(table, 2)?;
    Ok(SizeReport {
        model: name.to_string(),
        list: table.len(),
        relevant,
        trials: r,
        bdd_min,
        bdd_median,
        bdd_max,
        dt_size: dt.size(),
    })
}

/// Sanity check a tree-derived strategy against the table it came from:
/// the tree's answer must be a non-empty subset of the table's on every
/// configuration of the table.
pub fn tree_refines_table(
    tree: &DecisionTree,
    table: &StrategyTable,
) -> Result<bool, HarnessError> {
    for (config, allowed) in table.rows() {
        let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
        let got = lookup(tree, &point)?;
        if got.is_empty() || !got.is_subset(allowed) {
            return Ok(false);
        }
    }
    Ok(true)
}
