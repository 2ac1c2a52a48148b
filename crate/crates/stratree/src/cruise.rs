//! Two-car cruise-control benchmark: a hybrid MDP with piecewise-linear
//! dynamics, a safety-game fixpoint for maximally permissive safe control,
//! and finite-horizon value iteration for cost optimization within a given
//! permissive strategy.
//!
//! The ego car follows a front car. Both pick an acceleration mode from
//! {-2, 0, +2} m/s² each period; velocities saturate at the model bounds
//! and the gap integrates the relative velocity exactly (piecewise
//! quadratic). Safety means the gap never drops below `safe_gap`, including
//! between decision points, which the analysis guarantees with the exact
//! intra-period minimum of the gap trajectory rather than endpoint checks.
//!
//! The sensor sees the front car only within `d_max` meters; beyond that
//! the state is the distinguished FAR cell, which is absorbing: a front car
//! that outran the sensor horizon is treated as gone for good, and the
//! boundary cell `gap = d_max` is where a re-entering car would appear.
//!
//! Discretization: velocities stay exactly on the integer grid because
//! accelerations and the period are integral; gaps are rounded down to the
//! next grid cell, which is the conservative direction (a strategy safe for
//! the rounded-down gap is safe for the true one, since safety is monotone
//! in the gap).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategy::{ActionSet, FeatureSchema, StrategyError, StrategyTable};

#[derive(Debug, Error)]
pub enum CruiseError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("safety synthesis unsatisfiable: initial state {0:?} is not in the safe set")]
    Unsatisfiable(GridState),
    #[error("allowed-strategy table does not match the model: {0}")]
    BadAllowedTable(String),
    #[error("state {0:?} reachable under the allowed strategy but not covered by it")]
    UncoveredState(GridState),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// Acceleration mode, -2 / 0 / +2 m/s². Ordered dec < neu < acc; ties in
/// optimization break toward the lower mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Accel {
    Dec,
    Neu,
    Acc,
}

impl Accel {
    pub const ALL: [Accel; 3] = [Accel::Dec, Accel::Neu, Accel::Acc];

    pub fn value(self) -> f64 {
        match self {
            Accel::Dec => -2.0,
            Accel::Neu => 0.0,
            Accel::Acc => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Accel::Dec => "dec",
            Accel::Neu => "neu",
            Accel::Acc => "acc",
        }
    }

    pub fn from_name(name: &str) -> Option<Accel> {
        Accel::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Gap component of a state: a concrete distance or beyond-sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gap {
    Range(f64),
    Far,
}

impl Gap {
    pub fn is_far(&self) -> bool {
        matches!(self, Gap::Far)
    }

    /// Concrete meters, with FAR mapped to the given horizon value.
    pub fn meters_or(&self, far_value: f64) -> f64 {
        match *self {
            Gap::Range(g) => g,
            Gap::Far => far_value,
        }
    }
}

/// Continuous state: velocities, gap, and the acceleration modes currently
/// driving the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CruiseState {
    pub v_ego: f64,
    pub v_front: f64,
    pub gap: Gap,
    pub a_ego: Accel,
    pub a_front: Accel,
}

/// Integer grid state. `d` ranges over `0..=d_max` for concrete gaps; the
/// value `d_max + 1` is the FAR cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    #[serde(rename = "v_ego")]
    pub ve: i64,
    #[serde(rename = "v_front")]
    pub vf: i64,
    #[serde(rename = "gap")]
    pub d: i64,
}

/// Which front-car modes the environment may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpponentRule {
    /// All three modes, uniformly.
    #[serde(rename = "uniform")]
    Uniform,
    /// Modes whose full-period effect would saturate the velocity bound are
    /// excluded; uniform over the rest.
    #[serde(rename = "no-saturating-choices")]
    NoSaturatingChoices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CruiseModel {
    /// Decision period in seconds. `2 * period` must be integral so that
    /// velocities stay on the integer grid.
    #[serde(default = "default_period")]
    pub period: f64,
    /// Minimum safe gap in meters.
    #[serde(default = "default_safe_gap")]
    pub safe_gap: f64,
    /// Velocity bounds, m/s (both cars).
    #[serde(default = "default_v_min")]
    pub v_min: i64,
    #[serde(default = "default_v_max")]
    pub v_max: i64,
    /// Sensor horizon in meters; also the largest concrete gap cell.
    #[serde(default = "default_d_max")]
    pub d_max: i64,
    #[serde(default = "default_opponent")]
    pub opponent: OpponentRule,
    /// Default optimization / simulation horizon (decision points).
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    /// Default initial state for evaluation and feasibility.
    #[serde(default = "default_initial")]
    pub initial: GridState,
}

fn default_period() -> f64 {
    1.0
}
fn default_safe_gap() -> f64 {
    5.0
}
fn default_v_min() -> i64 {
    -10
}
fn default_v_max() -> i64 {
    20
}
fn default_d_max() -> i64 {
    200
}
fn default_opponent() -> OpponentRule {
    OpponentRule::Uniform
}
fn default_horizon() -> u32 {
    100
}
fn default_initial() -> GridState {
    GridState { ve: 0, vf: 0, d: 100 }
}

impl Default for CruiseModel {
    fn default() -> Self {
        CruiseModel {
            period: default_period(),
            safe_gap: default_safe_gap(),
            v_min: default_v_min(),
            v_max: default_v_max(),
            d_max: default_d_max(),
            opponent: default_opponent(),
            horizon: default_horizon(),
            initial: default_initial(),
        }
    }
}

impl CruiseModel {
    /// A small instance whose grids and bit encodings stay tiny; handy for
    /// exhaustive checks.
    pub fn mini() -> Self {
        CruiseModel {
            period: 1.0,
            safe_gap: 5.0,
            v_min: 0,
            v_max: 7,
            d_max: 62,
            opponent: OpponentRule::Uniform,
            horizon: 20,
            initial: GridState { ve: 0, vf: 0, d: 30 },
        }
    }

    pub fn validate(&self) -> Result<(), CruiseError> {
        if !self.period.is_finite() || self.period <= 0.0 {
            return Err(CruiseError::InvalidModel("period must be positive".into()));
        }
        if (2.0 * self.period).fract() != 0.0 {
            return Err(CruiseError::InvalidModel(
                "2 * period must be integral to keep velocities on the grid".into(),
            ));
        }
        if self.v_min > self.v_max {
            return Err(CruiseError::InvalidModel("v_min > v_max".into()));
        }
        if self.d_max < 1 {
            return Err(CruiseError::InvalidModel("d_max must be at least 1".into()));
        }
        if self.safe_gap < 0.0 || self.safe_gap > self.d_max as f64 {
            return Err(CruiseError::InvalidModel(
                "safe_gap must lie within [0, d_max]".into(),
            ));
        }
        let g = self.grid();
        if !g.contains(self.initial) {
            return Err(CruiseError::InvalidModel(format!(
                "initial state {:?} outside the grid",
                self.initial
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, CruiseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CruiseError::InvalidModel(e.to_string()))?;
        let model: CruiseModel = serde_json::from_str(&text)
            .map_err(|e| CruiseError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn grid(&self) -> Grid {
        Grid {
            v_min: self.v_min,
            v_max: self.v_max,
            d_max: self.d_max,
        }
    }

    /// Feature schema of strategy tables over this model's grid: ego
    /// velocity, front velocity, gap cell (top value = FAR).
    pub fn schema(&self) -> FeatureSchema {
        FeatureSchema::ordered(&[
            ("v_ego", self.v_min, self.v_max),
            ("v_front", self.v_min, self.v_max),
            ("gap", 0, self.d_max + 1),
        ])
    }

    pub fn action_names(&self) -> Vec<String> {
        Accel::ALL.iter().map(|a| a.name().to_string()).collect()
    }

    /// Front-car modes available at the given front velocity.
    pub fn opponent_support(&self, vf: i64) -> Vec<Accel> {
        match self.opponent {
            OpponentRule::Uniform => Accel::ALL.to_vec(),
            OpponentRule::NoSaturatingChoices => Accel::ALL
                .into_iter()
                .filter(|a| {
                    let end = vf as f64 + a.value() * self.period;
                    end >= self.v_min as f64 && end <= self.v_max as f64
                })
                .collect(),
        }
    }

    /// The continuous state corresponding to a grid state, with the given
    /// acceleration modes.
    pub fn continuous(&self, s: GridState, a_ego: Accel, a_front: Accel) -> CruiseState {
        CruiseState {
            v_ego: s.ve as f64,
            v_front: s.vf as f64,
            gap: if s.d > self.d_max {
                Gap::Far
            } else {
                Gap::Range(s.d as f64)
            },
            a_ego,
            a_front,
        }
    }
}

/// Integer state grid: velocities, gap cells, and the FAR cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub v_min: i64,
    pub v_max: i64,
    pub d_max: i64,
}

impl Grid {
    pub fn nv(&self) -> usize {
        (self.v_max - self.v_min + 1) as usize
    }

    /// Gap cells including FAR.
    pub fn nd(&self) -> usize {
        (self.d_max + 2) as usize
    }

    pub fn far_cell(&self) -> i64 {
        self.d_max + 1
    }

    /// Number of grid states; never zero.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.nv() * self.nv() * self.nd()
    }

    pub fn contains(&self, s: GridState) -> bool {
        s.ve >= self.v_min
            && s.ve <= self.v_max
            && s.vf >= self.v_min
            && s.vf <= self.v_max
            && s.d >= 0
            && s.d <= self.far_cell()
    }

    pub fn index(&self, s: GridState) -> usize {
        debug_assert!(self.contains(s));
        let vi = (s.ve - self.v_min) as usize;
        let vj = (s.vf - self.v_min) as usize;
        (vi * self.nv() + vj) * self.nd() + s.d as usize
    }

    pub fn state(&self, index: usize) -> GridState {
        let d = (index % self.nd()) as i64;
        let rest = index / self.nd();
        let vj = (rest % self.nv()) as i64;
        let vi = (rest / self.nv()) as i64;
        GridState {
            ve: self.v_min + vi,
            vf: self.v_min + vj,
            d,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = GridState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

// ---------------------------------------------------------------------------
// Kinematics
// ---------------------------------------------------------------------------

/// Velocity at time `t` under constant acceleration with saturation.
fn vel_at(v0: f64, a: f64, lo: f64, hi: f64, t: f64) -> f64 {
    (v0 + a * t).clamp(lo, hi)
}

/// Integral of the saturated velocity over `[0, t]`.
fn vel_integral(v0: f64, a: f64, lo: f64, hi: f64, t: f64) -> f64 {
    if a == 0.0 {
        return v0 * t;
    }
    let bound = if a > 0.0 { hi } else { lo };
    let t_sat = (bound - v0) / a;
    if t_sat >= t {
        v0 * t + a * t * t / 2.0
    } else {
        let t_sat = t_sat.max(0.0);
        v0 * t_sat + a * t_sat * t_sat / 2.0 + bound * (t - t_sat)
    }
}

/// Net gap change over `[0, t]`: integral of (front - ego) velocity.
fn gap_delta(s: &CruiseState, lo: f64, hi: f64, t: f64) -> f64 {
    vel_integral(s.v_front, s.a_front.value(), lo, hi, t)
        - vel_integral(s.v_ego, s.a_ego.value(), lo, hi, t)
}

/// Advance the continuous state by `tau` seconds under its current modes.
///
/// Gaps above the sensor horizon become FAR; FAR is absorbing (the gap is
/// no longer tracked, velocities still evolve). The gap is otherwise exact
/// and may go negative, which downstream safety accounting reports as a
/// violation.
pub fn flow(model: &CruiseModel, s: &CruiseState, tau: f64) -> CruiseState {
    debug_assert!(tau > 0.0 && tau <= model.period);
    let lo = model.v_min as f64;
    let hi = model.v_max as f64;
    let gap = match s.gap {
        Gap::Far => Gap::Far,
        Gap::Range(g) => {
            let g2 = g + gap_delta(s, lo, hi, tau);
            if g2 > model.d_max as f64 {
                Gap::Far
            } else {
                Gap::Range(g2)
            }
        }
    };
    CruiseState {
        v_ego: vel_at(s.v_ego, s.a_ego.value(), lo, hi, tau),
        v_front: vel_at(s.v_front, s.a_front.value(), lo, hi, tau),
        gap,
        a_ego: s.a_ego,
        a_front: s.a_front,
    }
}

/// Exact minimum of the gap over one period, from the piecewise-quadratic
/// gap trajectory: candidates are the period endpoints, the saturation
/// breakpoints, and the zero crossings of the relative velocity.
///
/// The state's gap must be concrete (not FAR).
pub fn min_gap_over_period(model: &CruiseModel, s: &CruiseState) -> f64 {
    let g0 = match s.gap {
        Gap::Range(g) => g,
        Gap::Far => panic!("min_gap_over_period needs a concrete gap"),
    };
    g0 + min_gap_delta(
        s,
        model.v_min as f64,
        model.v_max as f64,
        model.period,
    )
}

/// Minimum over `[0, period]` of the net gap change.
fn min_gap_delta(s: &CruiseState, lo: f64, hi: f64, period: f64) -> f64 {
    let mut candidates = [0.0f64; 7];
    let mut n = 0;
    let mut push = |t: f64| {
        if t > 0.0 && t < period {
            candidates[n] = t;
            n += 1;
        }
    };
    let sat_time = |v0: f64, a: f64| -> Option<f64> {
        if a == 0.0 {
            None
        } else {
            Some(((if a > 0.0 { hi } else { lo }) - v0) / a)
        }
    };
    let te = sat_time(s.v_ego, s.a_ego.value());
    let tf = sat_time(s.v_front, s.a_front.value());
    if let Some(t) = te {
        push(t);
    }
    if let Some(t) = tf {
        push(t);
    }
    // zero crossings of the relative velocity within each linear segment
    let mut breaks: Vec<f64> = vec![0.0, period];
    if let Some(t) = te {
        if t > 0.0 && t < period {
            breaks.push(t);
        }
    }
    if let Some(t) = tf {
        if t > 0.0 && t < period {
            breaks.push(t);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in breaks.windows(2) {
        let (b0, b1) = (w[0], w[1]);
        if b1 <= b0 {
            continue;
        }
        let r0 = vel_at(s.v_front, s.a_front.value(), lo, hi, b0)
            - vel_at(s.v_ego, s.a_ego.value(), lo, hi, b0);
        let r1 = vel_at(s.v_front, s.a_front.value(), lo, hi, b1)
            - vel_at(s.v_ego, s.a_ego.value(), lo, hi, b1);
        if (r0 < 0.0) != (r1 < 0.0) && r0 != r1 {
            // linear segment: crossing at b0 + (b1-b0) * r0/(r0-r1)
            push(b0 + (b1 - b0) * r0 / (r0 - r1));
        }
    }

    let mut min = gap_delta(s, lo, hi, period).min(0.0); // t = period and t = 0
    for &t in &candidates[..n] {
        min = min.min(gap_delta(s, lo, hi, t));
    }
    min
}

/// Per-(velocity, velocity, mode, mode) step effects, precomputed once: the
/// exact intra-period minimum gap change, the end-of-period gap change, and
/// the end velocities. Gaps enter the trajectory additively, so these
/// depend only on velocities and modes.
pub struct StepTable {
    grid: Grid,
    steps: Vec<Step>,
    supports: Vec<Vec<Accel>>, // per front-velocity index
    period: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub delta_min: f64,
    pub delta_end: f64,
    pub ve_end: i64,
    pub vf_end: i64,
}

impl StepTable {
    pub fn new(model: &CruiseModel) -> StepTable {
        let grid = model.grid();
        let nv = grid.nv();
        let lo = model.v_min as f64;
        let hi = model.v_max as f64;
        let mut steps = Vec::with_capacity(nv * nv * 9);
        for ve in model.v_min..=model.v_max {
            for vf in model.v_min..=model.v_max {
                for c in Accel::ALL {
                    for u in Accel::ALL {
                        let s = CruiseState {
                            v_ego: ve as f64,
                            v_front: vf as f64,
                            gap: Gap::Range(0.0),
                            a_ego: c,
                            a_front: u,
                        };
                        let delta_min = min_gap_delta(&s, lo, hi, model.period);
                        let delta_end =
                            gap_delta(&s, lo, hi, model.period);
                        let ve_f = vel_at(ve as f64, c.value(), lo, hi, model.period);
                        let vf_f = vel_at(vf as f64, u.value(), lo, hi, model.period);
                        debug_assert_eq!(ve_f.fract(), 0.0);
                        debug_assert_eq!(vf_f.fract(), 0.0);
                        steps.push(Step {
                            delta_min,
                            delta_end,
                            ve_end: ve_f as i64,
                            vf_end: vf_f as i64,
                        });
                    }
                }
            }
        }
        let supports = (model.v_min..=model.v_max)
            .map(|vf| model.opponent_support(vf))
            .collect();
        StepTable {
            grid,
            steps,
            supports,
            period: model.period,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn step(&self, ve: i64, vf: i64, c: Accel, u: Accel) -> Step {
        let vi = (ve - self.grid.v_min) as usize;
        let vj = (vf - self.grid.v_min) as usize;
        self.steps[((vi * self.grid.nv()) + vj) * 9 + c.index() * 3 + u.index()]
    }

    pub fn support(&self, vf: i64) -> &[Accel] {
        &self.supports[(vf - self.grid.v_min) as usize]
    }

    /// Grid successor under conservative rounding: the gap is floored, and
    /// anything past the sensor horizon is FAR (absorbing).
    pub fn grid_successor(&self, s: GridState, c: Accel, u: Accel) -> GridState {
        let step = self.step(s.ve, s.vf, c, u);
        let d = if s.d > self.grid.d_max {
            self.grid.far_cell()
        } else {
            let g = s.d as f64 + step.delta_end;
            if g > self.grid.d_max as f64 {
                self.grid.far_cell()
            } else {
                (g.floor() as i64).max(0)
            }
        };
        GridState {
            ve: step.ve_end,
            vf: step.vf_end,
            d,
        }
    }
}

// ---------------------------------------------------------------------------
// Safety game
// ---------------------------------------------------------------------------

/// Result of the safety fixpoint: membership and the maximally permissive
/// mode map over the grid. The map is non-empty exactly on member states.
pub struct SafeSet {
    grid: Grid,
    masks: Vec<u8>,
}

impl SafeSet {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn contains(&self, s: GridState) -> bool {
        self.grid.contains(s) && self.masks[self.grid.index(s)] != 0
    }

    /// Allowed ego modes; empty for unsafe states.
    pub fn allowed(&self, s: GridState) -> ActionSet {
        if !self.grid.contains(s) {
            return ActionSet::EMPTY;
        }
        ActionSet::from_indices(
            (0..3).filter(|i| self.masks[self.grid.index(s)] & (1 << i) != 0),
        )
    }

    /// Number of safe states.
    pub fn len(&self) -> usize {
        self.masks.iter().filter(|&&m| m != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.iter().all(|&m| m == 0)
    }

    /// Materialize as a strategy table over the model schema, safe states
    /// only.
    pub fn to_table(&self, model: &CruiseModel) -> Result<StrategyTable, StrategyError> {
        let mut table = StrategyTable::new(model.schema(), model.action_names())?;
        for (i, &mask) in self.masks.iter().enumerate() {
            if mask == 0 {
                continue;
            }
            let s = self.grid.state(i);
            table.insert(
                vec![s.ve, s.vf, s.d],
                ActionSet::from_indices((0..3).filter(|b| mask & (1 << b) != 0)),
                0,
            )?;
        }
        Ok(table)
    }
}

/// Greatest fixpoint of the safety game on the grid.
///
/// A state is safe iff its gap is at least `safe_gap` (or FAR) and some ego
/// mode keeps the intra-period minimum gap above `safe_gap` against every
/// opponent support mode while landing in a safe grid state. FAR states are
/// safe with every mode. The permissive map collects all qualifying modes.
pub fn synthesize_safe(model: &CruiseModel) -> Result<SafeSet, CruiseError> {
    model.validate()?;
    let steps = StepTable::new(model);
    let grid = model.grid();
    let n = grid.len();

    let mut safe: Vec<bool> = (0..n)
        .map(|i| {
            let s = grid.state(i);
            s.d > grid.d_max || s.d as f64 >= model.safe_gap
        })
        .collect();
    let mut masks = vec![0u8; n];

    loop {
        let mut changed = false;
        // Jacobi sweep: masks and the next membership derive from the
        // previous membership only, so the result is order-independent.
        use rayon::prelude::*;
        let new: Vec<u8> = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = grid.state(i);
                if !safe[i] {
                    return 0;
                }
                if s.d > grid.d_max {
                    return 0b111; // FAR: safe with all modes
                }
                if (s.d as f64) < model.safe_gap {
                    return 0;
                }
                let mut mask = 0u8;
                'modes: for c in Accel::ALL {
                    for &u in steps.support(s.vf) {
                        let step = steps.step(s.ve, s.vf, c, u);
                        if s.d as f64 + step.delta_min < model.safe_gap {
                            continue 'modes;
                        }
                        let succ = steps.grid_successor(s, c, u);
                        if !safe[grid.index(succ)] {
                            continue 'modes;
                        }
                    }
                    mask |= 1 << c.index();
                }
                mask
            })
            .collect();
        for i in 0..n {
            let member = new[i] != 0;
            if member != safe[i] {
                safe[i] = member;
                changed = true;
            }
        }
        masks = new;
        if !changed {
            break;
        }
    }

    let set = SafeSet { grid, masks };
    if !set.contains(model.initial) {
        return Err(CruiseError::Unsatisfiable(model.initial));
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// Finite-horizon value iteration
// ---------------------------------------------------------------------------

/// Outcome of [`optimize`]: the greedy deterministic sub-strategy and the
/// state values (expected total gap over the horizon).
pub struct Optimized {
    pub strategy: StrategyTable,
    grid: Grid,
    values: Vec<f64>,
}

impl Optimized {
    /// Expected cost-to-go from a grid state (0 outside the allowed domain).
    pub fn value(&self, s: GridState) -> f64 {
        if self.grid.contains(s) {
            self.values[self.grid.index(s)]
        } else {
            0.0
        }
    }
}

/// Minimize the expected sum of gaps at the next `horizon` decision points
/// (FAR counted as `d_max`) by value iteration within a permissive strategy
/// table, returning the greedy deterministic sub-strategy (ties to the
/// lexicographically smaller mode).
///
/// The allowed table must be closed under its own dynamics: every successor
/// of a covered state, under any allowed mode and any opponent support
/// mode, is covered too.
pub fn optimize(
    model: &CruiseModel,
    allowed: &StrategyTable,
    horizon: u32,
) -> Result<Optimized, CruiseError> {
    model.validate()?;
    if *allowed.schema() != model.schema() {
        return Err(CruiseError::BadAllowedTable(
            "schema does not match the model grid".into(),
        ));
    }
    if allowed.actions() != model.action_names() {
        return Err(CruiseError::BadAllowedTable(
            "action alphabet must be [dec, neu, acc]".into(),
        ));
    }
    let grid = model.grid();
    let steps = StepTable::new(model);
    let n = grid.len();

    // dense permissive mask; 0 = not covered
    let mut mask = vec![0u8; n];
    for (config, set) in allowed.rows() {
        let s = GridState {
            ve: config[0],
            vf: config[1],
            d: config[2],
        };
        let mut m = 0u8;
        for a in set.iter() {
            m |= 1 << a;
        }
        mask[grid.index(s)] = m;
    }

    // closure check: successors of covered states stay covered
    for i in 0..n {
        if mask[i] == 0 {
            continue;
        }
        let s = grid.state(i);
        for c in Accel::ALL {
            if mask[i] & (1 << c.index()) == 0 {
                continue;
            }
            for &u in steps.support(s.vf) {
                let succ = steps.grid_successor(s, c, u);
                if mask[grid.index(succ)] == 0 {
                    return Err(CruiseError::UncoveredState(succ));
                }
            }
        }
    }

    let gap_cost = |s: GridState| -> f64 {
        if s.d > grid.d_max {
            grid.d_max as f64
        } else {
            s.d as f64
        }
    };

    use rayon::prelude::*;
    let sweep = |prev: &[f64]| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                if mask[i] == 0 {
                    return 0.0;
                }
                let s = grid.state(i);
                let support = steps.support(s.vf);
                let p = 1.0 / support.len() as f64;
                let mut best = f64::INFINITY;
                for c in Accel::ALL {
                    if mask[i] & (1 << c.index()) == 0 {
                        continue;
                    }
                    let mut exp = 0.0;
                    for &u in support {
                        let succ = steps.grid_successor(s, c, u);
                        exp += p * (gap_cost(succ) + prev[grid.index(succ)]);
                    }
                    if exp < best {
                        best = exp;
                    }
                }
                best
            })
            .collect()
    };

    let mut values = vec![0.0f64; n];
    for _ in 1..horizon {
        values = sweep(&values);
    }
    // final sweep carries the greedy choice; for horizon 0 both the values
    // and the continuation are zero and the choice degenerates to the first
    // allowed mode
    let continuation = values.clone();
    if horizon > 0 {
        values = sweep(&continuation);
    }

    let mut strategy = StrategyTable::new(model.schema(), model.action_names())?;
    for (i, &state_mask) in mask.iter().enumerate() {
        if state_mask == 0 {
            continue;
        }
        let s = grid.state(i);
        let support = steps.support(s.vf);
        let p = 1.0 / support.len() as f64;
        let mut best_mode = None;
        let mut best = f64::INFINITY;
        for c in Accel::ALL {
            if state_mask & (1 << c.index()) == 0 {
                continue;
            }
            let exp = if horizon == 0 {
                0.0
            } else {
                support
                    .iter()
                    .map(|&u| {
                        let succ = steps.grid_successor(s, c, u);
                        p * (gap_cost(succ) + continuation[grid.index(succ)])
                    })
                    .sum()
            };
            if exp < best {
                best = exp;
                best_mode = Some(c);
            }
        }
        let mode = best_mode.expect("non-empty allowed sets");
        strategy.insert(
            vec![s.ve, s.vf, s.d],
            ActionSet::from_indices([mode.index()]),
            0,
        )?;
    }

    Ok(Optimized {
        strategy,
        grid,
        values,
    })
}
