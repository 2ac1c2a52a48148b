//! Shared generators and independent oracles for the integration tests.
//!
//! Everything here deliberately avoids the library's fast paths: the safety
//! oracle re-derives the fixpoint from the public continuous-flow API, the
//! expectation oracles enumerate outcome trees, and the entropy oracle digs
//! out logarithm bits with big-integer arithmetic. Agreement between these
//! and the optimized implementations is the point of the tests.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stratree::cruise::{
    flow, min_gap_over_period, Accel, CruiseModel, Gap, GridState,
};
use stratree::strategy::{ActionSet, Feature, FeatureKind, FeatureSchema, StrategyTable};

// ---------------------------------------------------------------------------
// Random strategy tables
// ---------------------------------------------------------------------------

/// A random schema with 1..=max_features features, mixing ordered ranges
/// and small categorical domains.
pub fn random_schema(rng: &mut ChaCha8Rng, max_features: usize) -> FeatureSchema {
    let d = rng.random_range(1..=max_features);
    let features = (0..d)
        .map(|i| {
            let name = format!("f{i}");
            if rng.random_range(0..4) == 0 {
                let n_vals = rng.random_range(2..=5);
                let mut values: Vec<i64> = Vec::new();
                while values.len() < n_vals {
                    let v = rng.random_range(-10..50);
                    if !values.contains(&v) {
                        values.push(v);
                    }
                }
                Feature {
                    name,
                    kind: FeatureKind::Categorical { values },
                }
            } else {
                let min = rng.random_range(-50..0);
                let max = min + rng.random_range(10..120);
                Feature {
                    name,
                    kind: FeatureKind::Ordered { min, max },
                }
            }
        })
        .collect();
    FeatureSchema::new(features).expect("generated schema is valid")
}

/// A random table with distinct configurations and non-empty action sets.
/// The schema's grid must comfortably exceed `n_entries`.
pub fn random_table(
    rng: &mut ChaCha8Rng,
    schema: &FeatureSchema,
    n_actions: usize,
    n_entries: usize,
) -> StrategyTable {
    let actions: Vec<String> = (0..n_actions).map(|i| format!("a{i}")).collect();
    let mut table = StrategyTable::new(schema.clone(), actions).unwrap();
    let full = (1u32 << n_actions) - 1;
    let mut seen = std::collections::HashSet::new();
    while table.len() < n_entries {
        let config: Vec<i64> = schema
            .features()
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Ordered { min, max } => rng.random_range(*min..=*max),
                FeatureKind::Categorical { values } => {
                    values[rng.random_range(0..values.len())]
                }
            })
            .collect();
        if !seen.insert(config.clone()) {
            continue;
        }
        let mask = rng.random_range(1..=full);
        let set = ActionSet::from_indices((0..n_actions).filter(|a| mask & (1 << a) != 0));
        table.insert(config, set, 0).unwrap();
    }
    table
}

/// Convenience: seeded random table over a fresh random schema.
pub fn random_table_seeded(seed: u64, max_features: usize, n_entries: usize) -> StrategyTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = loop {
        let s = random_schema(&mut rng, max_features);
        // need room for distinct configurations
        if s.grid_size() >= 4 * n_entries as u128 {
            break s;
        }
    };
    let n_actions = rng.random_range(2..=4);
    random_table(&mut rng, &schema, n_actions, n_entries)
}

// ---------------------------------------------------------------------------
// High-precision entropy oracle
// ---------------------------------------------------------------------------

/// log2 of a positive integer to ~60 correct bits, by fixed-point squaring
/// at 200 fractional bits.
pub fn log2_int(m: u64) -> f64 {
    assert!(m > 0);
    const P: u64 = 200;
    let e = 63 - m.leading_zeros() as u64; // m = 2^e * y, y in [1, 2)
    let mut y: BigUint = (BigUint::from(m) << P) >> e;
    let two = BigUint::from(1u8) << (P + 1);
    let mut frac = 0.0f64;
    let mut bit = 0.5f64;
    for _ in 0..80 {
        y = (&y * &y) >> P;
        if y >= two {
            frac += bit;
            y >>= 1;
        }
        bit *= 0.5;
    }
    e as f64 + frac
}

/// Multi-label entropy of per-action (n_a, y_a) counts, computed from the
/// big-integer log oracle: sum over actions of
/// `log2 t - (y·log2 y + (t-y)·log2(t-y)) / t`.
pub fn entropy_oracle(counts: &[(u32, u32)]) -> f64 {
    let total = (counts[0].0 + counts[0].1) as u64;
    counts
        .iter()
        .map(|&(_, y)| {
            let y = y as u64;
            let n = total - y;
            if y == 0 || n == 0 {
                return 0.0;
            }
            let term = |k: u64| k as f64 * log2_int(k);
            log2_int(total) - (term(y) + term(n)) / total as f64
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Cruise oracles built on the public continuous API
// ---------------------------------------------------------------------------

/// Grid successor computed through the continuous flow, independently of
/// the library's precomputed step tables.
pub fn oracle_successor(model: &CruiseModel, s: GridState, c: Accel, u: Accel) -> GridState {
    let cont = model.continuous(s, c, u);
    let next = flow(model, &cont, model.period);
    assert_eq!(next.v_ego.fract(), 0.0);
    assert_eq!(next.v_front.fract(), 0.0);
    let d = match next.gap {
        Gap::Far => model.d_max + 1,
        Gap::Range(g) => (g.floor() as i64).max(0).min(model.d_max),
    };
    GridState {
        ve: next.v_ego as i64,
        vf: next.v_front as i64,
        d,
    }
}

/// Reference safety fixpoint: plain set-based iteration over the whole
/// grid, successors and intra-period minima taken from the continuous API.
pub fn oracle_safe_map(model: &CruiseModel) -> HashMap<GridState, ActionSet> {
    let grid = model.grid();
    let mut safe: HashMap<GridState, bool> = grid
        .states()
        .map(|s| {
            (
                s,
                s.d > model.d_max || s.d as f64 >= model.safe_gap,
            )
        })
        .collect();

    loop {
        let mut changed = false;
        let mut next: HashMap<GridState, ActionSet> = HashMap::new();
        for s in grid.states() {
            if !safe[&s] {
                next.insert(s, ActionSet::EMPTY);
                continue;
            }
            if s.d > model.d_max {
                next.insert(s, ActionSet::from_indices(0..3));
                continue;
            }
            if (s.d as f64) < model.safe_gap {
                next.insert(s, ActionSet::EMPTY);
                continue;
            }
            let mut set = ActionSet::EMPTY;
            'modes: for c in Accel::ALL {
                for u in model.opponent_support(s.vf) {
                    let cont = model.continuous(s, c, u);
                    if min_gap_over_period(model, &cont) < model.safe_gap {
                        continue 'modes;
                    }
                    if !safe[&oracle_successor(model, s, c, u)] {
                        continue 'modes;
                    }
                }
                set.insert(c.index());
            }
            next.insert(s, set);
        }
        for s in grid.states() {
            let member = !next[&s].is_empty();
            if member != safe[&s] {
                safe.insert(s, member);
                changed = true;
            }
        }
        if !changed {
            return next;
        }
    }
}

/// Outcome-tree expectimin: the exact optimal expected cost over `h`
/// decision points within an allowed table, by direct recursion.
pub fn expectimin(
    model: &CruiseModel,
    allowed: &StrategyTable,
    s: GridState,
    h: u32,
) -> f64 {
    if h == 0 {
        return 0.0;
    }
    let set = allowed
        .get(&[s.ve, s.vf, s.d])
        .expect("state covered by the allowed table");
    let support = model.opponent_support(s.vf);
    let p = 1.0 / support.len() as f64;
    Accel::ALL
        .iter()
        .filter(|c| set.contains(c.index()))
        .map(|&c| {
            support
                .iter()
                .map(|&u| {
                    let succ = oracle_successor(model, s, c, u);
                    let g = succ.d.min(model.d_max) as f64;
                    p * (g + expectimin(model, allowed, succ, h - 1))
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exact expected cost of a fixed deterministic policy by enumerating all
/// opponent sequences, mirroring the simulator's continuous-state
/// semantics (exact gaps, floor-quantized observations).
pub fn exact_policy_cost<F: Fn(GridState) -> Accel + Copy>(
    model: &CruiseModel,
    policy: F,
    h: u32,
) -> f64 {
    fn go<F: Fn(GridState) -> Accel + Copy>(
        model: &CruiseModel,
        ve: i64,
        vf: i64,
        gap: Gap,
        policy: F,
        h: u32,
    ) -> f64 {
        if h == 0 {
            return 0.0;
        }
        let obs_d = match gap {
            Gap::Far => model.d_max + 1,
            Gap::Range(g) => (g.floor() as i64).clamp(0, model.d_max),
        };
        let c = policy(GridState { ve, vf, d: obs_d });
        let support = model.opponent_support(vf);
        let p = 1.0 / support.len() as f64;
        support
            .iter()
            .map(|&u| {
                let cont = stratree::cruise::CruiseState {
                    v_ego: ve as f64,
                    v_front: vf as f64,
                    gap,
                    a_ego: c,
                    a_front: u,
                };
                let next = flow(model, &cont, model.period);
                let cost = next.gap.meters_or(model.d_max as f64);
                p * (cost
                    + go(
                        model,
                        next.v_ego as i64,
                        next.v_front as i64,
                        next.gap,
                        policy,
                        h - 1,
                    ))
            })
            .sum()
    }
    let init = model.initial;
    let gap = if init.d > model.d_max {
        Gap::Far
    } else {
        Gap::Range(init.d as f64)
    };
    go(model, init.ve, init.vf, gap, policy, h)
}
