//! Property tests over seeded random instances.

mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stratree::bdd::BddBuilder;
use stratree::cruise::{flow, min_gap_over_period, Accel, CruiseModel, CruiseState, Gap};
use stratree::prune::safe_prune;
use stratree::strategy::{read_strategy, write_strategy, ActionSet, StrategyTable};
use stratree::tree::learn;
use stratree::view::lookup;

/// Random sub-table: drop some entries, shrink the rest's sets (non-empty).
fn random_sub_table(rng: &mut ChaCha8Rng, table: &StrategyTable) -> StrategyTable {
    let mut sub = StrategyTable::new(table.schema().clone(), table.actions().to_vec()).unwrap();
    for (config, set) in table.rows() {
        if rng.random_range(0..4) == 0 {
            continue;
        }
        let members: Vec<usize> = set.iter().collect();
        let keep = rng.random_range(1..=members.len());
        let mut shrunk = ActionSet::EMPTY;
        for &a in members.iter().take(keep) {
            shrunk.insert(a);
        }
        sub.insert(config.clone(), shrunk, 0).unwrap();
    }
    if sub.is_empty() {
        // keep at least one entry so the sub-table is a valid strategy
        let (config, set) = &table.rows()[0];
        sub.insert(config.clone(), *set, 0).unwrap();
    }
    sub
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn restrict_is_reflexive_and_transitive(seed in any::<u64>()) {
        let table = random_table_seeded(seed, 3, 60);
        prop_assert!(table.restricts(&table).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xAB);
        let sub = random_sub_table(&mut rng, &table);
        let subsub = random_sub_table(&mut rng, &sub);
        prop_assert!(table.restricts(&sub).unwrap());
        prop_assert!(sub.restricts(&subsub).unwrap());
        prop_assert!(table.restricts(&subsub).unwrap());
    }

    #[test]
    fn tree_size_is_monotone_in_min_split(seed in any::<u64>()) {
        let table = random_table_seeded(seed, 3, 120);
        let mut prev = usize::MAX;
        for k in [2u32, 4, 8, 16, 64] {
            match learn(&table, k) {
                Ok(tree) => {
                    prop_assert!(tree.size() <= prev, "k={k}: {} > {prev}", tree.size());
                    prev = tree.size();
                }
                Err(stratree::tree::TreeError::NoPureAction { .. }) => break,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn reduced_trees_stay_within_the_table(seed in any::<u64>()) {
        // safety containment: for any k and p, the tree's answer at a
        // training point is a non-empty subset of the table's set
        let table = random_table_seeded(seed, 3, 80);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xCD);
        let k = rng.random_range(2..=12);
        let tree = match learn(&table, k) {
            Ok(t) => t,
            Err(stratree::tree::TreeError::NoPureAction { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let p = rng.random_range(0..=3);
        let pruned = safe_prune(&tree, p).unwrap();
        for (config, set) in table.rows() {
            let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
            let full = lookup(&tree, &point).unwrap();
            let narrowed = lookup(&pruned, &point).unwrap();
            prop_assert!(!narrowed.is_empty());
            prop_assert!(narrowed.is_subset(&full), "pruning must only shrink");
            prop_assert!(full.is_subset(set), "tree answers must stay within the table");
        }
    }

    #[test]
    fn strategy_file_round_trip(seed in any::<u64>()) {
        let table = random_table_seeded(seed, 4, 40);
        let mut bytes = Vec::new();
        write_strategy(&table, &mut bytes).unwrap();
        let back = read_strategy(bytes.as_slice()).unwrap();
        prop_assert_eq!(table, back);
    }

    #[test]
    fn tree_json_round_trip(seed in any::<u64>()) {
        let table = random_table_seeded(seed, 3, 50);
        let tree = learn(&table, 2).unwrap();
        let back = stratree::tree::DecisionTree::from_json(&tree.to_json()).unwrap();
        prop_assert_eq!(&tree, &back);
        prop_assert_eq!(tree.to_json(), back.to_json());
    }

    #[test]
    fn exact_learning_is_exact(seed in any::<u64>()) {
        let table = random_table_seeded(seed, 4, 200);
        let tree = learn(&table, 2).unwrap();
        for (config, set) in table.rows() {
            let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
            prop_assert_eq!(lookup(&tree, &point).unwrap(), *set);
        }
    }
}

// ---------------------------------------------------------------------------
// Cruise dynamics properties
// ---------------------------------------------------------------------------

fn random_state(rng: &mut ChaCha8Rng, model: &CruiseModel) -> CruiseState {
    CruiseState {
        v_ego: rng.random_range(model.v_min..=model.v_max) as f64,
        v_front: rng.random_range(model.v_min..=model.v_max) as f64,
        gap: Gap::Range(rng.random_range(10..=model.d_max - 35) as f64),
        a_ego: Accel::ALL[rng.random_range(0..3)],
        a_front: Accel::ALL[rng.random_range(0..3)],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_additive_on_dyadic_splits(seed in any::<u64>()) {
        let model = CruiseModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng, &model);
        // dyadic split keeps every piecewise breakpoint representable
        let t1 = rng.random_range(1..64) as f64 / 64.0;
        let composed = flow(&model, &flow(&model, &s, t1), 1.0 - t1);
        let direct = flow(&model, &s, 1.0);
        prop_assert!((composed.v_ego - direct.v_ego).abs() < 1e-12);
        prop_assert!((composed.v_front - direct.v_front).abs() < 1e-12);
        match (composed.gap, direct.gap) {
            (Gap::Range(a), Gap::Range(b)) => prop_assert!((a - b).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a.is_far(), b.is_far()),
        }
    }

    #[test]
    fn min_gap_bounds_the_trajectory(seed in any::<u64>()) {
        let model = CruiseModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng, &model);
        let bound = min_gap_over_period(&model, &s);
        let mut sampled = s.gap.meters_or(f64::INFINITY);
        for i in 1..=256 {
            let t = i as f64 / 256.0;
            let g = flow(&model, &s, t).gap.meters_or(f64::INFINITY);
            prop_assert!(bound <= g + 1e-9, "bound {bound} above gap {g} at t={t}");
            sampled = sampled.min(g);
        }
        // the bound is attained up to the sampling density
        prop_assert!(sampled - bound <= 0.2, "bound {bound} vs sampled {sampled}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sifting_preserves_random_functions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_vars = rng.random_range(3..=8u32);
        let n_minterms = rng.random_range(1..=40usize);
        let patterns: Vec<u64> = (0..n_minterms)
            .map(|_| rng.random_range(0..(1u64 << n_vars)))
            .collect();
        let mut builder = BddBuilder::new(n_vars, None).unwrap();
        let root = builder.add_patterns(&patterns).unwrap();
        let bdd = builder.freeze(root);
        let sifted = bdd.sift().unwrap();
        prop_assert!(sifted.size() <= bdd.size());
        for a in 0..(1u64 << n_vars) {
            prop_assert_eq!(bdd.eval(a), sifted.eval(a), "at {:b}", a);
        }
    }
}
