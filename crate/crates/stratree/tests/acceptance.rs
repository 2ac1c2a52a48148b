//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its runtime (visible with `--nocapture`). Criteria pin
//! exact reproductions of the worked micro-examples, oracle agreement at
//! scale, and end-to-end safety of every strategy derived from the safe
//! set.
//!
//! Run with `cargo test --test acceptance -- --test-threads=1 --nocapture`
//! for a readable pass/fail line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::*;
use stratree::codegen::{export_code, interp, Dialect};
use stratree::cruise::{optimize, synthesize_safe, CruiseModel, GridState};
use stratree::harness::{estimate_expected_cost, sweep, CellStatus, TreePolicy};
use stratree::prune::safe_prune;
use stratree::strategy::{ActionSet, FeatureSchema, StrategyTable};
use stratree::tree::{learn, DecisionTree, LeafStats, Node, Predicate};
use stratree::view::{lookup, materialize_on, Determinized, DeterminizeRule};

fn report(criterion: &str, t0: Instant, budget: Duration) {
    let elapsed = t0.elapsed();
    assert!(
        elapsed < budget,
        "{criterion}: took {elapsed:?}, budget {budget:?}"
    );
    println!("{criterion}: PASS in {elapsed:.2?}");
}

fn sample_table() -> StrategyTable {
    let schema = FeatureSchema::ordered(&[("distance", 0, 100), ("velocity", 0, 100)]);
    let mut t =
        StrategyTable::new(schema, vec!["dec".into(), "neu".into(), "acc".into()]).unwrap();
    t.insert_named(vec![2, 51], &["dec"]).unwrap();
    t.insert_named(vec![3, 20], &["dec"]).unwrap();
    t.insert_named(vec![5, 30], &["dec"]).unwrap();
    t.insert_named(vec![7, 1], &["dec", "neu"]).unwrap();
    t.insert_named(vec![20, 46], &["dec", "neu"]).unwrap();
    t.insert_named(vec![25, 25], &["dec", "neu", "acc"]).unwrap();
    t.insert_named(vec![45, 70], &["dec", "neu"]).unwrap();
    t
}

/// Criterion 1: learning the seven-row sample dataset yields exactly the
/// printed tree (root distance <= 6, inner thresholds 22.5 and 35, the four
/// leaf count lists), byte-identical under canonical serialization.
#[test]
fn criterion_01_sample_tree_reproduction() {
    let t0 = Instant::now();
    let table = sample_table();
    let learnt = learn(&table, 2).unwrap();

    let leaf = |counts: Vec<(u32, u32)>| Node::Leaf {
        stats: LeafStats::new(counts).unwrap(),
    };
    let expected = DecisionTree::from_parts(
        table.schema().clone(),
        table.actions().to_vec(),
        vec![
            Node::Inner {
                predicate: Predicate::Le { feature: 0, threshold: 6.0 },
                left: 1,
                right: 2,
            },
            leaf(vec![(0, 3), (3, 0), (3, 0)]),
            Node::Inner {
                predicate: Predicate::Le { feature: 0, threshold: 22.5 },
                left: 3,
                right: 4,
            },
            leaf(vec![(0, 2), (0, 2), (2, 0)]),
            Node::Inner {
                predicate: Predicate::Le { feature: 0, threshold: 35.0 },
                left: 5,
                right: 6,
            },
            leaf(vec![(0, 1), (0, 1), (0, 1)]),
            leaf(vec![(0, 1), (0, 1), (1, 0)]),
        ],
        0,
    )
    .unwrap();

    assert_eq!(learnt.size(), 7);
    assert_eq!(
        learnt.to_json().into_bytes(),
        expected.to_json().into_bytes(),
        "canonical serializations must be byte-identical"
    );
    report("criterion 01 (sample-tree reproduction)", t0, Duration::from_secs(1));
}

/// Criterion 2: merging the printed two-leaf subtree produces the printed
/// merged leaf with counts [(0,14),(7,7),(10,4)] and pure set {dec}.
#[test]
fn criterion_02_leaf_merge_reproduction() {
    let t0 = Instant::now();
    let schema = FeatureSchema::ordered(&[("x", 0, 100)]);
    let tree = DecisionTree::from_parts(
        schema,
        vec!["dec".into(), "neu".into(), "acc".into()],
        vec![
            Node::Inner {
                predicate: Predicate::Le { feature: 0, threshold: 5.0 },
                left: 1,
                right: 2,
            },
            Node::Leaf {
                stats: LeafStats::new(vec![(0, 7), (7, 0), (7, 0)]).unwrap(),
            },
            Node::Leaf {
                stats: LeafStats::new(vec![(0, 7), (0, 7), (3, 4)]).unwrap(),
            },
        ],
        0,
    )
    .unwrap();
    let pruned = safe_prune(&tree, 1).unwrap();
    assert_eq!(pruned.size(), 1);
    match pruned.node(pruned.root()) {
        Node::Leaf { stats } => {
            assert_eq!(stats.counts(), &[(0, 14), (7, 7), (10, 4)]);
            assert_eq!(stats.pure_actions(), ActionSet::from_indices([0]));
        }
        _ => panic!("expected a single merged leaf"),
    }
    report("criterion 02 (leaf-merge reproduction)", t0, Duration::from_secs(1));
}

/// Criterion 3: on 100 random tables (up to 1e5 entries, <= 6 features),
/// the exact tree agrees with table lookup on every entry.
#[test]
fn criterion_03_exactness_on_random_tables() {
    let t0 = Instant::now();
    for i in 0..100u64 {
        let n_entries = match i {
            0 => 100_000,
            1 => 30_000,
            2 => 10_000,
            _ => 50 + (i as usize * 37) % 2_000,
        };
        let table = random_table_seeded(0x3000 + i, 6, n_entries);
        let tree = learn(&table, 2).unwrap();
        let mut point = Vec::new();
        for (config, set) in table.rows() {
            point.clear();
            point.extend(config.iter().map(|&v| v as f64));
            assert_eq!(
                lookup(&tree, &point).unwrap(),
                *set,
                "table {i}, config {config:?}"
            );
        }
    }
    report(
        "criterion 03 (exactness oracle, 100 random tables)",
        t0,
        Duration::from_secs(300),
    );
}

/// Criterion 4: the full safety chain. Synthesize the safe set on the full
/// grid; for every (k, p) in {2,10,100} x {0,1,2} the reduced tree's
/// strategy is a sub-strategy of the safe one on every grid state, and 1e4
/// seeded Monte-Carlo runs of horizon 100 per cell record zero violations
/// of the 5 m gap, intra-period minima included.
#[test]
fn criterion_04_safety_chain() {
    let t0 = Instant::now();
    let model = CruiseModel::default();
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();

    for k in [2u32, 10, 100] {
        let base = learn(&table, k).unwrap();
        for p in [0u32, 1, 2] {
            let reduced = safe_prune(&base, p).unwrap();
            let sub = materialize_on(
                &reduced,
                table.schema(),
                table.configs().map(|c| c.to_vec()),
            )
            .unwrap();
            assert!(
                table.restricts(&sub).unwrap(),
                "(k={k}, p={p}): tree strategy must be a sub-strategy of the safe set"
            );

            let cell_seed = (k as u64) << 8 | p as u64;
            let est = estimate_expected_cost(
                &model,
                |run| {
                    TreePolicy::new(
                        &reduced,
                        DeterminizeRule::UniformSeeded(cell_seed ^ run.wrapping_mul(0x9E3779B97F4A7C15)),
                    )
                },
                100,
                10_000,
                cell_seed,
            )
            .unwrap();
            assert_eq!(
                est.violations, 0,
                "(k={k}, p={p}): safety violations in Monte-Carlo runs"
            );
        }
    }
    report("criterion 04 (safety chain)", t0, Duration::from_secs(1800));
}

/// Criterion 5: a constant strategy table of any size learns to a
/// single-node tree.
#[test]
fn criterion_05_trivial_strategy_single_node() {
    let t0 = Instant::now();
    for n in [1usize, 100, 10_000] {
        let schema = FeatureSchema::ordered(&[("x", 0, 200), ("y", 0, 200)]);
        let mut table =
            StrategyTable::new(schema, vec!["open".into(), "close".into()]).unwrap();
        let mut count = 0;
        'outer: for x in 0..=200 {
            for y in 0..=200 {
                if count == n {
                    break 'outer;
                }
                table.insert_named(vec![x, y], &["open"]).unwrap();
                count += 1;
            }
        }
        let tree = learn(&table, 2).unwrap();
        assert_eq!(tree.size(), 1, "constant table of {n} entries");
    }
    report("criterion 05 (trivial strategy)", t0, Duration::from_secs(60));
}

/// Criterion 6: BDD correctness on a reduced grid within 16 encoding bits:
/// exhaustive truth-table agreement with the membership oracle, sifting
/// preserves the function and never grows the diagram, and the CSV report
/// over 40 random orders is produced.
#[test]
fn criterion_06_bdd_correctness() {
    use stratree::bdd::{build_strategy_bdd, ActionBits, BitEncoding};

    let t0 = Instant::now();
    let model = CruiseModel::mini(); // velocities 0..7, gaps 0..62 + FAR
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();
    let enc = BitEncoding::new(table.schema(), 3, ActionBits::OneHot).unwrap();
    assert!(enc.n_vars() <= 16, "encoding must fit 16 bits");

    let bdd = build_strategy_bdd(&table, &enc, None).unwrap();
    for pattern in 0u64..(1 << enc.n_vars()) {
        let expect = match enc.decode(pattern) {
            Some((config, action)) => table
                .get(&config)
                .map(|set| set.contains(action))
                .unwrap_or(false),
            None => false,
        };
        assert_eq!(bdd.eval(pattern), expect, "pattern {pattern:b}");
    }

    let sifted = bdd.sift().unwrap();
    assert!(sifted.size() <= bdd.size());
    for pattern in 0u64..(1 << enc.n_vars()) {
        assert_eq!(bdd.eval(pattern), sifted.eval(pattern));
    }

    let row = stratree::harness::size_report("cruise-mini", &table, 40, 7).unwrap();
    assert_eq!(row.trials, 40);
    assert!(row.bdd_min <= row.bdd_median && row.bdd_median <= row.bdd_max);
    println!(
        "  {}\n  {}",
        stratree::harness::SizeReport::csv_header(),
        row.to_csv_row()
    );
    report("criterion 06 (BDD correctness)", t0, Duration::from_secs(600));
}

/// Criterion 7: over 100 random learned trees, pruning is monotone per
/// round, reaches a fixpoint, and pure-action sets only shrink pointwise.
#[test]
fn criterion_07_pruning_monotonicity() {
    let t0 = Instant::now();
    for i in 0..100u64 {
        let table = random_table_seeded(0x7000 + i, 3, 120);
        let k = 2 + (i % 7) as u32;
        let tree = match learn(&table, k) {
            Ok(t) => t,
            // an infeasible k still yields a tree to prune via the exact one
            Err(stratree::tree::TreeError::NoPureAction { .. }) => learn(&table, 2).unwrap(),
            Err(e) => panic!("{e}"),
        };
        let mut prev = tree.clone();
        let mut fixpoint = false;
        for round in 1..=32u32 {
            let next = safe_prune(&prev, 1).unwrap();
            assert!(
                next.size() <= prev.size(),
                "table {i}: size grew in round {round}"
            );
            for (config, _) in table.rows() {
                let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
                let before = lookup(&prev, &point).unwrap();
                let after = lookup(&next, &point).unwrap();
                assert!(!after.is_empty());
                assert!(
                    after.is_subset(&before),
                    "table {i}: pure set grew at {config:?}"
                );
            }
            if next.size() == prev.size() {
                // fixpoint: a further round must change nothing
                let again = safe_prune(&next, 1).unwrap();
                assert_eq!(again, next, "table {i}: fixpoint not idempotent");
                fixpoint = true;
                break;
            }
            prev = next;
        }
        assert!(fixpoint, "table {i}: no fixpoint within 32 rounds");
    }
    report("criterion 07 (pruning monotonicity)", t0, Duration::from_secs(300));
}

/// Criterion 8: on a toy model under 50 states with horizons up to 3,
/// value iteration matches outcome-tree expectimin to 1e-9 relative error
/// and the greedy strategy is a sub-strategy of its allowed set.
#[test]
fn criterion_08_optimizer_oracle() {
    let t0 = Instant::now();
    let model = CruiseModel {
        v_min: 0,
        v_max: 1,
        d_max: 9,
        safe_gap: 2.0,
        initial: GridState { ve: 0, vf: 0, d: 6 },
        horizon: 3,
        ..CruiseModel::mini()
    };
    assert!(model.grid().len() <= 50, "toy model must stay within 50 states");
    let safe = synthesize_safe(&model).unwrap();
    let allowed = safe.to_table(&model).unwrap();

    for h in 0..=3u32 {
        let opt = optimize(&model, &allowed, h).unwrap();
        for (config, _) in allowed.rows() {
            let s = GridState { ve: config[0], vf: config[1], d: config[2] };
            let want = expectimin(&model, &allowed, s, h);
            let got = opt.value(s);
            let tol = 1e-9 * want.abs().max(1.0);
            assert!(
                (got - want).abs() <= tol,
                "h={h}, state {s:?}: vi {got} vs oracle {want}"
            );
        }
        assert!(
            allowed.restricts(&opt.strategy).unwrap(),
            "h={h}: greedy strategy must pass restrict against its allowed set"
        );
    }
    report("criterion 08 (optimizer oracle)", t0, Duration::from_secs(120));
}

/// Criterion 9: the bundled interpreter of emitted code agrees with
/// lexicographic determinization on every training configuration of 20
/// random trees.
#[test]
fn criterion_09_code_export_equivalence() {
    let t0 = Instant::now();
    for i in 0..20u64 {
        let table = random_table_seeded(0x9000 + i, 4, 150);
        let k = if i % 3 == 0 { 4 } else { 2 };
        let tree = match learn(&table, k) {
            Ok(t) => t,
            Err(stratree::tree::TreeError::NoPureAction { .. }) => learn(&table, 2).unwrap(),
            Err(e) => panic!("{e}"),
        };
        let code = export_code(&tree, Dialect::CLike);
        let controller = interp::parse(&code).unwrap_or_else(|e| {
            panic!("tree {i}: emitted code failed to parse: {e}\n{code}")
        });
        let mut lex = Determinized::new(&tree, DeterminizeRule::LexicographicFirst);
        for (config, _) in table.rows() {
            let point: Vec<f64> = config.iter().map(|&v| v as f64).collect();
            assert_eq!(
                controller.eval(&point).unwrap(),
                lex.pick(&point).unwrap(),
                "tree {i} at {config:?}"
            );
        }
    }
    report("criterion 09 (code-export equivalence)", t0, Duration::from_secs(120));
}

/// Criterion 10: the sweep's (k=2, p=0) cell reports the same tree size as
/// the top-path exact tree of the same optimized strategy.
#[test]
fn criterion_10_sweep_consistency() {
    let t0 = Instant::now();
    let model = CruiseModel::mini();
    let safe = synthesize_safe(&model).unwrap();
    let table = safe.to_table(&model).unwrap();
    let horizon = 12;

    // top path: optimize within the safe set, learn the exact tree
    let top = optimize(&model, &table, horizon).unwrap();
    let top_tree = learn(&top.strategy, 2).unwrap();

    let cells = sweep(&model, &table, &[2, 10], &[0, 1], horizon, 200, 5).unwrap();
    let cell = cells
        .iter()
        .find(|c| c.k == 2 && c.p == 0)
        .expect("sweep must contain the (2, 0) cell");
    match &cell.status {
        CellStatus::Feasible {
            tree_size,
            violations,
            ..
        } => {
            assert_eq!(
                *tree_size,
                top_tree.size(),
                "(2,0) cell must reproduce the top-path tree size"
            );
            assert_eq!(*violations, 0);
        }
        CellStatus::Infeasible { reason } => panic!("(2,0) infeasible: {reason}"),
    }
    // every feasible cell is violation-free
    for c in &cells {
        if let CellStatus::Feasible { violations, .. } = c.status {
            assert_eq!(violations, 0, "(k={}, p={})", c.k, c.p);
        }
    }
    report("criterion 10 (sweep consistency)", t0, Duration::from_secs(300));
}
