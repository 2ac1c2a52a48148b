//! Compact, provably safe decision-tree representations of permissive
//! controller strategies.
//!
//! The pipeline: a permissive strategy (a table mapping configurations to
//! the sets of actions that keep the system safe) is learnt into a
//! multi-label decision tree that either represents it exactly or trades
//! precision for size via the minimum-split-size knob and rounds of safe
//! pruning — both reductions only ever *shrink* the allowed sets, so safety
//! survives compression. Trees answer permissive queries, determinize to
//! single actions, export as nested-if controller code, and can be compared
//! against a reduced ordered BDD baseline built by bit-blasting.
//!
//! A self-contained two-car cruise-control benchmark closes the loop:
//! safe-strategy synthesis by a safety-game fixpoint, cost optimization by
//! finite-horizon value iteration, and a seeded Monte-Carlo harness that
//! checks the whole chain end to end.
//!
//! Start with the `examples/` directory; each example exercises one
//! capability and runs in seconds. The `stratree` binary exposes the same
//! operations as subcommands for file-based workflows.
//!
//! ```
//! use stratree::{FeatureSchema, StrategyTable};
//! use stratree::tree::learn;
//! use stratree::view::lookup;
//!
//! let schema = FeatureSchema::ordered(&[("distance", 0, 100)]);
//! let mut table = StrategyTable::new(schema, vec!["dec".into(), "neu".into()]).unwrap();
//! table.insert_named(vec![4], &["dec"]).unwrap();
//! table.insert_named(vec![30], &["dec", "neu"]).unwrap();
//!
//! let tree = learn(&table, 2).unwrap();
//! assert_eq!(tree.size(), 3);
//! // permissive answers work off the training grid too
//! assert_eq!(lookup(&tree, &[28.5]).unwrap().len(), 2);
//! ```

pub mod bdd;
pub mod codegen;
pub mod cruise;
pub mod harness;
pub mod prune;
pub mod strategy;
pub mod tree;
pub mod view;

pub use strategy::{
    load_strategy, save_strategy, ActionSet, Feature, FeatureKind, FeatureSchema,
    StrategyError, StrategyTable,
};
pub use tree::{learn, multilabel_entropy, DecisionTree, LeafStats, Predicate, TreeError};

pub use prune::safe_prune;
