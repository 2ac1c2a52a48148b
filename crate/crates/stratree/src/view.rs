//! Interpreting a decision tree as a strategy.
//!
//! A tree answers queries on (possibly real-valued) points by routing them
//! to a leaf and returning that leaf's pure actions. Determinization turns
//! the permissive answer into a single action, either by fixed alphabet
//! order or by a seeded uniform draw. Materialization evaluates the tree
//! over an integer grid and produces an ordinary strategy table, mostly for
//! cross-checking reduced trees against the tables they came from.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::strategy::{ActionSet, FeatureSchema, StrategyError, StrategyTable};
use crate::tree::DecisionTree;

#[derive(Debug, Error)]
pub enum ViewError {
    #[error("corrupt tree: reached a leaf with no pure action at {point:?}")]
    NoActionAt { point: Vec<f64> },
    #[error("point has {got} coordinates, schema has {want} features")]
    BadArity { got: usize, want: usize },
    #[error("grid of {size} points exceeds the cap of {cap}")]
    GridTooLarge { size: u128, cap: u128 },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// Pure actions of the leaf the point falls into.
pub fn lookup(tree: &DecisionTree, point: &[f64]) -> Result<ActionSet, ViewError> {
    if point.len() != tree.schema().arity() {
        return Err(ViewError::BadArity {
            got: point.len(),
            want: tree.schema().arity(),
        });
    }
    let set = tree.leaf_for(point).pure_actions();
    if set.is_empty() {
        return Err(ViewError::NoActionAt {
            point: point.to_vec(),
        });
    }
    Ok(set)
}

/// How a permissive answer is narrowed to one action.
#[derive(Debug, Clone, Copy)]
pub enum DeterminizeRule {
    /// The allowed action that comes first in the alphabet.
    LexicographicFirst,
    /// An i.i.d. uniform draw from the allowed set, from a seeded stream.
    UniformSeeded(u64),
}

/// A determinized view of a tree: maps each point to a single action index,
/// always a member of [`lookup`]'s answer at that point.
pub struct Determinized<'t> {
    tree: &'t DecisionTree,
    rng: Option<ChaCha8Rng>,
}

impl<'t> Determinized<'t> {
    pub fn new(tree: &'t DecisionTree, rule: DeterminizeRule) -> Self {
        let rng = match rule {
            DeterminizeRule::LexicographicFirst => None,
            DeterminizeRule::UniformSeeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Determinized { tree, rng }
    }

    pub fn tree(&self) -> &DecisionTree {
        self.tree
    }

    /// Pick one action for the point.
    pub fn pick(&mut self, point: &[f64]) -> Result<usize, ViewError> {
        let set = lookup(self.tree, point)?;
        Ok(match &mut self.rng {
            None => set.first().expect("non-empty set"),
            Some(rng) => {
                let members: Vec<usize> = set.iter().collect();
                members[rng.random_range(0..members.len())]
            }
        })
    }
}

/// Evaluate the tree on every integer grid point of `grid` and collect the
/// results into a strategy table. `cap` bounds the number of grid points.
pub fn to_table(
    tree: &DecisionTree,
    grid: &FeatureSchema,
    cap: u128,
) -> Result<StrategyTable, ViewError> {
    let size = grid.grid_size();
    if size > cap {
        return Err(ViewError::GridTooLarge { size, cap });
    }
    materialize_on(tree, grid, grid.grid_iter())
}

/// Evaluate the tree on an explicit set of integer configurations.
pub fn materialize_on(
    tree: &DecisionTree,
    schema: &FeatureSchema,
    configs: impl IntoIterator<Item = Vec<i64>>,
) -> Result<StrategyTable, ViewError> {
    let mut table = StrategyTable::new(schema.clone(), tree.actions().to_vec())?;
    let mut point = Vec::new();
    for config in configs {
        point.clear();
        point.extend(config.iter().map(|&v| v as f64));
        let set = lookup(tree, &point)?;
        table.insert(config, set, 0)?;
    }
    Ok(table)
}
