//! Safe pruning: rounds of sibling-leaf merges that preserve safety.
//!
//! A round collects every inner node whose children are both leaves. Where
//! the children's pure-action sets intersect, the node is replaced by a leaf
//! whose counts are the component-wise sums of the children's — the merged
//! leaf's pure actions are then exactly the intersection, so the induced
//! strategy only loses permissiveness, never safety. Nodes that become
//! merge candidates mid-round are picked up in the next round.

use thiserror::Error;

use crate::tree::{DecisionTree, Node};

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("leaf without a pure action; the tree does not represent a well-defined strategy")]
    LeafWithoutPureAction,
}

/// Apply `rounds` rounds of safe pruning and return the (weakly) smaller
/// tree. Rounds beyond the fixpoint are no-ops.
pub fn safe_prune(tree: &DecisionTree, rounds: u32) -> Result<DecisionTree, PruneError> {
    let mut nodes: Vec<Node> = tree.preorder().iter().map(|&id| tree.node(id).clone()).collect();
    // preorder copy renumbers children
    {
        let order = tree.preorder();
        let renumber: std::collections::HashMap<usize, usize> =
            order.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        for node in &mut nodes {
            if let Node::Inner { left, right, .. } = node {
                *left = renumber[left];
                *right = renumber[right];
            }
        }
    }

    for node in &nodes {
        if let Node::Leaf { stats } = node {
            if stats.pure_actions().is_empty() {
                return Err(PruneError::LeafWithoutPureAction);
            }
        }
    }

    for _ in 0..rounds {
        // candidates are fixed at the start of the round
        let candidates: Vec<usize> = (0..nodes.len())
            .filter(|&id| match &nodes[id] {
                Node::Inner { left, right, .. } => {
                    matches!(nodes[*left], Node::Leaf { .. })
                        && matches!(nodes[*right], Node::Leaf { .. })
                }
                Node::Leaf { .. } => false,
            })
            .collect();

        let mut merged_any = false;
        for id in candidates {
            let (left, right) = match &nodes[id] {
                Node::Inner { left, right, .. } => (*left, *right),
                Node::Leaf { .. } => continue,
            };
            let (ls, rs) = match (&nodes[left], &nodes[right]) {
                (Node::Leaf { stats: ls }, Node::Leaf { stats: rs }) => (ls, rs),
                _ => continue,
            };
            if ls.pure_actions().intersection(&rs.pure_actions()).is_empty() {
                continue;
            }
            let stats = ls.merged(rs);
            nodes[id] = Node::Leaf { stats };
            merged_any = true;
        }
        if !merged_any {
            break; // fixpoint
        }
    }

    // compact away orphaned children
    let interim = DecisionTree::from_parts(
        tree.schema().clone(),
        tree.actions().to_vec(),
        nodes,
        0,
    )
    .expect("pruned tree stays well-formed");
    let order = interim.preorder();
    let renumber: std::collections::HashMap<usize, usize> =
        order.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let compacted: Vec<Node> = order
        .iter()
        .map(|&old| {
            let mut n = interim.node(old).clone();
            if let Node::Inner { left, right, .. } = &mut n {
                *left = renumber[left];
                *right = renumber[right];
            }
            n
        })
        .collect();
    Ok(DecisionTree::from_parts(
        tree.schema().clone(),
        tree.actions().to_vec(),
        compacted,
        0,
    )
    .expect("compacted tree stays well-formed"))
}
