//! Reduced ordered BDD baseline for strategy-size comparison.
//!
//! Configuration-action pairs are bit-blasted into complete minterms and the
//! strategy becomes the disjunction of all permitted pairs. Bit patterns
//! that decode to nothing valid (values above a feature's range, malformed
//! action bits) are mapped to false, so the represented boolean function is
//! total. Sizes are internal node counts; a constant function counts as 1
//! (its terminal).
//!
//! Reordering is supported by rebuilding the diagram under a new order via
//! ITE, and sifting moves every variable through all positions, keeping the
//! best. This is slower than in-place level swaps but stays simple and
//! obviously canonical, which is all the baseline needs.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::strategy::{FeatureSchema, StrategyTable};

#[derive(Debug, Error)]
pub enum BddError {
    #[error("node table capacity of {cap} nodes exceeded")]
    CapacityExceeded { cap: usize },
    #[error("feature {feature} value {value} outside its domain")]
    OutOfRange { feature: usize, value: i64 },
    #[error("action index {0} out of range")]
    BadAction(usize),
    #[error("encoding needs {want} variables, order has {got}")]
    BadOrder { want: u32, got: usize },
    #[error("too many bit variables: {0} (limit 64)")]
    TooManyVars(u32),
}

pub const FALSE: u32 = 0;
pub const TRUE: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BddNode {
    var: u32,
    low: u32,
    high: u32,
}

const TERMINAL_VAR: u32 = u32::MAX;

/// Mutable hash-consing arena for one variable order.
pub struct BddBuilder {
    nodes: Vec<BddNode>,
    unique: HashMap<BddNode, u32>,
    ite_memo: HashMap<(u32, u32, u32), u32>,
    order: Vec<u32>,
    pos: Vec<u32>,
    cap: usize,
}

impl BddBuilder {
    /// `order[level] = variable`; the identity order when `None`.
    pub fn new(n_vars: u32, order: Option<Vec<u32>>) -> Result<Self, BddError> {
        if n_vars > 64 {
            return Err(BddError::TooManyVars(n_vars));
        }
        let order = order.unwrap_or_else(|| (0..n_vars).collect());
        if order.len() != n_vars as usize {
            return Err(BddError::BadOrder {
                want: n_vars,
                got: order.len(),
            });
        }
        let mut pos = vec![u32::MAX; n_vars as usize];
        for (level, &v) in order.iter().enumerate() {
            pos[v as usize] = level as u32;
        }
        debug_assert!(pos.iter().all(|&p| p != u32::MAX), "order must be a permutation");
        let terminal = |_| BddNode {
            var: TERMINAL_VAR,
            low: 0,
            high: 0,
        };
        Ok(BddBuilder {
            nodes: vec![terminal(0), terminal(1)],
            unique: HashMap::new(),
            ite_memo: HashMap::new(),
            order,
            pos,
            cap: 1 << 26,
        })
    }

    pub fn with_capacity_limit(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    fn level(&self, id: u32) -> u32 {
        let var = self.nodes[id as usize].var;
        if var == TERMINAL_VAR {
            u32::MAX
        } else {
            self.pos[var as usize]
        }
    }

    fn mk(&mut self, var: u32, low: u32, high: u32) -> u32 {
        if low == high {
            return low;
        }
        debug_assert!(self.pos[var as usize] < self.level(low).min(self.level(high)));
        let node = BddNode { var, low, high };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    fn check_capacity(&self) -> Result<(), BddError> {
        if self.nodes.len() > self.cap {
            Err(BddError::CapacityExceeded { cap: self.cap })
        } else {
            Ok(())
        }
    }

    pub fn var(&mut self, v: u32) -> u32 {
        self.mk(v, FALSE, TRUE)
    }

    pub fn not(&mut self, f: u32) -> u32 {
        self.ite(f, FALSE, TRUE)
    }

    pub fn and(&mut self, f: u32, g: u32) -> u32 {
        self.ite(f, g, FALSE)
    }

    pub fn or(&mut self, f: u32, g: u32) -> u32 {
        self.ite(f, TRUE, g)
    }

    pub fn xor(&mut self, f: u32, g: u32) -> u32 {
        let ng = self.not(g);
        self.ite(f, ng, g)
    }

    /// Shannon-expansion if-then-else with memoization.
    pub fn ite(&mut self, f: u32, g: u32, h: u32) -> u32 {
        if f == TRUE {
            return g;
        }
        if f == FALSE {
            return h;
        }
        if g == h {
            return g;
        }
        if g == TRUE && h == FALSE {
            return f;
        }
        if let Some(&r) = self.ite_memo.get(&(f, g, h)) {
            return r;
        }
        let top = self
            .level(f)
            .min(self.level(g))
            .min(self.level(h));
        let var = self.order[top as usize];
        let (f0, f1) = self.cofactors(f, var);
        let (g0, g1) = self.cofactors(g, var);
        let (h0, h1) = self.cofactors(h, var);
        let low = self.ite(f0, g0, h0);
        let high = self.ite(f1, g1, h1);
        let r = self.mk(var, low, high);
        self.ite_memo.insert((f, g, h), r);
        r
    }

    fn cofactors(&self, id: u32, var: u32) -> (u32, u32) {
        let node = self.nodes[id as usize];
        if node.var == var {
            (node.low, node.high)
        } else {
            (id, id)
        }
    }

    /// Build the disjunction of complete minterms given as variable bit
    /// masks (bit `v` of a pattern is the value of variable `v`).
    pub fn add_patterns(&mut self, patterns: &[u64]) -> Result<u32, BddError> {
        let n = self.order.len();
        let mut keyed: Vec<(u64, u64)> = patterns
            .iter()
            .map(|&p| {
                let mut key = 0u64;
                for &v in &self.order {
                    key = (key << 1) | ((p >> v) & 1);
                }
                (key, p)
            })
            .collect();
        keyed.sort_unstable_by_key(|(k, _)| *k);
        keyed.dedup_by_key(|(k, _)| *k);
        let root = self.build_sorted(0, n, &keyed);
        self.check_capacity()?;
        Ok(root)
    }

    fn build_sorted(&mut self, level: usize, n_levels: usize, slice: &[(u64, u64)]) -> u32 {
        if slice.is_empty() {
            return FALSE;
        }
        if level == n_levels {
            return TRUE;
        }
        let var = self.order[level];
        let split = slice.partition_point(|(_, p)| (p >> var) & 1 == 0);
        let low = self.build_sorted(level + 1, n_levels, &slice[..split]);
        let high = self.build_sorted(level + 1, n_levels, &slice[split..]);
        self.mk(var, low, high)
    }

    /// Freeze a root into an immutable diagram, keeping only reachable nodes.
    pub fn freeze(&self, root: u32) -> Bdd {
        let mut keep: Vec<u32> = vec![u32::MAX; self.nodes.len()];
        keep[FALSE as usize] = FALSE;
        keep[TRUE as usize] = TRUE;
        let mut nodes = vec![self.nodes[0], self.nodes[1]];
        // children-first so remapped ids exist when a parent is copied
        let mut post = Vec::new();
        let mut stack = vec![(root, false)];
        let mut visited = vec![false; self.nodes.len()];
        while let Some((id, expanded)) = stack.pop() {
            if id == FALSE || id == TRUE {
                continue;
            }
            if expanded {
                post.push(id);
                continue;
            }
            if visited[id as usize] {
                continue;
            }
            visited[id as usize] = true;
            let node = self.nodes[id as usize];
            stack.push((id, true));
            stack.push((node.low, false));
            stack.push((node.high, false));
        }
        for id in post {
            let node = self.nodes[id as usize];
            let remapped = BddNode {
                var: node.var,
                low: keep[node.low as usize],
                high: keep[node.high as usize],
            };
            keep[id as usize] = nodes.len() as u32;
            nodes.push(remapped);
        }
        Bdd {
            nodes,
            order: self.order.clone(),
            root: keep[root as usize],
        }
    }
}

/// Immutable reduced ordered BDD with a single root.
#[derive(Debug, Clone)]
pub struct Bdd {
    nodes: Vec<BddNode>,
    order: Vec<u32>,
    root: u32,
}

impl Bdd {
    pub fn constant(value: bool, n_vars: u32) -> Bdd {
        let builder = BddBuilder::new(n_vars, None).expect("small builder");
        builder.freeze(if value { TRUE } else { FALSE })
    }

    pub fn n_vars(&self) -> u32 {
        self.order.len() as u32
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn root_is_terminal(&self) -> bool {
        self.root == FALSE || self.root == TRUE
    }

    /// Internal node count; constants count as 1 (the terminal itself).
    pub fn size(&self) -> usize {
        if self.root_is_terminal() {
            1
        } else {
            self.nodes.len() - 2
        }
    }

    /// Evaluate under an assignment given as a bit mask over variables.
    pub fn eval(&self, assignment: u64) -> bool {
        let mut id = self.root;
        loop {
            match id {
                FALSE => return false,
                TRUE => return true,
                _ => {
                    let node = self.nodes[id as usize];
                    id = if (assignment >> node.var) & 1 == 1 {
                        node.high
                    } else {
                        node.low
                    };
                }
            }
        }
    }

    /// Reachable internal nodes per variable.
    pub fn var_node_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.order.len()];
        for node in &self.nodes[2..] {
            counts[node.var as usize] += 1;
        }
        counts
    }

    /// Rebuild the same function under a different variable order.
    pub fn reorder(&self, new_order: Vec<u32>) -> Result<Bdd, BddError> {
        let mut builder = BddBuilder::new(self.n_vars(), Some(new_order))?;
        let mut memo: Vec<u32> = vec![u32::MAX; self.nodes.len()];
        memo[FALSE as usize] = FALSE;
        memo[TRUE as usize] = TRUE;
        // children-first traversal keeps the translation non-recursive
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if memo[id as usize] != u32::MAX {
                continue;
            }
            let node = self.nodes[id as usize];
            if expanded {
                let low = memo[node.low as usize];
                let high = memo[node.high as usize];
                let v = builder.var(node.var);
                memo[id as usize] = builder.ite(v, high, low);
            } else {
                stack.push((id, true));
                stack.push((node.low, false));
                stack.push((node.high, false));
            }
        }
        builder.check_capacity()?;
        Ok(builder.freeze(memo[self.root as usize]))
    }

    /// Sifting: take each variable (heaviest first), move it through every
    /// position with the others fixed, and keep the size-minimizing
    /// placement. Never increases size; preserves the function.
    pub fn sift(&self) -> Result<Bdd, BddError> {
        let n = self.order.len();
        if n <= 1 || self.root_is_terminal() {
            return Ok(self.clone());
        }
        let counts = self.var_node_counts();
        let mut vars: Vec<u32> = (0..n as u32).collect();
        vars.sort_by_key(|&v| (std::cmp::Reverse(counts[v as usize]), v));

        let mut current = self.clone();
        for v in vars {
            let mut best = current.clone();
            for target in 0..n {
                let mut order: Vec<u32> =
                    current.order.iter().copied().filter(|&x| x != v).collect();
                order.insert(target, v);
                if order == current.order {
                    continue;
                }
                let cand = current.reorder(order)?;
                if cand.size() < best.size() {
                    best = cand;
                }
            }
            current = best;
        }
        Ok(current)
    }
}

// ---------------------------------------------------------------------------
// Bit-blasting
// ---------------------------------------------------------------------------

/// How actions are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionBits {
    /// One indicator bit per action; exactly one may be set.
    OneHot,
    /// The action index in binary.
    BinaryIndex,
}

#[derive(Debug, Clone)]
struct FeatBits {
    offset: i64,
    span: u64, // number of representable raw values, max - min + 1
    width: u32,
    base: u32, // first variable index; bit layout is MSB-first
}

/// Maps configurations and actions to bit variables. Feature bits come
/// first (schema order, MSB first within a feature), action bits last.
#[derive(Debug, Clone)]
pub struct BitEncoding {
    feats: Vec<FeatBits>,
    schema: FeatureSchema,
    mode: ActionBits,
    n_actions: usize,
    action_base: u32,
    action_width: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub var: u32,
    pub positive: bool,
}

fn width_for(span: u64) -> u32 {
    if span <= 1 {
        0
    } else {
        64 - (span - 1).leading_zeros()
    }
}

impl BitEncoding {
    pub fn new(
        schema: &FeatureSchema,
        n_actions: usize,
        mode: ActionBits,
    ) -> Result<Self, BddError> {
        let mut feats = Vec::with_capacity(schema.arity());
        let mut base = 0u32;
        for f in schema.features() {
            let (min, max) = f.kind.bounds();
            let span = (max - min + 1) as u64;
            let width = width_for(span);
            feats.push(FeatBits {
                offset: -min,
                span,
                width,
                base,
            });
            base += width;
        }
        let action_width = match mode {
            ActionBits::OneHot => n_actions as u32,
            ActionBits::BinaryIndex => width_for(n_actions as u64),
        };
        let enc = BitEncoding {
            feats,
            schema: schema.clone(),
            mode,
            n_actions,
            action_base: base,
            action_width,
        };
        if enc.n_vars() > 64 {
            return Err(BddError::TooManyVars(enc.n_vars()));
        }
        Ok(enc)
    }

    pub fn n_vars(&self) -> u32 {
        self.action_base + self.action_width
    }

    /// Human-readable variable name: `<feature>[bit]` or `a<idx>`.
    pub fn var_name(&self, var: u32) -> String {
        if var >= self.action_base {
            return format!("a{}", var - self.action_base);
        }
        for (i, fb) in self.feats.iter().enumerate() {
            if var >= fb.base && var < fb.base + fb.width {
                let bit = fb.width - 1 - (var - fb.base); // MSB first
                return format!("{}{}", self.schema.feature(i).name, bit);
            }
        }
        format!("v{var}")
    }

    /// Bit mask of the positive variables of the pair's minterm.
    pub fn pattern(&self, config: &[i64], action: usize) -> Result<u64, BddError> {
        if action >= self.n_actions {
            return Err(BddError::BadAction(action));
        }
        let mut bits = 0u64;
        for (i, (&value, fb)) in config.iter().zip(&self.feats).enumerate() {
            if !self.schema.feature(i).kind.contains(value) {
                return Err(BddError::OutOfRange { feature: i, value });
            }
            let raw = (value + fb.offset) as u64;
            for b in 0..fb.width {
                if (raw >> b) & 1 == 1 {
                    // bit b of raw; var index MSB-first
                    let var = fb.base + (fb.width - 1 - b);
                    bits |= 1u64 << var;
                }
            }
        }
        match self.mode {
            ActionBits::OneHot => {
                bits |= 1u64 << (self.action_base + action as u32);
            }
            ActionBits::BinaryIndex => {
                let raw = action as u64;
                for b in 0..self.action_width {
                    if (raw >> b) & 1 == 1 {
                        let var = self.action_base + (self.action_width - 1 - b);
                        bits |= 1u64 << var;
                    }
                }
            }
        }
        Ok(bits)
    }

    /// The pair's complete minterm: one literal per encoding variable.
    pub fn encode_pair(&self, config: &[i64], action: usize) -> Result<Vec<Literal>, BddError> {
        let bits = self.pattern(config, action)?;
        Ok((0..self.n_vars())
            .map(|var| Literal {
                var,
                positive: (bits >> var) & 1 == 1,
            })
            .collect())
    }

    /// Invert a bit pattern; `None` when it encodes no valid pair.
    pub fn decode(&self, pattern: u64) -> Option<(Vec<i64>, usize)> {
        let mut config = Vec::with_capacity(self.feats.len());
        for (i, fb) in self.feats.iter().enumerate() {
            let mut raw = 0u64;
            for b in 0..fb.width {
                let var = fb.base + b; // MSB first
                raw = (raw << 1) | ((pattern >> var) & 1);
            }
            if raw >= fb.span {
                return None;
            }
            let value = raw as i64 - fb.offset;
            if !self.schema.feature(i).kind.contains(value) {
                return None; // gap in a sparse categorical domain
            }
            config.push(value);
        }
        let action = match self.mode {
            ActionBits::OneHot => {
                let bits = (pattern >> self.action_base) & ((1u64 << self.action_width) - 1);
                if bits.count_ones() != 1 {
                    return None;
                }
                bits.trailing_zeros() as usize
            }
            ActionBits::BinaryIndex => {
                let mut raw = 0u64;
                for b in 0..self.action_width {
                    let var = self.action_base + b;
                    raw = (raw << 1) | ((pattern >> var) & 1);
                }
                if raw as usize >= self.n_actions {
                    return None;
                }
                raw as usize
            }
        };
        Some((config, action))
    }
}

/// Build the strategy's BDD under an initial variable order: true exactly on
/// the valid encodings of permitted configuration-action pairs.
pub fn build_strategy_bdd(
    table: &StrategyTable,
    enc: &BitEncoding,
    order: Option<Vec<u32>>,
) -> Result<Bdd, BddError> {
    let mut patterns = Vec::new();
    for (config, set) in table.rows() {
        for action in set.iter() {
            patterns.push(enc.pattern(config, action)?);
        }
    }
    let mut builder = BddBuilder::new(enc.n_vars(), order)?;
    let root = builder.add_patterns(&patterns)?;
    Ok(builder.freeze(root))
}

/// Post-sifting sizes over `r` seeded random initial orders, in trial order.
pub fn random_order_sizes(
    table: &StrategyTable,
    enc: &BitEncoding,
    r: usize,
    seed: u64,
) -> Result<Vec<usize>, BddError> {
    (0..r)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64 + 1);
            let mut order: Vec<u32> = (0..enc.n_vars()).collect();
            order.shuffle(&mut rng);
            let bdd = build_strategy_bdd(table, enc, Some(order))?;
            Ok(bdd.sift()?.size())
        })
        .collect()
}

/// Min, median, max of a size sample (median of an even count rounds down).
pub fn size_summary(sizes: &[usize]) -> (usize, usize, usize) {
    assert!(!sizes.is_empty());
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    (
        sorted[0],
        sorted[(sorted.len() - 1) / 2],
        sorted[sorted.len() - 1],
    )
}
