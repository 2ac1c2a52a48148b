//! Permissive strategy tables and their on-disk format.
//!
//! A strategy maps integer-valued configurations (feature vectors) to
//! non-empty sets of allowed actions. Tables of this shape are the training
//! input for the tree learner and the reference against which every reduced
//! representation is checked.
//!
//! File format: the first line is a JSON header declaring the feature schema
//! and the action alphabet, each following line is one entry
//! `{"c":[v1,...,vd],"a":["dec","neu"]}`. UTF-8, LF newlines. Entry order
//! carries no meaning; all consumers are insensitive to permutation.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum alphabet size; action sets are stored as `u32` bitmasks.
pub const MAX_ACTIONS: usize = 32;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: parse error: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate configuration {config:?}")]
    DuplicateConfig { line: usize, config: Vec<i64> },
    #[error("line {line}: empty action set")]
    EmptyActionSet { line: usize },
    #[error("empty strategy: no entries")]
    EmptyStrategy,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("line {line}: configuration {config:?} outside feature domains")]
    OutOfDomain { line: usize, config: Vec<i64> },
    #[error("line {line}: unknown action {name:?}")]
    UnknownAction { line: usize, name: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

/// Domain of a single feature.
///
/// Ordered features carry finite integer bounds and admit threshold
/// predicates; categorical features carry a finite value set and admit
/// equality predicates only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Ordered { min: i64, max: i64 },
    Categorical { values: Vec<i64> },
}

impl FeatureKind {
    pub fn contains(&self, v: i64) -> bool {
        match self {
            FeatureKind::Ordered { min, max } => *min <= v && v <= *max,
            FeatureKind::Categorical { values } => values.contains(&v),
        }
    }

    /// Number of grid points in the domain.
    pub fn cardinality(&self) -> u64 {
        match self {
            FeatureKind::Ordered { min, max } => (max - min + 1) as u64,
            FeatureKind::Categorical { values } => values.len() as u64,
        }
    }

    /// Smallest and largest value of the domain.
    pub fn bounds(&self) -> (i64, i64) {
        match self {
            FeatureKind::Ordered { min, max } => (*min, *max),
            FeatureKind::Categorical { values } => {
                let min = *values.iter().min().expect("non-empty domain");
                let max = *values.iter().max().expect("non-empty domain");
                (min, max)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

/// Ordered list of features describing the configuration space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self, StrategyError> {
        if features.is_empty() {
            return Err(StrategyError::InvalidSchema("no features".into()));
        }
        let mut seen = HashMap::new();
        for (i, f) in features.iter().enumerate() {
            if let Some(j) = seen.insert(f.name.clone(), i) {
                return Err(StrategyError::InvalidSchema(format!(
                    "duplicate feature name {:?} (positions {} and {})",
                    f.name, j, i
                )));
            }
            match &f.kind {
                FeatureKind::Ordered { min, max } if min > max => {
                    return Err(StrategyError::InvalidSchema(format!(
                        "feature {:?}: min {} > max {}",
                        f.name, min, max
                    )));
                }
                FeatureKind::Categorical { values } => {
                    if values.is_empty() {
                        return Err(StrategyError::InvalidSchema(format!(
                            "feature {:?}: empty value set",
                            f.name
                        )));
                    }
                    let mut vs = values.clone();
                    vs.sort_unstable();
                    vs.dedup();
                    if vs.len() != values.len() {
                        return Err(StrategyError::InvalidSchema(format!(
                            "feature {:?}: repeated categorical value",
                            f.name
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(FeatureSchema { features })
    }

    /// Convenience constructor for an all-ordered schema.
    pub fn ordered(specs: &[(&str, i64, i64)]) -> Self {
        let features = specs
            .iter()
            .map(|(name, min, max)| Feature {
                name: (*name).to_string(),
                kind: FeatureKind::Ordered { min: *min, max: *max },
            })
            .collect();
        FeatureSchema::new(features).expect("valid ordered schema")
    }

    pub fn arity(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &Feature {
        &self.features[i]
    }

    pub fn contains(&self, config: &[i64]) -> bool {
        config.len() == self.arity()
            && config
                .iter()
                .zip(&self.features)
                .all(|(v, f)| f.kind.contains(*v))
    }

    /// Total number of integer grid points described by the schema.
    pub fn grid_size(&self) -> u128 {
        self.features
            .iter()
            .map(|f| f.kind.cardinality() as u128)
            .product()
    }

    /// Iterate all integer grid configurations in row-major order
    /// (last feature varies fastest); ordered domains ascending,
    /// categorical domains in declared order.
    pub fn grid_iter(&self) -> GridIter<'_> {
        GridIter {
            schema: self,
            cursor: vec![0u64; self.arity()],
            done: false,
        }
    }
}

pub struct GridIter<'a> {
    schema: &'a FeatureSchema,
    cursor: Vec<u64>,
    done: bool,
}

impl Iterator for GridIter<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let config: Vec<i64> = self
            .cursor
            .iter()
            .zip(self.schema.features())
            .map(|(&i, f)| match &f.kind {
                FeatureKind::Ordered { min, .. } => min + i as i64,
                FeatureKind::Categorical { values } => values[i as usize],
            })
            .collect();
        // advance, last feature fastest
        for pos in (0..self.cursor.len()).rev() {
            self.cursor[pos] += 1;
            if self.cursor[pos] < self.schema.feature(pos).kind.cardinality() {
                return Some(config);
            }
            self.cursor[pos] = 0;
        }
        self.done = true;
        Some(config)
    }
}

/// Subset of the action alphabet, stored as a bitmask over alphabet indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u32);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    pub fn from_indices<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ActionSet(0);
        for i in iter {
            s.insert(i);
        }
        s
    }

    /// Set containing the first `n` actions of the alphabet.
    pub fn all(n: usize) -> Self {
        assert!(n <= MAX_ACTIONS);
        if n == 32 {
            ActionSet(u32::MAX)
        } else {
            ActionSet((1u32 << n) - 1)
        }
    }

    pub fn insert(&mut self, idx: usize) {
        assert!(idx < MAX_ACTIONS);
        self.0 |= 1 << idx;
    }

    pub fn contains(&self, idx: usize) -> bool {
        idx < MAX_ACTIONS && self.0 & (1 << idx) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(&self, other: &ActionSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(&self, other: &ActionSet) -> ActionSet {
        ActionSet(self.0 & other.0)
    }

    /// Indices of the member actions, ascending.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MAX_ACTIONS).filter(move |i| self.contains(*i))
    }

    /// Lowest member index, if any.
    pub fn first(&self) -> Option<usize> {
        if self.is_empty() {
            None
        } else {
            Some(self.0.trailing_zeros() as usize)
        }
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Finite map from integer configurations to non-empty allowed-action sets.
///
/// Entries are kept in insertion order for stable round trips, but equality
/// and every downstream consumer are order-insensitive.
#[derive(Debug, Clone)]
pub struct StrategyTable {
    schema: FeatureSchema,
    actions: Vec<String>,
    rows: Vec<(Vec<i64>, ActionSet)>,
    index: HashMap<Vec<i64>, usize>,
}

impl StrategyTable {
    pub fn new(schema: FeatureSchema, actions: Vec<String>) -> Result<Self, StrategyError> {
        validate_alphabet(&actions)?;
        Ok(StrategyTable {
            schema,
            actions,
            rows: Vec::new(),
            index: HashMap::new(),
        })
    }

    /// Insert one entry. `line` is used for error reporting only (0 for
    /// programmatic construction).
    pub fn insert(
        &mut self,
        config: Vec<i64>,
        actions: ActionSet,
        line: usize,
    ) -> Result<(), StrategyError> {
        if actions.is_empty() {
            return Err(StrategyError::EmptyActionSet { line });
        }
        if !self.schema.contains(&config) {
            return Err(StrategyError::OutOfDomain { line, config });
        }
        if self.index.contains_key(&config) {
            return Err(StrategyError::DuplicateConfig { line, config });
        }
        self.index.insert(config.clone(), self.rows.len());
        self.rows.push((config, actions));
        Ok(())
    }

    pub fn insert_named(
        &mut self,
        config: Vec<i64>,
        action_names: &[&str],
    ) -> Result<(), StrategyError> {
        let mut set = ActionSet::EMPTY;
        for name in action_names {
            let idx = self
                .action_index(name)
                .ok_or_else(|| StrategyError::UnknownAction {
                    line: 0,
                    name: (*name).to_string(),
                })?;
            set.insert(idx);
        }
        self.insert(config, set, 0)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(Vec<i64>, ActionSet)] {
        &self.rows
    }

    pub fn get(&self, config: &[i64]) -> Option<ActionSet> {
        self.index.get(config).map(|&i| self.rows[i].1)
    }

    pub fn configs(&self) -> impl Iterator<Item = &[i64]> {
        self.rows.iter().map(|(c, _)| c.as_slice())
    }

    /// True iff `sub` is a sub-strategy of `self`: same schema and alphabet,
    /// and for every configuration of `sub` a non-empty subset of the actions
    /// `self` allows there. Configurations of `sub` missing from `self` make
    /// the answer `false`.
    pub fn restricts(&self, sub: &StrategyTable) -> Result<bool, StrategyError> {
        if self.schema != sub.schema {
            return Err(StrategyError::SchemaMismatch(
                "feature schemas differ".into(),
            ));
        }
        if self.actions != sub.actions {
            return Err(StrategyError::SchemaMismatch(
                "action alphabets differ".into(),
            ));
        }
        for (config, allowed) in &sub.rows {
            match self.get(config) {
                Some(sup) => {
                    if allowed.is_empty() || !allowed.is_subset(&sup) {
                        return Ok(false);
                    }
                }
                None => return Ok(false),
            }
        }
        Ok(true)
    }
}

/// Order-insensitive equality: same schema, alphabet, and entry map.
impl PartialEq for StrategyTable {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.actions == other.actions
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .all(|(c, a)| other.get(c) == Some(*a))
    }
}

impl Eq for StrategyTable {}

fn validate_alphabet(actions: &[String]) -> Result<(), StrategyError> {
    if actions.is_empty() {
        return Err(StrategyError::InvalidSchema("empty action alphabet".into()));
    }
    if actions.len() > MAX_ACTIONS {
        return Err(StrategyError::InvalidSchema(format!(
            "alphabet of {} actions exceeds the supported maximum of {}",
            actions.len(),
            MAX_ACTIONS
        )));
    }
    let mut sorted = actions.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != actions.len() {
        return Err(StrategyError::InvalidSchema(
            "repeated action name".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    features: Vec<FeatureJson>,
    actions: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FeatureJson {
    name: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    c: Vec<i64>,
    a: Vec<String>,
}

fn feature_to_json(f: &Feature) -> FeatureJson {
    match &f.kind {
        FeatureKind::Ordered { min, max } => FeatureJson {
            name: f.name.clone(),
            kind: "ordered".into(),
            min: Some(*min),
            max: Some(*max),
            values: None,
        },
        FeatureKind::Categorical { values } => FeatureJson {
            name: f.name.clone(),
            kind: "categorical".into(),
            min: None,
            max: None,
            values: Some(values.clone()),
        },
    }
}

fn feature_from_json(j: FeatureJson, line: usize) -> Result<Feature, StrategyError> {
    let kind = match j.kind.as_str() {
        "ordered" => match (j.min, j.max) {
            (Some(min), Some(max)) => FeatureKind::Ordered { min, max },
            _ => {
                return Err(StrategyError::Parse {
                    line,
                    msg: format!("ordered feature {:?} needs min and max", j.name),
                })
            }
        },
        "categorical" => match j.values {
            Some(values) => FeatureKind::Categorical { values },
            None => {
                return Err(StrategyError::Parse {
                    line,
                    msg: format!("categorical feature {:?} needs values", j.name),
                })
            }
        },
        other => {
            return Err(StrategyError::Parse {
                line,
                msg: format!("unknown feature kind {other:?}"),
            })
        }
    };
    Ok(Feature { name: j.name, kind })
}

/// Load a strategy table from the line-oriented JSON format.
pub fn load_strategy(path: impl AsRef<Path>) -> Result<StrategyTable, StrategyError> {
    let file = File::open(path)?;
    read_strategy(BufReader::new(file))
}

/// Parse a strategy table from any buffered reader (header line + entries).
pub fn read_strategy<R: BufRead>(reader: R) -> Result<StrategyTable, StrategyError> {
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or(StrategyError::EmptyStrategy)?
        .map_err(StrategyError::Io)?;
    let header: HeaderJson =
        serde_json::from_str(&header_line).map_err(|e| StrategyError::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
    let features = header
        .features
        .into_iter()
        .map(|f| feature_from_json(f, 1))
        .collect::<Result<Vec<_>, _>>()?;
    let schema = FeatureSchema::new(features)?;
    let mut table = StrategyTable::new(schema, header.actions)?;

    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(StrategyError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: EntryJson =
            serde_json::from_str(&line).map_err(|e| StrategyError::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        if entry.c.len() != table.schema.arity() {
            return Err(StrategyError::Parse {
                line: line_no,
                msg: format!(
                    "configuration has {} values, schema has {} features",
                    entry.c.len(),
                    table.schema.arity()
                ),
            });
        }
        let mut set = ActionSet::EMPTY;
        for name in &entry.a {
            let idx = table
                .action_index(name)
                .ok_or_else(|| StrategyError::UnknownAction {
                    line: line_no,
                    name: name.clone(),
                })?;
            set.insert(idx);
        }
        table.insert(entry.c, set, line_no)?;
    }
    if table.is_empty() {
        return Err(StrategyError::EmptyStrategy);
    }
    Ok(table)
}

/// Write a strategy table in the line-oriented JSON format.
pub fn save_strategy(
    table: &StrategyTable,
    path: impl AsRef<Path>,
) -> Result<(), StrategyError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_strategy(table, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_strategy<W: Write>(
    table: &StrategyTable,
    w: &mut W,
) -> Result<(), StrategyError> {
    let header = HeaderJson {
        features: table.schema.features().iter().map(feature_to_json).collect(),
        actions: table.actions.clone(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header json"))?;
    for (config, set) in &table.rows {
        let entry = EntryJson {
            c: config.clone(),
            a: set.iter().map(|i| table.actions[i].clone()).collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&entry).expect("entry json"))?;
    }
    Ok(())
}
