//! Scaffolds: the stratified sets `X_n` together with node-indexed partial
//! maps `f_t` on them.

pub mod ho;
pub mod ri;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::tree::NodeId;

/// An element of `X`; elements are naturals allocated in increasing order.
pub type Elem = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScaffoldError {
    #[error("tuple {0:?} has a repeated entry")]
    NotInjective(Vec<Elem>),
    #[error("element {0} is not in X")]
    UnknownElement(Elem),
    #[error("tuples of lengths {0} and {1} cannot be compared")]
    LengthMismatch(usize, usize),
    #[error("tuple space too large: {size} > {budget}")]
    SizeBudgetExceeded { size: usize, budget: usize },
    #[error("components are only computed for k = 1 or k = 2, not k = {0}")]
    UnsupportedArity(usize),
    #[error("step {step} is undefined; trace so far {trace:?}")]
    StepUndefined { step: usize, trace: Vec<Vec<Elem>> },
    #[error("unknown node #{0}")]
    UnknownNode(NodeId),
    #[error("stage {0} is not built")]
    StageUnknown(usize),
    #[error("no locator for element {0}")]
    NoLocator(Elem),
    #[error("tree variant {found} does not fit a {wanted} scaffold")]
    WrongVariant {
        wanted: &'static str,
        found: &'static str,
    },
}

/// A finite partial map stored as a graph; corrupted dumps may hold
/// non-injective maps, so the inverse is rebuilt rather than assumed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialMap {
    fwd: BTreeMap<Elem, Elem>,
    bwd: BTreeMap<Elem, Elem>,
}

impl PartialMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Elem, Elem)>) -> Self {
        let mut m = Self::new();
        for (x, y) in pairs {
            m.insert(x, y);
        }
        m
    }

    /// Inserts `x ↦ y`, replacing any previous image of `x`.
    pub fn insert(&mut self, x: Elem, y: Elem) {
        if let Some(old) = self.fwd.insert(x, y) {
            if self.bwd.get(&old) == Some(&x) {
                self.bwd.remove(&old);
            }
        }
        self.bwd.insert(y, x);
    }

    pub fn remove(&mut self, x: Elem) -> Option<Elem> {
        let y = self.fwd.remove(&x)?;
        self.rebuild_bwd();
        Some(y)
    }

    fn rebuild_bwd(&mut self) {
        self.bwd = self.fwd.iter().map(|(&x, &y)| (y, x)).collect();
    }

    pub fn get(&self, x: Elem) -> Option<Elem> {
        self.fwd.get(&x).copied()
    }

    pub fn get_inv(&self, y: Elem) -> Option<Elem> {
        self.bwd.get(&y).copied()
    }

    pub fn apply(&self, sign: Sign, x: Elem) -> Option<Elem> {
        match sign {
            Sign::Plus => self.get(x),
            Sign::Minus => self.get_inv(x),
        }
    }

    pub fn in_dom(&self, sign: Sign, x: Elem) -> bool {
        match sign {
            Sign::Plus => self.fwd.contains_key(&x),
            Sign::Minus => self.bwd.contains_key(&x),
        }
    }

    pub fn contains_dom(&self, x: Elem) -> bool {
        self.fwd.contains_key(&x)
    }

    pub fn contains_ran(&self, y: Elem) -> bool {
        self.bwd.contains_key(&y)
    }

    pub fn dom(&self) -> impl Iterator<Item = Elem> + '_ {
        self.fwd.keys().copied()
    }

    pub fn ran(&self) -> impl Iterator<Item = Elem> + '_ {
        self.bwd.keys().copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Elem, Elem)> + '_ {
        self.fwd.iter().map(|(&x, &y)| (x, y))
    }

    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    /// Distinct arguments with equal images, if any.
    pub fn collision(&self) -> Option<(Elem, Elem, Elem)> {
        let mut seen: BTreeMap<Elem, Elem> = BTreeMap::new();
        for (&x, &y) in &self.fwd {
            if let Some(&x0) = seen.get(&y) {
                return Some((x0, x, y));
            }
            seen.insert(y, x);
        }
        None
    }

    pub fn is_subset_of(&self, other: &PartialMap) -> Option<(Elem, Elem)> {
        self.pairs().find(|&(x, y)| other.get(x) != Some(y))
    }
}

/// The stratification `X_0 ⊆ X_1 ⊆ …` stored as a birth table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Strata {
    births: BTreeMap<Elem, usize>,
    last: usize,
}

impl Strata {
    pub fn new(last: usize) -> Self {
        Strata {
            births: BTreeMap::new(),
            last,
        }
    }

    pub fn from_births(births: BTreeMap<Elem, usize>, last: usize) -> Self {
        Strata { births, last }
    }

    /// Allocates the next natural at stage `n`.
    pub fn alloc(&mut self, n: usize) -> Elem {
        let x = self.births.keys().next_back().map_or(0, |&x| x + 1);
        self.births.insert(x, n);
        x
    }

    pub fn remove(&mut self, x: Elem) -> Option<usize> {
        self.births.remove(&x)
    }

    /// `𝐧(x)`.
    pub fn birth(&self, x: Elem) -> Option<usize> {
        self.births.get(&x).copied()
    }

    pub fn contains(&self, x: Elem) -> bool {
        self.births.contains_key(&x)
    }

    /// Index of the last built stratum.
    pub fn last_stage(&self) -> usize {
        self.last
    }

    pub fn len(&self) -> usize {
        self.births.len()
    }

    pub fn is_empty(&self) -> bool {
        self.births.is_empty()
    }

    pub fn births(&self) -> &BTreeMap<Elem, usize> {
        &self.births
    }

    pub fn all(&self) -> Vec<Elem> {
        self.births.keys().copied().collect()
    }

    /// `X_n`, sorted.
    pub fn upto(&self, n: usize) -> Vec<Elem> {
        self.births
            .iter()
            .filter(|&(_, &b)| b <= n)
            .map(|(&x, _)| x)
            .collect()
    }

    /// `X_n \ X_{n-1}`, sorted.
    pub fn new_at(&self, n: usize) -> Vec<Elem> {
        self.births
            .iter()
            .filter(|&(_, &b)| b == n)
            .map(|(&x, _)| x)
            .collect()
    }

    pub fn in_stage(&self, x: Elem, n: usize) -> bool {
        self.birth(x).is_some_and(|b| b <= n)
    }

    /// `𝐧(x̄)`, the largest birth along the tuple.
    pub fn tuple_birth(&self, xs: &[Elem]) -> Result<usize, ScaffoldError> {
        let mut m = 0;
        for &x in xs {
            m = m.max(self.birth(x).ok_or(ScaffoldError::UnknownElement(x))?);
        }
        Ok(m)
    }
}

/// A localized failure of one clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub stage: Option<usize>,
    pub node: Option<NodeId>,
    pub elements: Vec<Elem>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.stage {
            write!(f, "stage {n}: ")?;
        }
        if let Some(t) = self.node {
            write!(f, "node #{t}: ")?;
        }
        f.write_str(&self.message)?;
        if !self.elements.is_empty() {
            write!(f, " {:?}", self.elements)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseResult {
    pub clause: &'static str,
    pub outcome: Result<(), Violation>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub clauses: Vec<ClauseResult>,
}

impl ValidationReport {
    pub fn push(&mut self, clause: &'static str, outcome: Result<(), Violation>) {
        self.clauses.push(ClauseResult { clause, outcome });
    }

    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.outcome.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ClauseResult> {
        self.clauses.iter().filter(|c| c.outcome.is_err())
    }

    pub fn get(&self, clause: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.clause == clause)
    }

    pub fn passed(&self, clause: &str) -> bool {
        self.get(clause).is_some_and(|c| c.outcome.is_ok())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            match &c.outcome {
                Ok(()) => writeln!(f, "clause {}: pass", c.clause)?,
                Err(v) => writeln!(f, "clause {}: FAIL {v}", c.clause)?,
            }
        }
        Ok(())
    }
}

pub(crate) fn violation(
    stage: Option<usize>,
    node: Option<NodeId>,
    elements: Vec<Elem>,
    message: impl Into<String>,
) -> Violation {
    Violation {
        stage,
        node,
        elements,
        message: message.into(),
    }
}

pub(crate) fn check_injective(xs: &[Elem]) -> Result<(), ScaffoldError> {
    for (i, x) in xs.iter().enumerate() {
        if xs[..i].contains(x) {
            return Err(ScaffoldError::NotInjective(xs.to_vec()));
        }
    }
    Ok(())
}

/// Undirected forest check on a simple graph; returns an edge closing a cycle.
pub(crate) fn first_cycle_edge<V: Ord + Clone>(
    edges: impl IntoIterator<Item = (V, V)>,
) -> Option<(V, V)> {
    use std::collections::BTreeSet;
    let mut seen = BTreeSet::new();
    let mut index: BTreeMap<V, usize> = BTreeMap::new();
    let mut list = Vec::new();
    for (a, b) in edges {
        if a == b {
            return Some((a, b));
        }
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        if seen.insert(key) {
            for v in [&a, &b] {
                if !index.contains_key(v) {
                    let id = index.len();
                    index.insert(v.clone(), id);
                }
            }
            list.push((a, b));
        }
    }
    let mut uf = petgraph::unionfind::UnionFind::<usize>::new(index.len());
    for (a, b) in list {
        if !uf.union(index[&a], index[&b]) {
            return Some((a, b));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_map_inverse() {
        let m = PartialMap::from_pairs([(0, 1), (2, 0)]);
        assert_eq!(m.apply(Sign::Minus, 0), Some(2));
        assert_eq!(m.apply(Sign::Plus, 1), None);
        assert!(m.collision().is_none());
        let bad = PartialMap::from_pairs([(0, 1), (2, 1)]);
        assert_eq!(bad.collision(), Some((0, 2, 1)));
    }

    #[test]
    fn cycle_edges() {
        assert!(first_cycle_edge([(0, 1), (1, 2)]).is_none());
        assert!(first_cycle_edge([(0, 1), (1, 0)]).is_none());
        assert_eq!(first_cycle_edge([(0, 1), (1, 2), (2, 0)]), Some((2, 0)));
        assert_eq!(first_cycle_edge([(3, 3)]), Some((3, 3)));
    }
}
