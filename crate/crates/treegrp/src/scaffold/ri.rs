//! Tree-indexed partial injections: the rigid-flavour scaffold.
//!
//! For every node `t` new at stage `n` the builder starts from the parent's
//! map, gives every `x ∈ X_{n-1}` outside the parent's domain a fresh image,
//! gives every `y ∈ X_{n-1}` outside the parent's range a fresh preimage, and
//! finally adds untouched fillers. All fresh elements come from disjoint
//! pools, which is what keeps `R_1` a forest.
//!
//! ```
//! use treegrp::scaffold::ri::{build_ri, RiParams};
//! use treegrp::tree::{chain_tree, Variant};
//!
//! let m = build_ri(&chain_tree(Variant::Ri, 1, false), &RiParams::default()).unwrap();
//! assert_eq!(m.strata().upto(1), vec![0, 1, 2, 3]);
//! assert_eq!(m.map(1).pairs().collect::<Vec<_>>(), vec![(0, 1), (2, 0)]);
//! assert!(m.validate().all_pass());
//! ```

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::OnceLock;

use super::{
    check_injective, first_cycle_edge, violation, Elem, PartialMap, ScaffoldError, Sign, Strata,
    ValidationReport, Violation,
};
use crate::tree::{NodeId, StratifiedTree, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RiKind {
    /// Every map satisfies `dom(f_t) ∩ ran(f_t) = X_{n-1}`.
    Standard,
    /// Only fresh images are added, so `dom(f_t) = X_{n-1}` and no
    /// element of `X_0` is ever in a range. Used by the nilpotent groups.
    Embedding,
}

impl RiKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RiKind::Standard => "ri",
            RiKind::Embedding => "embedding",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RiParams {
    pub kind: RiKind,
    /// Size of `X_0` and number of untouched elements added at every stage.
    pub fillers_per_stage: usize,
    /// Index of the last stratum to build; defaults to the tree's last stage.
    pub stages: Option<usize>,
}

impl Default for RiParams {
    fn default() -> Self {
        RiParams {
            kind: RiKind::Standard,
            fillers_per_stage: 1,
            stages: None,
        }
    }
}

/// Raw scaffold data, for dumps and deliberate corruption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RiParts {
    pub tree: StratifiedTree,
    pub kind: RiKind,
    pub fillers_per_stage: usize,
    pub strata: Strata,
    pub maps: Vec<PartialMap>,
}

#[derive(Clone, Debug)]
pub struct ScaffoldRI {
    parts: RiParts,
    e1: OnceLock<BTreeMap<Elem, usize>>,
}

impl PartialEq for ScaffoldRI {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl Eq for ScaffoldRI {}

/// A composition label `(t̄, η)`; steps apply left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathLabel {
    pub steps: Vec<(NodeId, Sign)>,
}

impl PathLabel {
    pub fn new(steps: Vec<(NodeId, Sign)>) -> Self {
        PathLabel { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// No step is immediately undone by the next one.
    pub fn is_reduced(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[0].0 != w[1].0 || w[0].1 == w[1].1)
    }
}

pub fn build_ri(tree: &StratifiedTree, params: &RiParams) -> Result<ScaffoldRI, ScaffoldError> {
    if tree.variant() != Variant::Ri {
        return Err(ScaffoldError::WrongVariant {
            wanted: "ri",
            found: tree.variant().as_str(),
        });
    }
    let fillers = params.fillers_per_stage.max(1);
    let last = params
        .stages
        .unwrap_or_else(|| tree.stage_count().saturating_sub(1));
    let mut strata = Strata::new(last);
    for _ in 0..fillers {
        strata.alloc(0);
    }
    let mut maps = vec![PartialMap::new(); tree.len()];
    for n in 1..=last {
        let prev = strata.upto(n - 1);
        let fresh_nodes = if n < tree.stage_count() {
            tree.new_at(n).expect("stage within tree")
        } else {
            Vec::new()
        };
        for t in fresh_nodes {
            let s = tree.parent(t).expect("only the root is born at stage 0");
            let mut f = maps[s].clone();
            for &x in &prev {
                if !maps[s].contains_dom(x) {
                    let y = strata.alloc(n);
                    f.insert(x, y);
                }
            }
            if params.kind == RiKind::Standard {
                for &y in &prev {
                    if !maps[s].contains_ran(y) {
                        let x = strata.alloc(n);
                        f.insert(x, y);
                    }
                }
            }
            maps[t] = f;
        }
        for _ in 0..fillers {
            strata.alloc(n);
        }
    }
    Ok(ScaffoldRI::from_parts(RiParts {
        tree: tree.clone(),
        kind: params.kind,
        fillers_per_stage: fillers,
        strata,
        maps,
    }))
}

impl ScaffoldRI {
    /// Wraps raw data without validating it.
    pub fn from_parts(parts: RiParts) -> Self {
        ScaffoldRI {
            parts,
            e1: OnceLock::new(),
        }
    }

    pub fn parts(&self) -> &RiParts {
        &self.parts
    }

    pub fn into_parts(self) -> RiParts {
        self.parts
    }

    pub fn tree(&self) -> &StratifiedTree {
        &self.parts.tree
    }

    pub fn kind(&self) -> RiKind {
        self.parts.kind
    }

    pub fn fillers_per_stage(&self) -> usize {
        self.parts.fillers_per_stage
    }

    pub fn strata(&self) -> &Strata {
        &self.parts.strata
    }

    pub fn last_stage(&self) -> usize {
        self.parts.strata.last_stage()
    }

    pub fn birth(&self, x: Elem) -> Option<usize> {
        self.parts.strata.birth(x)
    }

    pub fn map(&self, t: NodeId) -> &PartialMap {
        &self.parts.maps[t]
    }

    /// `f^i_t(x)`.
    pub fn f(&self, t: NodeId, sign: Sign, x: Elem) -> Option<Elem> {
        self.parts.maps[t].apply(sign, x)
    }

    /// Nodes whose birth stage has been built.
    pub fn built_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        let last = self.last_stage();
        (0..self.tree().len()).filter(move |&t| self.tree().birth(t) <= last)
    }

    /// Nodes new at stage `n`, empty past the tree's last stratum.
    pub fn new_nodes(&self, n: usize) -> Vec<NodeId> {
        if n < self.tree().stage_count() {
            self.tree().new_at(n).unwrap_or_default()
        } else {
            Vec::new()
        }
    }

    fn check_tuple(&self, xs: &[Elem]) -> Result<(), ScaffoldError> {
        check_injective(xs)?;
        for &x in xs {
            if !self.strata().contains(x) {
                return Err(ScaffoldError::UnknownElement(x));
            }
        }
        Ok(())
    }

    /// `f^i_t` applied coordinatewise.
    pub fn f_tuple(&self, t: NodeId, sign: Sign, xs: &[Elem]) -> Option<Vec<Elem>> {
        xs.iter().map(|&x| self.f(t, sign, x)).collect()
    }

    /// All `R_k`-neighbours of a tuple, with the steps that reach them.
    pub fn neighbours(&self, xs: &[Elem]) -> BTreeSet<Vec<Elem>> {
        let mut out = BTreeSet::new();
        for t in self.built_nodes() {
            for sign in Sign::BOTH {
                if let Some(ys) = self.f_tuple(t, sign, xs) {
                    out.insert(ys);
                }
            }
        }
        out
    }

    /// `suc(x̄)`: one-step images that raise `𝐧`.
    pub fn suc_k(&self, xs: &[Elem]) -> Result<BTreeSet<Vec<Elem>>, ScaffoldError> {
        self.check_tuple(xs)?;
        let n0 = self.strata().tuple_birth(xs)?;
        Ok(self
            .neighbours(xs)
            .into_iter()
            .filter(|ys| self.strata().tuple_birth(ys).is_ok_and(|n| n > n0))
            .collect())
    }

    /// `x̄ ≤^k ȳ`.
    pub fn leq_k(&self, xs: &[Elem], ys: &[Elem]) -> Result<bool, ScaffoldError> {
        if xs.len() != ys.len() {
            return Err(ScaffoldError::LengthMismatch(xs.len(), ys.len()));
        }
        self.check_tuple(xs)?;
        self.check_tuple(ys)?;
        if xs == ys {
            return Ok(true);
        }
        let target = self.strata().tuple_birth(ys)?;
        let mut queue = VecDeque::from([xs.to_vec()]);
        let mut seen = BTreeSet::from([xs.to_vec()]);
        while let Some(cur) = queue.pop_front() {
            for next in self.suc_k(&cur)? {
                if next == ys {
                    return Ok(true);
                }
                if self.strata().tuple_birth(&next)? < target && seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Ok(false)
    }

    /// `x̄ <^k ȳ`.
    pub fn lt_k(&self, xs: &[Elem], ys: &[Elem]) -> Result<bool, ScaffoldError> {
        Ok(xs != ys && self.leq_k(xs, ys)?)
    }

    fn e1_index(&self) -> &BTreeMap<Elem, usize> {
        self.e1.get_or_init(|| {
            let classes = self.classes_k1();
            let mut idx = BTreeMap::new();
            for (i, class) in classes.iter().enumerate() {
                for &x in class {
                    idx.insert(x, i);
                }
            }
            idx
        })
    }

    fn classes_k1(&self) -> Vec<Vec<Elem>> {
        let all = self.strata().all();
        let pos: BTreeMap<Elem, usize> = all.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(all.len());
        for t in self.built_nodes() {
            for (x, y) in self.map(t).pairs() {
                if let (Some(&a), Some(&b)) = (pos.get(&x), pos.get(&y)) {
                    uf.union(a, b);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<Elem>> = BTreeMap::new();
        for (i, &x) in all.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(x);
        }
        let mut classes: Vec<Vec<Elem>> = groups.into_values().collect();
        classes.sort();
        classes
    }

    /// `E_1` class of an element, sorted.
    pub fn e1_class(&self, x: Elem) -> Result<Vec<Elem>, ScaffoldError> {
        let idx = self.e1_index();
        let c = *idx.get(&x).ok_or(ScaffoldError::UnknownElement(x))?;
        Ok(idx
            .iter()
            .filter(|&(_, &d)| d == c)
            .map(|(&y, _)| y)
            .collect())
    }

    pub fn e1_equivalent(&self, x: Elem, y: Elem) -> bool {
        let idx = self.e1_index();
        matches!((idx.get(&x), idx.get(&y)), (Some(a), Some(b)) if a == b)
    }

    /// The `E_k` component of a tuple, by search over `R_k`.
    pub fn ek_component(&self, xs: &[Elem]) -> Result<BTreeSet<Vec<Elem>>, ScaffoldError> {
        self.check_tuple(xs)?;
        let mut seen = BTreeSet::from([xs.to_vec()]);
        let mut queue = VecDeque::from([xs.to_vec()]);
        while let Some(cur) = queue.pop_front() {
            for next in self.neighbours(&cur) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }

    pub fn ek_equivalent(&self, xs: &[Elem], ys: &[Elem]) -> Result<bool, ScaffoldError> {
        if xs.len() != ys.len() {
            return Err(ScaffoldError::LengthMismatch(xs.len(), ys.len()));
        }
        if xs.len() == 1 {
            return Ok(self.e1_equivalent(xs[0], ys[0]));
        }
        Ok(self.ek_component(xs)?.contains(ys))
    }

    /// Partition of `seq_k(X)` into `E_k` classes, for `k ∈ {1, 2}`.
    pub fn components_ek(
        &self,
        k: usize,
        budget: usize,
    ) -> Result<Vec<Vec<Vec<Elem>>>, ScaffoldError> {
        match k {
            1 => Ok(self
                .classes_k1()
                .into_iter()
                .map(|c| c.into_iter().map(|x| vec![x]).collect())
                .collect()),
            2 => {
                let all = self.strata().all();
                let size = all.len() * all.len().saturating_sub(1);
                if size > budget {
                    return Err(ScaffoldError::SizeBudgetExceeded { size, budget });
                }
                let pairs: Vec<Vec<Elem>> = all
                    .iter()
                    .flat_map(|&a| all.iter().filter(move |&&b| b != a).map(move |&b| vec![a, b]))
                    .collect();
                let pos: BTreeMap<&[Elem], usize> = pairs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.as_slice(), i))
                    .collect();
                let mut uf = petgraph::unionfind::UnionFind::<usize>::new(pairs.len());
                for t in self.built_nodes() {
                    let dom: Vec<(Elem, Elem)> = self.map(t).pairs().collect();
                    for &(a, fa) in &dom {
                        for &(b, fb) in &dom {
                            if a != b {
                                uf.union(pos[&[a, b][..]], pos[&[fa, fb][..]]);
                            }
                        }
                    }
                }
                let mut groups: BTreeMap<usize, Vec<Vec<Elem>>> = BTreeMap::new();
                for (i, p) in pairs.iter().enumerate() {
                    groups.entry(uf.find(i)).or_default().push(p.clone());
                }
                let mut classes: Vec<_> = groups.into_values().collect();
                classes.sort();
                Ok(classes)
            }
            k => Err(ScaffoldError::UnsupportedArity(k)),
        }
    }

    /// Nodes `t` with `f^i_t(x) = y` such that no `s <_T t` has `x` in
    /// `dom(f^i_s)`.
    pub fn minimal_nodes(&self, x: Elem, y: Elem, sign: Sign) -> Vec<NodeId> {
        self.built_nodes()
            .filter(|&t| self.f(t, sign, x) == Some(y))
            .filter(|&t| {
                self.tree()
                    .parent(t)
                    .is_none_or(|s| !self.map(s).in_dom(sign, x))
            })
            .collect()
    }

    /// Trace `x_0, …, x_n` of a label on a tuple.
    pub fn apply_path(&self, label: &PathLabel, xs: &[Elem]) -> Result<Vec<Elem>, ScaffoldError> {
        Ok(self
            .trace(label, xs)?
            .pop()
            .expect("trace starts with the input"))
    }

    pub fn trace(&self, label: &PathLabel, xs: &[Elem]) -> Result<Vec<Vec<Elem>>, ScaffoldError> {
        let mut trace = vec![xs.to_vec()];
        for (step, &(t, sign)) in label.steps.iter().enumerate() {
            if t >= self.tree().len() {
                return Err(ScaffoldError::UnknownNode(t));
            }
            let cur = trace.last().expect("non-empty");
            match self.f_tuple(t, sign, cur) {
                Some(next) => trace.push(next),
                None => return Err(ScaffoldError::StepUndefined { step, trace }),
            }
        }
        Ok(trace)
    }

    /// Reduced for `x`: the trace is defined and has no repetitions.
    pub fn is_reduced_for(&self, label: &PathLabel, x: Elem) -> bool {
        match self.trace(label, &[x]) {
            Ok(trace) => {
                let set: BTreeSet<_> = trace.iter().collect();
                set.len() == trace.len()
            }
            Err(_) => false,
        }
    }

    pub fn is_strongly_reduced_for(&self, label: &PathLabel, x: Elem) -> bool {
        if !self.is_reduced_for(label, x) {
            return false;
        }
        let trace = self.trace(label, &[x]).expect("reduced implies defined");
        label.steps.iter().enumerate().all(|(l, &(t, sign))| {
            self.tree()
                .ancestors(t)
                .into_iter()
                .all(|s| !self.map(s).in_dom(sign, trace[l][0]))
        })
    }

    /// The strongly reduced label carrying `x` to `y`, if `x E_1 y`.
    pub fn strongly_reduced_path(&self, x: Elem, y: Elem) -> Option<PathLabel> {
        if x == y {
            return self.strata().contains(x).then(PathLabel::default);
        }
        if !self.e1_equivalent(x, y) {
            return None;
        }
        let mut prev: BTreeMap<Elem, Elem> = BTreeMap::new();
        let mut queue = VecDeque::from([x]);
        prev.insert(x, x);
        while let Some(cur) = queue.pop_front() {
            if cur == y {
                break;
            }
            for next in self.neighbours(&[cur]) {
                if let std::collections::btree_map::Entry::Vacant(e) = prev.entry(next[0]) {
                    e.insert(cur);
                    queue.push_back(next[0]);
                }
            }
        }
        let mut path = vec![y];
        while *path.last().expect("non-empty") != x {
            let p = prev[path.last().expect("non-empty")];
            path.push(p);
        }
        path.reverse();
        self.label_for_walk(&path)
    }

    /// Chooses the minimal node for every step of a simple walk.
    fn label_for_walk(&self, walk: &[Elem]) -> Option<PathLabel> {
        let mut steps = Vec::with_capacity(walk.len().saturating_sub(1));
        for w in walk.windows(2) {
            let step = Sign::BOTH.iter().find_map(|&sign| {
                self.minimal_nodes(w[0], w[1], sign)
                    .first()
                    .map(|&t| (t, sign))
            })?;
            steps.push(step);
        }
        Some(PathLabel::new(steps))
    }

    /// Cancels back-and-forth intervals and lowers every step to its
    /// minimal node; the endpoint is unchanged.
    pub fn reduce_path(&self, label: &PathLabel, x: Elem) -> Result<PathLabel, ScaffoldError> {
        let trace = self.trace(label, &[x])?;
        let mut walk: Vec<Elem> = Vec::new();
        for point in trace {
            let z = point[0];
            if let Some(pos) = walk.iter().position(|&w| w == z) {
                walk.truncate(pos + 1);
            } else {
                walk.push(z);
            }
        }
        Ok(self
            .label_for_walk(&walk)
            .expect("every step of a trace is realised by some node"))
    }

    /// Births are non-decreasing along the tuple.
    pub fn is_reasonable(&self, xs: &[Elem]) -> Result<bool, ScaffoldError> {
        self.check_tuple(xs)?;
        let births: Vec<usize> = xs
            .iter()
            .map(|&x| self.birth(x).expect("checked"))
            .collect();
        Ok(births.windows(2).all(|w| w[0] <= w[1]))
    }

    /// Runs every clause checker.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        report.push("a", self.check_a());
        match self.kind() {
            RiKind::Standard => report.push("d", self.check_d()),
            RiKind::Embedding => report.push("d*", self.check_d_embedding()),
        }
        report.push("f", self.check_f());
        report.push("g.alpha", self.check_g_alpha());
        report.push("g.beta", self.check_g_beta());
        report.push("h", self.check_h());
        report.push("i", self.check_i());
        report.push("l.1", self.check_l1());
        if self.strata().len() <= L2_ELEMENT_BUDGET {
            report.push("l.2", self.check_l2());
        }
        report
    }

    fn check_a(&self) -> Result<(), Violation> {
        if self.strata().new_at(0).is_empty() {
            return Err(violation(Some(0), None, vec![], "X_0 is empty"));
        }
        for n in 1..=self.last_stage() {
            if self.strata().new_at(n).is_empty() {
                return Err(violation(Some(n), None, vec![], "X_n does not grow"));
            }
        }
        for (&x, &b) in self.strata().births() {
            if b > self.last_stage() {
                return Err(violation(Some(b), None, vec![x], "element born past the last stage"));
            }
        }
        Ok(())
    }

    fn check_d(&self) -> Result<(), Violation> {
        for n in 1..=self.last_stage() {
            let prev: BTreeSet<Elem> = self.strata().upto(n - 1).into_iter().collect();
            for t in self.new_nodes(n) {
                let f = self.map(t);
                if let Some((a, b, y)) = f.collision() {
                    return Err(violation(Some(n), Some(t), vec![a, b, y], "f_t is not one-to-one"));
                }
                let both: BTreeSet<Elem> = f.dom().filter(|&x| f.contains_ran(x)).collect();
                if let Some(&x) = prev.symmetric_difference(&both).next() {
                    return Err(violation(
                        Some(n),
                        Some(t),
                        vec![x],
                        "dom(f_t) ∩ ran(f_t) differs from X_{n-1} at",
                    ));
                }
                if let Some(x) = f.dom().chain(f.ran()).find(|&x| !self.strata().in_stage(x, n)) {
                    return Err(violation(Some(n), Some(t), vec![x], "dom ∪ ran leaves X_n at"));
                }
            }
        }
        Ok(())
    }

    fn check_d_embedding(&self) -> Result<(), Violation> {
        for n in 1..=self.last_stage() {
            let prev: BTreeSet<Elem> = self.strata().upto(n - 1).into_iter().collect();
            for t in self.new_nodes(n) {
                let f = self.map(t);
                if let Some((a, b, y)) = f.collision() {
                    return Err(violation(Some(n), Some(t), vec![a, b, y], "f_t is not one-to-one"));
                }
                let dom: BTreeSet<Elem> = f.dom().collect();
                if let Some(&x) = prev.symmetric_difference(&dom).next() {
                    return Err(violation(Some(n), Some(t), vec![x], "dom(f_t) differs from X_{n-1} at"));
                }
                if let Some(y) = f.ran().find(|&y| !self.strata().in_stage(y, n)) {
                    return Err(violation(Some(n), Some(t), vec![y], "ran(f_t) leaves X_n at"));
                }
                if let Some(y) = f.ran().find(|&y| self.birth(y) == Some(0)) {
                    return Err(violation(Some(n), Some(t), vec![y], "an element of X_0 is in ran(f_t)"));
                }
            }
        }
        Ok(())
    }

    fn check_f(&self) -> Result<(), Violation> {
        for t in self.built_nodes() {
            for s in self.tree().ancestors(t) {
                if let Some((x, y)) = self.map(s).is_subset_of(self.map(t)) {
                    return Err(violation(
                        Some(self.tree().birth(t)),
                        Some(t),
                        vec![x, y],
                        format!("f_s ⊄ f_t for s = #{s}, missing pair"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_g_alpha(&self) -> Result<(), Violation> {
        let root = self.tree().root();
        match self.map(root).pairs().next() {
            None => Ok(()),
            Some((x, y)) => Err(violation(Some(0), Some(root), vec![x, y], "root map is not empty")),
        }
    }

    fn check_g_beta(&self) -> Result<(), Violation> {
        for t in self.built_nodes() {
            let Some(s) = self.tree().parent(t) else {
                continue;
            };
            let n = self.tree().birth(t);
            let fs = self.map(s);
            for (x, y) in self.map(t).pairs() {
                if fs.contains_dom(x) {
                    continue;
                }
                let prev = |z: Elem| self.strata().in_stage(z, n - 1);
                let fresh = |z: Elem| self.birth(z) == Some(n);
                let forward = prev(x) && !fs.contains_dom(x) && fresh(y);
                let backward = prev(y) && !fs.contains_ran(y) && fresh(x);
                let ok = match self.kind() {
                    RiKind::Standard => forward || backward,
                    RiKind::Embedding => forward,
                };
                if !ok {
                    return Err(violation(Some(n), Some(t), vec![x, y], "new pair does not cross stages"));
                }
            }
        }
        Ok(())
    }

    fn check_h(&self) -> Result<(), Violation> {
        for n in 1..=self.last_stage() {
            let mut owner: BTreeMap<Elem, (NodeId, Sign)> = BTreeMap::new();
            for t in self.new_nodes(n) {
                for sign in Sign::BOTH {
                    let f = self.map(t);
                    let ran: Vec<Elem> = match sign {
                        Sign::Plus => f.ran().collect(),
                        Sign::Minus => f.dom().collect(),
                    };
                    for y in ran {
                        if self.strata().in_stage(y, n - 1) {
                            continue;
                        }
                        if let Some(&(t0, s0)) = owner.get(&y) {
                            return Err(violation(
                                Some(n),
                                Some(t),
                                vec![y],
                                format!("fresh ranges of (#{t0}, {s0}) and (#{t}, {sign}) share"),
                            ));
                        }
                        owner.insert(y, (t, sign));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_i(&self) -> Result<(), Violation> {
        for n in 1..=self.last_stage() {
            let mut touched = BTreeSet::new();
            for t in self.new_nodes(n) {
                touched.extend(self.map(t).dom());
                touched.extend(self.map(t).ran());
            }
            let spare = self
                .strata()
                .new_at(n)
                .into_iter()
                .any(|x| !touched.contains(&x));
            if !spare {
                return Err(violation(
                    Some(n),
                    None,
                    vec![],
                    "X_n is not strictly larger than X_{n-1} together with the new ranges",
                ));
            }
        }
        Ok(())
    }

    fn check_l1(&self) -> Result<(), Violation> {
        let edges = self
            .built_nodes()
            .flat_map(|t| self.map(t).pairs().collect::<Vec<_>>());
        match first_cycle_edge(edges) {
            None => Ok(()),
            Some((a, b)) => Err(violation(None, None, vec![a, b], "R_1 has a cycle through edge")),
        }
    }

    fn check_l2(&self) -> Result<(), Violation> {
        let mut edges = Vec::new();
        for t in self.built_nodes() {
            let pairs: Vec<(Elem, Elem)> = self.map(t).pairs().collect();
            for &(a, fa) in &pairs {
                for &(b, fb) in &pairs {
                    if a != b {
                        edges.push(((a, b), (fa, fb)));
                    }
                }
            }
        }
        match first_cycle_edge(edges) {
            None => Ok(()),
            Some((u, v)) => Err(violation(
                None,
                None,
                vec![u.0, u.1, v.0, v.1],
                "R_2 has a cycle through edge",
            )),
        }
    }
}

/// Above this many elements the `k = 2` forest check is skipped.
pub const L2_ELEMENT_BUDGET: usize = 160;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{chain_tree, parse_tree};

    fn running() -> ScaffoldRI {
        build_ri(&chain_tree(Variant::Ri, 1, true), &RiParams::default()).unwrap()
    }

    #[test]
    fn running_example() {
        let m = running();
        assert_eq!(m.strata().upto(1), vec![0, 1, 2, 3]);
        assert!(m.map(0).is_empty());
        let suc: Vec<_> = m.suc_k(&[0]).unwrap().into_iter().collect();
        assert_eq!(suc, vec![vec![1], vec![2]]);
        assert!(m.suc_k(&[3]).unwrap().is_empty());
        assert!(m.suc_k(&[1]).unwrap().is_empty());
        assert!(m.leq_k(&[0], &[1]).unwrap());
        assert!(!m.leq_k(&[1], &[2]).unwrap());
        let classes = m.components_ek(1, 0).unwrap();
        assert_eq!(classes, vec![vec![vec![0], vec![1], vec![2]], vec![vec![3]]]);
    }

    #[test]
    fn stage_two_under_chain() {
        let m = build_ri(&chain_tree(Variant::Ri, 2, false), &RiParams::default()).unwrap();
        let f2: Vec<_> = m.map(2).pairs().collect();
        assert_eq!(f2, vec![(0, 1), (1, 4), (2, 0), (3, 5), (6, 2), (7, 3)]);
        assert!(m.validate().all_pass(), "{}", m.validate());
    }

    #[test]
    fn paths() {
        let m = running();
        assert_eq!(m.strongly_reduced_path(0, 0), Some(PathLabel::default()));
        assert_eq!(
            m.strongly_reduced_path(0, 1),
            Some(PathLabel::new(vec![(1, Sign::Plus)]))
        );
        assert_eq!(m.strongly_reduced_path(0, 3), None);
        let back = PathLabel::new(vec![(1, Sign::Plus), (1, Sign::Minus)]);
        assert_eq!(m.reduce_path(&back, 0).unwrap(), PathLabel::default());
        assert!(matches!(
            m.apply_path(&PathLabel::new(vec![(1, Sign::Plus)]), &[3]),
            Err(ScaffoldError::StepUndefined { step: 0, .. })
        ));
    }

    #[test]
    fn fixed_point_is_caught() {
        let mut parts = running().into_parts();
        parts.maps[1].insert(0, 0);
        let m = ScaffoldRI::from_parts(parts);
        assert!(!m.validate().passed("g.beta"));
    }

    #[test]
    fn deleted_filler_is_caught() {
        let tree = parse_tree("t0 - 0\nt1 t0 1\nt2 t1 2").unwrap();
        let mut parts = build_ri(&tree, &RiParams::default()).unwrap().into_parts();
        let filler = *parts.strata.new_at(2).last().unwrap();
        parts.strata.remove(filler);
        let m = ScaffoldRI::from_parts(parts);
        let report = m.validate();
        let fail = report.get("i").unwrap().outcome.clone().unwrap_err();
        assert_eq!(fail.stage, Some(2));
    }

    #[test]
    fn reasonable() {
        let m = running();
        assert!(m.is_reasonable(&[0, 1]).unwrap());
        assert!(!m.is_reasonable(&[1, 0]).unwrap());
        assert!(m.is_reasonable(&[1, 2]).unwrap());
        assert!(m.is_reasonable(&[3]).unwrap());
    }

    #[test]
    fn embedding_kind() {
        let params = RiParams {
            kind: RiKind::Embedding,
            ..RiParams::default()
        };
        let m = build_ri(&chain_tree(Variant::Ri, 3, true), &params).unwrap();
        assert!(m.validate().all_pass(), "{}", m.validate());
        for t in m.built_nodes() {
            assert!(m.map(t).ran().all(|y| m.birth(y) != Some(0)));
        }
    }
}
