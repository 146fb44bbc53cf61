//! Tree-indexed partial surjections: the Hopfian-flavour scaffold.
//!
//! A node `t` new at stage `n` inherits its parent's map and then owns a
//! batch of elements born at `n`: one preimage for every `x ∈ X_{n-1}`, and a
//! witness tuple `z̄_{(n,t,x̄)}` with `f_t(z̄) = x̄` for every injective `x̄`
//! over `X_{n-1}` of length at most the tuple cap. One filler per stage stays
//! outside every domain.
//!
//! ```
//! use treegrp::scaffold::ho::{build_ho, HoParams};
//! use treegrp::tree::parse_tree;
//!
//! let tree = parse_tree("variant ho\nt0 - 0\na t0 1\nb t0 1").unwrap();
//! let m = build_ho(&tree, &HoParams { tuple_cap: 1, ..HoParams::default() }).unwrap();
//! assert!(m.validate().all_pass());
//! let z = m.witness(1, 1, &[0]).unwrap();
//! assert_eq!(m.f(1, z[0]), Some(0));
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::{violation, Elem, ScaffoldError, Strata, ValidationReport, Violation};
use crate::tree::{NodeId, StratifiedTree, Variant};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoParams {
    /// Longest witness tuple built and checked.
    pub tuple_cap: usize,
    /// Size of `X_0` and number of fillers added per stage.
    pub fillers_per_stage: usize,
    pub stages: Option<usize>,
    /// The builder refuses to grow `X` past this size.
    pub max_elements: usize,
}

impl Default for HoParams {
    fn default() -> Self {
        HoParams {
            tuple_cap: 3,
            fillers_per_stage: 1,
            stages: None,
            max_elements: 200_000,
        }
    }
}

pub type WitnessKey = (usize, NodeId, Vec<Elem>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoParts {
    pub tree: StratifiedTree,
    pub tuple_cap: usize,
    pub fillers_per_stage: usize,
    pub strata: Strata,
    pub maps: Vec<BTreeMap<Elem, Elem>>,
    /// `(n, t, x̄) ↦ z̄`.
    pub witnesses: BTreeMap<WitnessKey, Vec<Elem>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaffoldHO {
    parts: HoParts,
}

/// Injective tuples over `pool` of lengths `1..=cap`, by length then
/// lexicographically.
pub fn injective_tuples(pool: &[Elem], cap: usize) -> Vec<Vec<Elem>> {
    fn go(pool: &[Elem], len: usize, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for &x in pool {
            if !cur.contains(&x) {
                cur.push(x);
                go(pool, len, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for len in 1..=cap.min(pool.len()) {
        go(pool, len, &mut Vec::new(), &mut out);
    }
    out
}

fn count_injective(n: usize, cap: usize) -> usize {
    let mut total = 0usize;
    for k in 1..=cap.min(n) {
        let perms: usize = (0..k).map(|i| n - i).product();
        total = total.saturating_add(perms.saturating_mul(k));
    }
    total
}

pub fn build_ho(tree: &StratifiedTree, params: &HoParams) -> Result<ScaffoldHO, ScaffoldError> {
    if tree.variant() != Variant::Ho {
        return Err(ScaffoldError::WrongVariant {
            wanted: "ho",
            found: tree.variant().as_str(),
        });
    }
    let fillers = params.fillers_per_stage.max(1);
    let cap = params.tuple_cap.max(1);
    let last = params
        .stages
        .unwrap_or_else(|| tree.stage_count().saturating_sub(1));
    let mut strata = Strata::new(last);
    for _ in 0..fillers {
        strata.alloc(0);
    }
    let mut maps = vec![BTreeMap::new(); tree.len()];
    let mut witnesses = BTreeMap::new();
    for n in 1..=last {
        let prev = strata.upto(n - 1);
        let fresh_nodes = if n < tree.stage_count() {
            tree.new_at(n).expect("stage within tree")
        } else {
            Vec::new()
        };
        let needed = fresh_nodes.len() * (prev.len() + count_injective(prev.len(), cap)) + fillers;
        if strata.len() + needed > params.max_elements {
            return Err(ScaffoldError::SizeBudgetExceeded {
                size: strata.len() + needed,
                budget: params.max_elements,
            });
        }
        let tuples = injective_tuples(&prev, cap);
        for t in fresh_nodes {
            let s = tree.parent(t).expect("only the root is born at stage 0");
            let mut f: BTreeMap<Elem, Elem> = maps[s].clone();
            for &x in &prev {
                let z = strata.alloc(n);
                f.insert(z, x);
            }
            for xs in &tuples {
                let zs: Vec<Elem> = xs
                    .iter()
                    .map(|&x| {
                        let z = strata.alloc(n);
                        f.insert(z, x);
                        z
                    })
                    .collect();
                witnesses.insert((n, t, xs.clone()), zs);
            }
            maps[t] = f;
        }
        for _ in 0..fillers {
            strata.alloc(n);
        }
    }
    Ok(ScaffoldHO {
        parts: HoParts {
            tree: tree.clone(),
            tuple_cap: cap,
            fillers_per_stage: fillers,
            strata,
            maps,
            witnesses,
        },
    })
}

impl ScaffoldHO {
    pub fn from_parts(parts: HoParts) -> Self {
        ScaffoldHO { parts }
    }

    pub fn parts(&self) -> &HoParts {
        &self.parts
    }

    pub fn into_parts(self) -> HoParts {
        self.parts
    }

    pub fn tree(&self) -> &StratifiedTree {
        &self.parts.tree
    }

    pub fn tuple_cap(&self) -> usize {
        self.parts.tuple_cap
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

    pub fn map(&self, t: NodeId) -> &BTreeMap<Elem, Elem> {
        &self.parts.maps[t]
    }

    pub fn f(&self, t: NodeId, x: Elem) -> Option<Elem> {
        self.parts.maps[t].get(&x).copied()
    }

    pub fn f_tuple(&self, t: NodeId, xs: &[Elem]) -> Option<Vec<Elem>> {
        xs.iter().map(|&x| self.f(t, x)).collect()
    }

    pub fn witness(&self, n: usize, t: NodeId, xs: &[Elem]) -> Option<&[Elem]> {
        self.parts
            .witnesses
            .get(&(n, t, xs.to_vec()))
            .map(Vec::as_slice)
    }

    pub fn witnesses(&self) -> &BTreeMap<WitnessKey, Vec<Elem>> {
        &self.parts.witnesses
    }

    /// The witness entry whose tuple is exactly `zs`, if any.
    pub fn witness_owner(&self, zs: &[Elem]) -> Option<&WitnessKey> {
        self.parts
            .witnesses
            .iter()
            .find(|(_, v)| v.as_slice() == zs)
            .map(|(k, _)| k)
    }

    pub fn built_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        let last = self.last_stage();
        (0..self.tree().len()).filter(move |&t| self.tree().birth(t) <= last)
    }

    pub fn new_nodes(&self, n: usize) -> Vec<NodeId> {
        if n < self.tree().stage_count() {
            self.tree().new_at(n).unwrap_or_default()
        } else {
            Vec::new()
        }
    }

    /// `suc(x̄) = {ȳ : f_t(ȳ) = x̄ for some t}`.
    pub fn suc(&self, xs: &[Elem]) -> BTreeSet<Vec<Elem>> {
        let mut out = BTreeSet::new();
        for t in self.built_nodes() {
            let f = self.map(t);
            let mut pre: Vec<Vec<Elem>> = vec![Vec::new()];
            for &x in xs {
                let ys: Vec<Elem> = f.iter().filter(|&(_, &v)| v == x).map(|(&k, _)| k).collect();
                let mut next = Vec::new();
                for p in &pre {
                    for &y in &ys {
                        if !p.contains(&y) {
                            let mut q = p.clone();
                            q.push(y);
                            next.push(q);
                        }
                    }
                }
                pre = next;
            }
            out.extend(pre);
        }
        out
    }

    /// One step down: `{f_t(ȳ) : ȳ ⊆ dom(f_t)}`.
    pub fn predecessors(&self, ys: &[Elem]) -> BTreeSet<Vec<Elem>> {
        self.built_nodes()
            .filter_map(|t| self.f_tuple(t, ys))
            .collect()
    }

    /// `x̄ ≤^k ȳ`: `x̄` is reached from `ȳ` by applying maps.
    pub fn leq(&self, xs: &[Elem], ys: &[Elem]) -> bool {
        let mut frontier = BTreeSet::from([ys.to_vec()]);
        let mut seen = frontier.clone();
        while !frontier.is_empty() {
            if frontier.contains(xs) {
                return true;
            }
            let mut next = BTreeSet::new();
            for cur in &frontier {
                for p in self.predecessors(cur) {
                    if seen.insert(p.clone()) {
                        next.insert(p);
                    }
                }
            }
            frontier = next;
        }
        false
    }

    /// `𝐡(x)`: the least node whose domain contains `x`.
    pub fn locator_of(&self, x: Elem) -> Result<Option<NodeId>, ScaffoldError> {
        let holders: Vec<NodeId> = self
            .built_nodes()
            .filter(|&t| self.map(t).contains_key(&x))
            .collect();
        if holders.is_empty() {
            return Ok(None);
        }
        let minimal: Vec<NodeId> = holders
            .iter()
            .copied()
            .filter(|&t| !holders.iter().any(|&s| self.tree().lt(s, t)))
            .collect();
        match minimal.as_slice() {
            [h] => Ok(Some(*h)),
            _ => Err(ScaffoldError::NoLocator(x)),
        }
    }

    /// `𝐡` on every element of some domain.
    pub fn locator(&self) -> Result<BTreeMap<Elem, NodeId>, ScaffoldError> {
        let mut out = BTreeMap::new();
        for x in self.strata().all() {
            if let Some(h) = self.locator_of(x)? {
                out.insert(x, h);
            }
        }
        Ok(out)
    }

    /// A `<_𝔪`-minimal element born at stage `n`: one outside every domain.
    pub fn minimal_fresh(&self, n: usize) -> Result<Elem, ScaffoldError> {
        if n > self.last_stage() {
            return Err(ScaffoldError::StageUnknown(n));
        }
        self.strata()
            .new_at(n)
            .into_iter()
            .find(|&x| self.built_nodes().all(|t| !self.map(t).contains_key(&x)))
            .ok_or(ScaffoldError::StageUnknown(n))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        report.push("a", self.check_a());
        report.push("c", self.check_c());
        report.push("d", self.check_d());
        report.push("e", self.check_e());
        report.push("f", self.check_f());
        report.push("g", self.check_g());
        report.push("h", self.check_h());
        report.push("i", self.check_i());
        report.push("j", self.check_j());
        let (k1, k2, k3) = self.check_k();
        report.push("k.1", k1);
        report.push("k.2", k2);
        report.push("k.3", k3);
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
        Ok(())
    }

    fn check_c(&self) -> Result<(), Violation> {
        for n in 1..=self.last_stage() {
            let prev: BTreeSet<Elem> = self.strata().upto(n - 1).into_iter().collect();
            for t in self.new_nodes(n) {
                let f = self.map(t);
                if let Some((&x, _)) = f.iter().find(|&(&x, _)| !self.strata().in_stage(x, n)) {
                    return Err(violation(Some(n), Some(t), vec![x], "dom(f_t) leaves X_n at"));
                }
                if let Some((&x, &y)) = f.iter().find(|&(_, y)| !prev.contains(y)) {
                    return Err(violation(Some(n), Some(t), vec![x, y], "f_t leaves X_{n-1} at"));
                }
                let fresh_image: BTreeSet<Elem> = f
                    .iter()
                    .filter(|&(x, _)| !prev.contains(x))
                    .map(|(_, &y)| y)
                    .collect();
                if let Some(&y) = prev.difference(&fresh_image).next() {
                    return Err(violation(
                        Some(n),
                        Some(t),
                        vec![y],
                        "dom(f_t) \\ X_{n-1} does not cover X_{n-1} at",
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_d(&self) -> Result<(), Violation> {
        for t in self.built_nodes() {
            for s in self.tree().ancestors(t) {
                if let Some((&x, &y)) = self.map(s).iter().find(|&(x, y)| self.map(t).get(x) != Some(y)) {
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

    fn check_e(&self) -> Result<(), Violation> {
        for t in self.built_nodes() {
            for s in self.tree().ancestors(t) {
                let m = self.tree().birth(s);
                let lhs: BTreeSet<Elem> = self
                    .map(t)
                    .keys()
                    .copied()
                    .filter(|&x| self.strata().in_stage(x, m))
                    .collect();
                let rhs: BTreeSet<Elem> = self.map(s).keys().copied().collect();
                if let Some(&x) = lhs.symmetric_difference(&rhs).next() {
                    return Err(violation(
                        Some(m),
                        Some(t),
                        vec![x],
                        format!("dom(f_t) ∩ X_m differs from dom(f_s) for s = #{s} at"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_f(&self) -> Result<(), Violation> {
        for n in 1..=self.last_stage() {
            for t in self.new_nodes(n) {
                let lhs: BTreeSet<Elem> = self
                    .map(t)
                    .keys()
                    .copied()
                    .filter(|&x| self.strata().in_stage(x, n - 1))
                    .collect();
                let rhs: BTreeSet<Elem> = self
                    .tree()
                    .ancestors(t)
                    .into_iter()
                    .flat_map(|s| self.map(s).keys().copied().collect::<Vec<_>>())
                    .collect();
                if let Some(&x) = lhs.symmetric_difference(&rhs).next() {
                    return Err(violation(
                        Some(n),
                        Some(t),
                        vec![x],
                        "dom(f_t) ∩ X_{n-1} differs from the union of the ancestors' domains at",
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_g(&self) -> Result<(), Violation> {
        let nodes: Vec<NodeId> = self.built_nodes().collect();
        for &s in &nodes {
            for &t in &nodes {
                if s >= t {
                    continue;
                }
                let r = self.tree().meet(s, t).expect("built nodes exist");
                let both: BTreeSet<Elem> = self
                    .map(s)
                    .keys()
                    .copied()
                    .filter(|x| self.map(t).contains_key(x))
                    .collect();
                let dr: BTreeSet<Elem> = self.map(r).keys().copied().collect();
                if let Some(&x) = both.symmetric_difference(&dr).next() {
                    return Err(violation(
                        None,
                        Some(t),
                        vec![x],
                        format!("dom(f_s) ∩ dom(f_t) differs from dom(f_r) for s = #{s}, r = #{r} at"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_h(&self) -> Result<(), Violation> {
        for n in 1..=self.last_stage() {
            let touched: BTreeSet<Elem> = self
                .new_nodes(n)
                .into_iter()
                .flat_map(|t| self.map(t).keys().copied().collect::<Vec<_>>())
                .collect();
            if self
                .strata()
                .new_at(n)
                .into_iter()
                .all(|x| touched.contains(&x))
            {
                return Err(violation(
                    Some(n),
                    None,
                    vec![],
                    "X_n is not strictly larger than X_{n-1} together with the new domains",
                ));
            }
        }
        Ok(())
    }

    fn check_i(&self) -> Result<(), Violation> {
        let nodes: Vec<NodeId> = self.built_nodes().collect();
        let mut values: BTreeMap<(Elem, Elem), Vec<NodeId>> = BTreeMap::new();
        for &t in &nodes {
            for (&x, &y) in self.map(t) {
                values.entry((x, y)).or_default().push(t);
            }
        }
        for ((x, y), holders) in values {
            let minimal: Vec<NodeId> = holders
                .iter()
                .copied()
                .filter(|&t| !holders.iter().any(|&s| self.tree().lt(s, t)))
                .collect();
            let ok = match minimal.as_slice() {
                [m] => {
                    let cone: Vec<NodeId> = nodes.iter().copied().filter(|&t| self.tree().leq(*m, t)).collect();
                    cone == holders
                }
                _ => false,
            };
            if !ok {
                return Err(violation(None, holders.first().copied(), vec![x, y], "{t : f_t(x) = y} is not a cone for"));
            }
        }
        Ok(())
    }

    fn check_j(&self) -> Result<(), Violation> {
        let nodes: Vec<NodeId> = self.built_nodes().collect();
        for &s in &nodes {
            for &t in &nodes {
                if s >= t {
                    continue;
                }
                let r = self.tree().meet(s, t).expect("built nodes exist");
                let agree: BTreeSet<Elem> = self
                    .map(s)
                    .iter()
                    .filter(|&(x, y)| self.map(t).get(x) == Some(y))
                    .map(|(&x, _)| x)
                    .collect();
                let dr: BTreeSet<Elem> = self.map(r).keys().copied().collect();
                if let Some(&x) = agree.symmetric_difference(&dr).next() {
                    return Err(violation(
                        None,
                        Some(t),
                        vec![x],
                        format!("agreement set of f_s, f_t differs from dom(f_r) for s = #{s}, r = #{r} at"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_k(&self) -> (Result<(), Violation>, Result<(), Violation>, Result<(), Violation>) {
        let mut k1 = Ok(());
        let mut k2 = Ok(());
        let mut k3 = Ok(());
        'stages: for n in 1..=self.last_stage() {
            let prev = self.strata().upto(n - 1);
            let tuples = injective_tuples(&prev, self.tuple_cap());
            let mut owner: BTreeMap<Elem, (NodeId, Vec<Elem>)> = BTreeMap::new();
            for t in self.new_nodes(n) {
                for xs in &tuples {
                    let Some(zs) = self.witness(n, t, xs) else {
                        if k1.is_ok() {
                            k1 = Err(violation(Some(n), Some(t), xs.clone(), "no witness tuple for"));
                        }
                        continue;
                    };
                    let distinct: BTreeSet<_> = zs.iter().collect();
                    let fresh = zs
                        .iter()
                        .all(|&z| self.map(t).contains_key(&z) && !self.strata().in_stage(z, n - 1));
                    if k1.is_ok() && (zs.len() != xs.len() || distinct.len() != zs.len() || !fresh) {
                        k1 = Err(violation(Some(n), Some(t), zs.to_vec(), "witness tuple is not fresh and injective"));
                    }
                    if k3.is_ok() && self.f_tuple(t, zs).as_deref() != Some(xs.as_slice()) {
                        k3 = Err(violation(Some(n), Some(t), zs.to_vec(), "f_t does not carry the witness tuple back"));
                    }
                    for &z in zs {
                        if let Some((t0, xs0)) = owner.get(&z) {
                            if k2.is_ok() && (*t0, xs0) != (t, xs) {
                                k2 = Err(violation(
                                    Some(n),
                                    Some(t),
                                    vec![z],
                                    format!("witness tuples for (#{t0}, {xs0:?}) and (#{t}, {xs:?}) share"),
                                ));
                            }
                        } else {
                            owner.insert(z, (t, xs.clone()));
                        }
                    }
                    if k1.is_err() && k2.is_err() && k3.is_err() {
                        break 'stages;
                    }
                }
            }
        }
        (k1, k2, k3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_tree;

    fn two_siblings() -> ScaffoldHO {
        let tree = parse_tree("variant ho\nt0 - 0\na t0 1\nb t0 1").unwrap();
        build_ho(&tree, &HoParams::default()).unwrap()
    }

    #[test]
    fn root_only() {
        let tree = parse_tree("variant ho\nt0 - 0").unwrap();
        let m = build_ho(&tree, &HoParams { stages: Some(2), ..HoParams::default() }).unwrap();
        assert_eq!(m.strata().len(), 3);
        assert!(m.map(0).is_empty());
        assert!(m.validate().all_pass());
    }

    #[test]
    fn siblings() {
        let m = two_siblings();
        assert!(m.validate().all_pass(), "{}", m.validate());
        assert_eq!(m.strata().upto(1).len(), 6);
        let shared: Vec<_> = m.map(1).keys().filter(|x| m.map(2).contains_key(x)).collect();
        assert!(shared.is_empty());
        let z = m.witness(1, 1, &[0]).unwrap();
        assert_eq!(m.f(1, z[0]), Some(0));
        assert_eq!(m.locator_of(z[0]).unwrap(), Some(1));
        assert_eq!(m.locator_of(0).unwrap(), None);
        assert_eq!(m.minimal_fresh(1).unwrap(), 5);
        assert_eq!(m.minimal_fresh(0).unwrap(), 0);
    }

    #[test]
    fn corrupted_witness_overlap() {
        let mut parts = two_siblings().into_parts();
        let a = parts.witnesses[&(1, 1, vec![0])].clone();
        parts.witnesses.insert((1, 2, vec![0]), a);
        let m = ScaffoldHO::from_parts(parts);
        let report = m.validate();
        assert!(!report.passed("k.2"));
    }

    #[test]
    fn removed_filler() {
        let mut parts = two_siblings().into_parts();
        parts.strata.remove(5);
        let m = ScaffoldHO::from_parts(parts);
        let fail = m.validate().get("h").unwrap().outcome.clone().unwrap_err();
        assert_eq!(fail.stage, Some(1));
    }

    #[test]
    fn tuples() {
        assert_eq!(injective_tuples(&[0, 1], 2), vec![vec![0], vec![1], vec![0, 1], vec![1, 0]]);
        assert_eq!(count_injective(3, 2), 3 + 12);
    }
}
