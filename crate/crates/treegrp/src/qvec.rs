//! Finitely supported rational vectors over `X`, the lifted maps `f̂_t`, the
//! orders `<_*` and the equivalence `𝓔`.
//!
//! Text syntax: `q1*x<i> + q2*x<j> + …` with sorted support, e.g.
//! `3/2*x0 + -1*x4`; the zero vector is `0`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::scaffold::ho::ScaffoldHO;
use crate::scaffold::ri::{PathLabel, ScaffoldRI};
use crate::scaffold::{Elem, ScaffoldError, Sign, Strata};
use crate::tree::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QError {
    #[error("cannot parse vector `{0}`")]
    Parse(String),
    #[error("x{elem} is outside the domain of node #{node}")]
    OutsideDomain { node: NodeId, elem: Elem },
    #[error("the inverse map is not available in this flavour")]
    SignUnsupported,
    #[error("`{0}` is not a nonzero integral vector")]
    NotInG0(String),
    #[error("x{0} is not in X")]
    UnknownElement(Elem),
    #[error("purity check needs more than {0} steps")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Scaffold(#[from] ScaffoldError),
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QVec {
    coeffs: BTreeMap<Elem, BigRational>,
}

impl QVec {
    pub fn zero() -> Self {
        QVec::default()
    }

    pub fn basis(x: Elem) -> Self {
        QVec::from_pairs([(x, BigRational::one())])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Elem, BigRational)>) -> Self {
        let mut v = QVec::zero();
        for (x, q) in pairs {
            v.add_term(x, &q);
        }
        v
    }

    pub fn from_ints(pairs: &[(Elem, i64)]) -> Self {
        QVec::from_pairs(pairs.iter().map(|&(x, q)| (x, int(q))))
    }

    pub fn add_term(&mut self, x: Elem, q: &BigRational) {
        if q.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(x).or_insert_with(BigRational::zero);
        *entry += q;
        if entry.is_zero() {
            self.coeffs.remove(&x);
        }
    }

    pub fn get(&self, x: Elem) -> BigRational {
        self.coeffs.get(&x).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Elem, &BigRational)> {
        self.coeffs.iter().map(|(&x, q)| (x, q))
    }

    pub fn support(&self) -> Vec<Elem> {
        self.coeffs.keys().copied().collect()
    }

    pub fn coefficients(&self) -> Vec<BigRational> {
        self.coeffs.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.values().all(|q| q.is_integer())
    }

    /// Nonzero with integer coefficients: a member of `G_0^+`.
    pub fn is_g0_plus(&self) -> bool {
        !self.is_zero() && self.is_integral()
    }

    /// Least common denominator of the coefficients.
    pub fn denominator(&self) -> BigInt {
        self.coeffs
            .values()
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
    }

    pub fn scale(&self, q: &BigRational) -> QVec {
        if q.is_zero() {
            return QVec::zero();
        }
        QVec {
            coeffs: self.coeffs.iter().map(|(&x, c)| (x, c * q)).collect(),
        }
    }

    /// `𝐧(a)`: the largest birth in the support; `None` for zero.
    pub fn birth(&self, strata: &Strata) -> Result<Option<usize>, QError> {
        let mut best = None;
        for &x in self.coeffs.keys() {
            let b = strata.birth(x).ok_or(QError::UnknownElement(x))?;
            best = Some(best.map_or(b, |m: usize| m.max(b)));
        }
        Ok(best)
    }

    /// Relabels the support; the map must be injective on it.
    pub fn relabel(&self, f: impl Fn(Elem) -> Option<Elem>) -> Option<QVec> {
        let mut out = QVec::zero();
        for (&x, q) in &self.coeffs {
            out.add_term(f(x)?, q);
        }
        Some(out)
    }

    pub fn check_g0_plus(&self) -> Result<(), QError> {
        if self.is_g0_plus() {
            Ok(())
        } else {
            Err(QError::NotInG0(self.to_string()))
        }
    }
}

impl Add for &QVec {
    type Output = QVec;
    fn add(self, rhs: &QVec) -> QVec {
        let mut out = self.clone();
        for (&x, q) in &rhs.coeffs {
            out.add_term(x, q);
        }
        out
    }
}

impl Sub for &QVec {
    type Output = QVec;
    fn sub(self, rhs: &QVec) -> QVec {
        let mut out = self.clone();
        for (&x, q) in &rhs.coeffs {
            out.add_term(x, &-q);
        }
        out
    }
}

impl Neg for &QVec {
    type Output = QVec;
    fn neg(self) -> QVec {
        self.scale(&-BigRational::one())
    }
}

impl fmt::Display for QVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (x, q)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{q}*x{x}")?;
        }
        Ok(())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            (!d.is_zero()).then(|| BigRational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

impl FromStr for QVec {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || QError::Parse(s.to_string());
        let text = s.trim();
        if text == "0" {
            return Ok(QVec::zero());
        }
        // Split on top-level `+` and on `-` that follows whitespace.
        let mut terms = Vec::new();
        let mut cur = String::new();
        let mut prev_space = true;
        for ch in text.chars() {
            match ch {
                '+' => {
                    terms.push(std::mem::take(&mut cur));
                }
                '-' if prev_space && !cur.trim().is_empty() => {
                    terms.push(std::mem::take(&mut cur));
                    cur.push('-');
                }
                _ => cur.push(ch),
            }
            prev_space = ch.is_whitespace();
        }
        terms.push(cur);
        let mut v = QVec::zero();
        for term in terms {
            let term: String = term.split_whitespace().collect();
            if term.is_empty() {
                return Err(err());
            }
            let (coef, var) = match term.rsplit_once('*') {
                Some((c, x)) => (parse_rational(c).ok_or_else(err)?, x.to_string()),
                None => match term.strip_prefix('-') {
                    Some(x) => (-BigRational::one(), x.to_string()),
                    None => (BigRational::one(), term.clone()),
                },
            };
            let idx: Elem = var
                .strip_prefix('x')
                .and_then(|i| i.parse().ok())
                .ok_or_else(err)?;
            v.add_term(idx, &coef);
        }
        Ok(v)
    }
}

/// `f̂^{(i)}_t(a)` for the rigid flavour; needs `supp(a) ⊆ dom(f^i_t)`.
pub fn fhat_ri(m: &ScaffoldRI, t: NodeId, sign: Sign, a: &QVec) -> Result<QVec, QError> {
    let mut out = QVec::zero();
    for (x, q) in a.terms() {
        let y = m
            .f(t, sign, x)
            .ok_or(QError::OutsideDomain { node: t, elem: x })?;
        out.add_term(y, q);
    }
    Ok(out)
}

/// `f̂_t(a)` for the Hopfian flavour: defined on `X_{𝐧(t)}`, zero off `dom(f_t)`.
pub fn fhat_ho(m: &ScaffoldHO, t: NodeId, a: &QVec) -> Result<QVec, QError> {
    let n = m.tree().birth(t);
    let mut out = QVec::zero();
    for (x, q) in a.terms() {
        if !m.strata().in_stage(x, n) {
            return Err(QError::OutsideDomain { node: t, elem: x });
        }
        if let Some(y) = m.f(t, x) {
            out.add_term(y, q);
        }
    }
    Ok(out)
}

/// One-step images `f̂^i_t(a)` over all nodes and signs.
pub fn ri_neighbours(m: &ScaffoldRI, a: &QVec) -> BTreeSet<QVec> {
    let mut out = BTreeSet::new();
    for t in m.built_nodes() {
        for sign in Sign::BOTH {
            if let Ok(b) = fhat_ri(m, t, sign, a) {
                out.insert(b);
            }
        }
    }
    out
}

/// `a <_* b` in the rigid flavour: a chain of `f̂` steps raising `𝐧`.
pub fn less_star_ri(m: &ScaffoldRI, a: &QVec, b: &QVec) -> Result<bool, QError> {
    a.check_g0_plus()?;
    b.check_g0_plus()?;
    if a == b {
        return Ok(false);
    }
    let mut ca = a.coefficients();
    let mut cb = b.coefficients();
    ca.sort();
    cb.sort();
    if ca != cb {
        return Ok(false);
    }
    let target = b.birth(m.strata())?.expect("nonzero");
    let mut queue = VecDeque::from([a.clone()]);
    let mut seen = BTreeSet::from([a.clone()]);
    while let Some(cur) = queue.pop_front() {
        let n = cur.birth(m.strata())?.expect("nonzero");
        for next in ri_neighbours(m, &cur) {
            let nn = next.birth(m.strata())?.expect("nonzero");
            if nn <= n {
                continue;
            }
            if next == *b {
                return Ok(true);
            }
            if nn < target && seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(false)
}

/// The `𝓔` class of `a`, restricted to supports inside `X_{stage_bound}`,
/// with for every member a label carrying the support of `a` onto its own.
pub fn class_e_labelled(
    m: &ScaffoldRI,
    a: &QVec,
    stage_bound: usize,
) -> Result<BTreeMap<QVec, PathLabel>, QError> {
    a.check_g0_plus()?;
    let xs = a.support();
    let qs = a.coefficients();
    let mut prev: BTreeMap<Vec<Elem>, Option<(Vec<Elem>, NodeId, Sign)>> = BTreeMap::new();
    prev.insert(xs.clone(), None);
    let mut queue = VecDeque::from([xs.clone()]);
    while let Some(cur) = queue.pop_front() {
        for t in m.built_nodes() {
            for sign in Sign::BOTH {
                if let Some(next) = m.f_tuple(t, sign, &cur) {
                    if !prev.contains_key(&next) {
                        prev.insert(next.clone(), Some((cur.clone(), t, sign)));
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for ys in prev.keys() {
        if !ys.iter().all(|&y| m.strata().in_stage(y, stage_bound)) {
            continue;
        }
        let b = QVec::from_pairs(ys.iter().copied().zip(qs.iter().cloned()));
        if out.contains_key(&b) {
            continue;
        }
        let mut steps = Vec::new();
        let mut cur = ys.clone();
        while let Some(Some((p, t, sign))) = prev.get(&cur) {
            steps.push((*t, *sign));
            cur = p.clone();
        }
        steps.reverse();
        out.insert(b, PathLabel::new(steps));
    }
    Ok(out)
}

/// The orbit of `a` under all `f̂` steps. This is the class the tags are
/// constant on; it can be coarser than [`class_e_strict`], because a single
/// step may keep `𝐧` fixed (on the running example `f̂_{t1}(x0 + x2) = x1 + x0`).
pub fn class_e(m: &ScaffoldRI, a: &QVec, stage_bound: usize) -> Result<BTreeSet<QVec>, QError> {
    Ok(class_e_labelled(m, a, stage_bound)?.into_keys().collect())
}

/// The equivalence closure of `≤_*` through `a`: only steps that change `𝐧`
/// join two vectors.
pub fn class_e_strict(m: &ScaffoldRI, a: &QVec, stage_bound: usize) -> Result<BTreeSet<QVec>, QError> {
    a.check_g0_plus()?;
    let qs = a.coefficients();
    let start = a.support();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        let n = m.strata().tuple_birth(&cur)?;
        for t in m.built_nodes() {
            for sign in Sign::BOTH {
                if let Some(next) = m.f_tuple(t, sign, &cur) {
                    if m.strata().tuple_birth(&next)? != n && seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    Ok(seen
        .into_iter()
        .filter(|ys| ys.iter().all(|&y| m.strata().in_stage(y, stage_bound)))
        .map(|ys| QVec::from_pairs(ys.into_iter().zip(qs.iter().cloned())))
        .collect())
}

/// Applies a label to the support of `a`, keeping coefficients in place.
pub fn apply_label(m: &ScaffoldRI, label: &PathLabel, a: &QVec) -> Result<QVec, QError> {
    let ys = m.apply_path(label, &a.support())?;
    Ok(QVec::from_pairs(ys.into_iter().zip(a.coefficients())))
}

/// `{a : a ≤_* b}` in the Hopfian flavour, including `b`.
pub fn downset_ho(m: &ScaffoldHO, b: &QVec) -> Result<BTreeSet<QVec>, QError> {
    b.check_g0_plus()?;
    Ok(downset_ho_chains(m, b)?.into_keys().collect())
}

/// Every member of the downset with the node chain reaching it from `b`.
pub fn downset_ho_chains(m: &ScaffoldHO, b: &QVec) -> Result<BTreeMap<QVec, Vec<NodeId>>, QError> {
    let mut out = BTreeMap::from([(b.clone(), Vec::new())]);
    let mut queue = VecDeque::from([b.clone()]);
    while let Some(cur) = queue.pop_front() {
        let chain = out[&cur].clone();
        for t in m.built_nodes() {
            if let Ok(img) = fhat_ho(m, t, &cur) {
                if !img.is_zero() && !out.contains_key(&img) {
                    let mut c = chain.clone();
                    c.push(t);
                    out.insert(img.clone(), c);
                    queue.push_back(img);
                }
            }
        }
    }
    Ok(out)
}

/// `a <_* b` in the Hopfian flavour.
pub fn less_star_ho(m: &ScaffoldHO, a: &QVec, b: &QVec) -> Result<bool, QError> {
    a.check_g0_plus()?;
    b.check_g0_plus()?;
    Ok(a != b && downset_ho(m, b)?.contains(a))
}

/// Outcome of a purity probe for `n·g = a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PurityProbe {
    pub holds: bool,
    /// `a/n` when it lies in the ambient group.
    pub divisor: Option<QVec>,
}

/// Checks the purity implication at `(a, n)`: if `a/n` lies in the ambient
/// group then it must lie in `H`.
pub fn is_pure_witness(
    h: &[QVec],
    ambient: &[QVec],
    a: &QVec,
    n: u64,
    budget: usize,
) -> Result<PurityProbe, QError> {
    if n <= 1 {
        return Ok(PurityProbe {
            holds: true,
            divisor: Some(a.clone()),
        });
    }
    if h.len() + ambient.len() > budget {
        return Err(QError::BudgetExceeded(budget));
    }
    let g = a.scale(&BigRational::new(BigInt::one(), BigInt::from(n)));
    let in_ambient = crate::lattice::z_span_solve(ambient, &g).is_some();
    if !in_ambient {
        return Ok(PurityProbe {
            holds: true,
            divisor: None,
        });
    }
    let in_h = crate::lattice::z_span_solve(h, &g).is_some();
    Ok(PurityProbe {
        holds: in_h,
        divisor: Some(g),
    })
}

/// Sign of a rational as `-1`, `0` or `1`.
pub fn signum(q: &BigRational) -> i8 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaffold::ri::{build_ri, RiParams};
    use crate::tree::{chain_tree, Variant};

    fn running() -> ScaffoldRI {
        build_ri(&chain_tree(Variant::Ri, 1, true), &RiParams::default()).unwrap()
    }

    #[test]
    fn parse_and_print() {
        let v: QVec = "3/2*x0 + -1*x4".parse().unwrap();
        assert_eq!(v.to_string(), "3/2*x0 + -1*x4");
        let w: QVec = "x0 - 2*x3".parse().unwrap();
        assert_eq!(w, QVec::from_ints(&[(0, 1), (3, -2)]));
        assert_eq!("0".parse::<QVec>().unwrap(), QVec::zero());
        assert!("2*y3".parse::<QVec>().is_err());
    }

    #[test]
    fn arithmetic() {
        let x = QVec::basis(0);
        let y = QVec::basis(1);
        let s = &x + &y;
        assert_eq!(&s - &y, x);
        assert_eq!(&x + &QVec::zero(), x);
        assert_eq!(x.scale(&int(1)), x);
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn fhat_running() {
        let m = running();
        let a = QVec::from_ints(&[(0, 3)]);
        assert_eq!(fhat_ri(&m, 1, Sign::Plus, &a).unwrap(), QVec::from_ints(&[(1, 3)]));
        assert!(matches!(
            fhat_ri(&m, 1, Sign::Plus, &QVec::basis(3)),
            Err(QError::OutsideDomain { elem: 3, .. })
        ));
    }

    #[test]
    fn star_order_running() {
        let m = running();
        let (x0, x1, x3) = (QVec::basis(0), QVec::basis(1), QVec::basis(3));
        assert!(less_star_ri(&m, &x0, &x1).unwrap());
        assert!(!less_star_ri(&m, &x0, &x0).unwrap());
        assert!(!less_star_ri(&m, &x3, &x0).unwrap());
    }

    #[test]
    fn classes_running() {
        let m = running();
        let c: Vec<QVec> = class_e(&m, &QVec::basis(0), 1).unwrap().into_iter().collect();
        assert_eq!(c, vec![QVec::basis(0), QVec::basis(1), QVec::basis(2)]);
        let c2 = class_e(&m, &QVec::from_ints(&[(0, 2)]), 1).unwrap();
        assert_eq!(c2.len(), 3);
        assert!(c2.contains(&QVec::from_ints(&[(2, 2)])));
        assert_eq!(class_e(&m, &QVec::basis(3), 1).unwrap().len(), 1);
        let pair = QVec::from_ints(&[(0, 1), (2, 1)]);
        assert_eq!(class_e(&m, &pair, 1).unwrap().len(), 2);
        assert_eq!(class_e_strict(&m, &pair, 1).unwrap().len(), 1);
    }

    #[test]
    fn purity() {
        let x = QVec::basis(0);
        let two_x = QVec::from_ints(&[(0, 2)]);
        let probe = is_pure_witness(&[two_x.clone()], &[x.clone()], &two_x, 2, 100).unwrap();
        assert!(!probe.holds);
        assert_eq!(probe.divisor, Some(x.clone()));
        assert!(is_pure_witness(&[x.clone()], &[x.clone()], &two_x, 2, 100).unwrap().holds);
        assert!(is_pure_witness(&[two_x.clone()], &[x], &two_x, 1, 100).unwrap().holds);
    }
}
