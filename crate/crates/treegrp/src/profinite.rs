//! Finite windows of `∏_p K_p` with each `K_p` a finite abelian `p`-group.
//!
//! An element is a tuple of residues, one per cyclic factor of each window
//! prime; outside the window every coordinate is zero. Component maps,
//! divisibility witnesses, Bézout identities and endomorphism checks act on
//! this representation exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::g1::factorial;
use crate::lattice::{is_prime, mod_inverse};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} appears twice")]
    DuplicatePrime(u64),
    #[error("prime {0} is not in the window")]
    OutsideWindow(u64),
    #[error("component for {p} has {got} coordinates, the group has {want}")]
    Shape { p: u64, got: usize, want: usize },
    #[error("cannot parse {0}")]
    Parse(String),
    #[error("the generator image at ({p}, {index}) is not killed by its order")]
    InconsistentEndo { p: u64, index: usize },
    #[error("sample of {needed} elements exceeds the budget {budget}")]
    SampleBudget { needed: usize, budget: usize },
    #[error("n must be at least 2, got {0}")]
    SmallIndex(usize),
}

/// `⊕_i Z/p^{e_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinAbGroup {
    pub p: u64,
    pub exponents: Vec<u32>,
}

impl FinAbGroup {
    pub fn new(p: u64, exponents: Vec<u32>) -> Result<Self, ProfError> {
        if !is_prime(p) {
            return Err(ProfError::NotPrime(p));
        }
        Ok(FinAbGroup { p, exponents })
    }

    pub fn orders(&self) -> Vec<BigInt> {
        self.exponents.iter().map(|&e| BigInt::from(self.p).pow(e)).collect()
    }

    /// `p^{max e_i}`.
    pub fn exponent(&self) -> BigInt {
        BigInt::from(self.p).pow(self.exponents.iter().copied().max().unwrap_or(0))
    }

    pub fn size(&self) -> BigInt {
        self.orders().iter().product()
    }

    pub fn max_exponent(&self) -> u32 {
        self.exponents.iter().copied().max().unwrap_or(0)
    }

    /// Every element, in lexicographic order of coordinates.
    pub fn elements(&self) -> Vec<Vec<BigInt>> {
        let mut out = vec![Vec::new()];
        for o in self.orders() {
            let mut next = Vec::new();
            for v in &out {
                let mut c = BigInt::zero();
                while c < o {
                    let mut w = v.clone();
                    w.push(c.clone());
                    next.push(w);
                    c += 1;
                }
            }
            out = next;
        }
        out
    }
}

/// The window: finitely many primes, each with its `K_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfModel {
    groups: BTreeMap<u64, FinAbGroup>,
}

/// An element of the window model; missing primes are zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProfVec {
    comps: BTreeMap<u64, Vec<BigInt>>,
}

impl ProfVec {
    pub fn coords(&self, p: u64) -> Option<&[BigInt]> {
        self.comps.get(&p).map(Vec::as_slice)
    }

    pub fn components(&self) -> &BTreeMap<u64, Vec<BigInt>> {
        &self.comps
    }
}

impl ProfModel {
    pub fn new(groups: impl IntoIterator<Item = FinAbGroup>) -> Result<Self, ProfError> {
        let mut map = BTreeMap::new();
        for g in groups {
            let p = g.p;
            if map.insert(p, g).is_some() {
                return Err(ProfError::DuplicatePrime(p));
            }
        }
        Ok(ProfModel { groups: map })
    }

    pub fn primes(&self) -> Vec<u64> {
        self.groups.keys().copied().collect()
    }

    pub fn group(&self, p: u64) -> Option<&FinAbGroup> {
        self.groups.get(&p)
    }

    pub fn groups(&self) -> impl Iterator<Item = &FinAbGroup> {
        self.groups.values()
    }

    pub fn size(&self) -> BigInt {
        self.groups.values().map(FinAbGroup::size).product()
    }

    /// Largest exponent over the window, the bound past which components
    /// are unique.
    pub fn max_exponent(&self) -> u32 {
        self.groups.values().map(FinAbGroup::max_exponent).max().unwrap_or(0)
    }

    pub fn zero(&self) -> ProfVec {
        ProfVec {
            comps: self
                .groups
                .iter()
                .map(|(&p, g)| (p, vec![BigInt::zero(); g.exponents.len()]))
                .collect(),
        }
    }

    /// Reduces raw coordinates into range.
    pub fn element(&self, comps: BTreeMap<u64, Vec<BigInt>>) -> Result<ProfVec, ProfError> {
        let mut out = self.zero();
        for (p, cs) in comps {
            let g = self.groups.get(&p).ok_or(ProfError::OutsideWindow(p))?;
            if cs.len() != g.exponents.len() {
                return Err(ProfError::Shape {
                    p,
                    got: cs.len(),
                    want: g.exponents.len(),
                });
            }
            let reduced = cs.iter().zip(g.orders()).map(|(c, o)| c.mod_floor(&o)).collect();
            out.comps.insert(p, reduced);
        }
        Ok(out)
    }

    /// The generator `e_(p,i)` of the `i`-th cyclic factor of `K_p`.
    pub fn generator(&self, p: u64, i: usize) -> Result<ProfVec, ProfError> {
        let g = self.groups.get(&p).ok_or(ProfError::OutsideWindow(p))?;
        let mut cs = vec![BigInt::zero(); g.exponents.len()];
        cs[i] = BigInt::one();
        self.element([(p, cs)].into_iter().collect())
    }

    pub fn generators(&self) -> Vec<((u64, usize), ProfVec)> {
        self.groups
            .iter()
            .flat_map(|(&p, g)| (0..g.exponents.len()).map(move |i| (p, i)))
            .map(|(p, i)| ((p, i), self.generator(p, i).expect("window prime")))
            .collect()
    }

    fn zip_with(&self, a: &ProfVec, b: &ProfVec, f: impl Fn(&BigInt, &BigInt) -> BigInt) -> ProfVec {
        let mut out = self.zero();
        for (p, g) in &self.groups {
            let orders = g.orders();
            let za = vec![BigInt::zero(); orders.len()];
            let ca = a.comps.get(p).unwrap_or(&za);
            let cb = b.comps.get(p).unwrap_or(&za);
            let v = ca
                .iter()
                .zip(cb)
                .zip(&orders)
                .map(|((x, y), o)| f(x, y).mod_floor(o))
                .collect();
            out.comps.insert(*p, v);
        }
        out
    }

    pub fn add(&self, a: &ProfVec, b: &ProfVec) -> ProfVec {
        self.zip_with(a, b, |x, y| x + y)
    }

    pub fn sub(&self, a: &ProfVec, b: &ProfVec) -> ProfVec {
        self.zip_with(a, b, |x, y| x - y)
    }

    pub fn scale(&self, k: &BigInt, a: &ProfVec) -> ProfVec {
        self.zip_with(a, a, |x, _| k * x)
    }

    pub fn is_zero(&self, a: &ProfVec) -> bool {
        a.comps.values().flatten().all(Zero::is_zero)
    }

    /// `c_(a,p)`: the `p`-coordinate, zero off the window.
    pub fn component(&self, a: &ProfVec, p: u64) -> ProfVec {
        let mut out = self.zero();
        if let Some(cs) = a.comps.get(&p) {
            out.comps.insert(p, cs.clone());
        }
        out
    }

    /// Some `b` with `k · b = a`, if one exists.
    pub fn divide(&self, a: &ProfVec, k: &BigInt) -> Option<ProfVec> {
        if k.is_zero() {
            return self.is_zero(a).then(|| self.zero());
        }
        let mut out = self.zero();
        for (p, g) in &self.groups {
            let pb = BigInt::from(*p);
            let mut v = 0u32;
            let mut unit = k.abs();
            while unit.is_multiple_of(&pb) {
                unit /= &pb;
                v += 1;
            }
            if k.is_negative() {
                unit = -unit;
            }
            let mut coords = Vec::new();
            for (c, (o, &e)) in a.comps[p].iter().zip(g.orders().iter().zip(&g.exponents)) {
                // k = p^v u in Z/p^e: solvable iff p^min(v,e) | c.
                let pv = pb.pow(v.min(e));
                if !c.is_multiple_of(&pv) {
                    return None;
                }
                let inv = mod_inverse(&unit, o).expect("unit mod p^e");
                coords.push(((c / &pv) * inv).mod_floor(o));
            }
            out.comps.insert(*p, coords);
        }
        debug_assert!(self.scale(k, &out) == *a);
        Some(out)
    }

    pub fn random<R: Rng>(&self, rng: &mut R) -> ProfVec {
        let comps = self
            .groups
            .iter()
            .map(|(&p, g)| {
                let cs = g
                    .orders()
                    .iter()
                    .map(|o| {
                        let o: u64 = o.try_into().expect("desk-size order");
                        BigInt::from(rng.gen_range(0..o))
                    })
                    .collect();
                (p, cs)
            })
            .collect();
        ProfVec { comps }
    }

    /// Every element of the window, or `None` past the budget.
    pub fn all_elements(&self, budget: usize) -> Option<Vec<ProfVec>> {
        let size: usize = self.size().try_into().ok()?;
        if size > budget {
            return None;
        }
        let mut out = vec![self.zero()];
        for (p, g) in &self.groups {
            let elems = g.elements();
            let mut next = Vec::with_capacity(out.len() * elems.len());
            for v in &out {
                for e in &elems {
                    let mut w = v.clone();
                    w.comps.insert(*p, e.clone());
                    next.push(w);
                }
            }
            out = next;
        }
        Some(out)
    }

    pub fn parse_element(&self, s: &str) -> Result<ProfVec, ProfError> {
        let mut comps = BTreeMap::new();
        for tok in s.split_whitespace() {
            let bad = || ProfError::Parse(tok.to_string());
            let (p, cs) = tok.split_once(':').ok_or_else(bad)?;
            let p: u64 = p.parse().map_err(|_| bad())?;
            let cs: Vec<BigInt> = cs
                .split(',')
                .map(|c| c.trim().parse::<BigInt>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            comps.insert(p, cs);
        }
        self.element(comps)
    }

    pub fn show(&self, a: &ProfVec) -> String {
        a.comps
            .iter()
            .map(|(p, cs)| {
                let cs: Vec<String> = cs.iter().map(ToString::to_string).collect();
                format!("{p}:{}", cs.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromStr for ProfModel {
    type Err = ProfError;

    /// Lines `p: e1 e2 …` listing the cyclic orders `p^{e_i}` as prime
    /// powers, e.g. `2: 4 8`. Blank lines and `#` comments are skipped.
    fn from_str(s: &str) -> Result<Self, ProfError> {
        let mut groups = Vec::new();
        for line in s.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || ProfError::Parse(line.to_string());
            let (p, orders) = line.split_once(':').ok_or_else(bad)?;
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let mut exps = Vec::new();
            for o in orders.split_whitespace() {
                let mut o: u64 = o.parse().map_err(|_| bad())?;
                let mut e = 0;
                while o > 1 && o % p == 0 {
                    o /= p;
                    e += 1;
                }
                if o != 1 || e == 0 {
                    return Err(bad());
                }
                exps.push(e);
            }
            groups.push(FinAbGroup::new(p, exps)?);
        }
        ProfModel::new(groups)
    }
}

impl fmt::Display for ProfModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, g) in &self.groups {
            let os: Vec<String> = g.orders().iter().map(ToString::to_string).collect();
            writeln!(f, "{p}: {}", os.join(" "))?;
        }
        Ok(())
    }
}

/// Candidates `c ∈ K_p` with `p^n | (a − c)`, by exhaustion over `K_p`.
pub fn component_candidates(model: &ProfModel, a: &ProfVec, p: u64, n: u32) -> Vec<ProfVec> {
    let Some(g) = model.group(p) else {
        return vec![model.zero()];
    };
    let pn = BigInt::from(p).pow(n);
    g.elements()
        .into_iter()
        .map(|cs| model.element([(p, cs)].into_iter().collect()).expect("shape"))
        .filter(|c| model.divide(&model.sub(a, c), &pn).is_some())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSumWitness {
    pub n: usize,
    pub difference: ProfVec,
    pub quotient: ProfVec,
    pub holds: bool,
}

/// `(n−1)! | a − Σ_{p<n} c_(a,p)`. The quotient is assembled prime by
/// prime: below `n` the difference vanishes, and at `q ≥ n` the factorial
/// is a unit whose inverse comes from the Bézout identity
/// `u · (n−1)! + v · q^e = 1`.
pub fn check_partial_sum_divisibility(
    model: &ProfModel,
    a: &ProfVec,
    n: usize,
) -> Result<PartialSumWitness, ProfError> {
    if n < 2 {
        return Err(ProfError::SmallIndex(n));
    }
    let k = factorial(n - 1);
    let mut diff = a.clone();
    for p in model.primes().into_iter().filter(|&p| (p as usize) < n) {
        diff = model.sub(&diff, &model.component(a, p));
    }
    let mut quotient = model.zero();
    for (p, g) in &model.groups {
        let mut coords = Vec::new();
        for (c, o) in diff.comps[p].iter().zip(g.orders()) {
            if (*p as usize) < n {
                coords.push(BigInt::zero());
                continue;
            }
            let e = k.extended_gcd(&o);
            debug_assert!(e.gcd.is_one());
            coords.push((c * e.x).mod_floor(&o));
        }
        quotient.comps.insert(*p, coords);
    }
    let holds = model.scale(&k, &quotient) == diff;
    Ok(PartialSumWitness {
        n,
        difference: diff,
        quotient,
        holds,
    })
}

/// `ℓ_p` with `Σ ℓ_p · k / p^m = 1`, `k = Π p^m`, by iterated extended gcd.
pub fn bezout_witnesses(primes: &[u64], m: u32) -> Result<BTreeMap<u64, BigInt>, ProfError> {
    for (i, &p) in primes.iter().enumerate() {
        if !is_prime(p) {
            return Err(ProfError::NotPrime(p));
        }
        if primes[..i].contains(&p) {
            return Err(ProfError::DuplicatePrime(p));
        }
    }
    let k: BigInt = primes.iter().map(|&p| BigInt::from(p).pow(m)).product();
    let cofactors: Vec<BigInt> = primes.iter().map(|&p| &k / BigInt::from(p).pow(m)).collect();
    // Running identity g = Σ coeffs_i · cofactor_i.
    let mut g = BigInt::zero();
    let mut coeffs: Vec<BigInt> = Vec::new();
    for c in &cofactors {
        if coeffs.is_empty() {
            g = c.clone();
            coeffs.push(BigInt::one());
            continue;
        }
        let e = g.extended_gcd(c);
        for x in coeffs.iter_mut() {
            *x *= &e.x;
        }
        coeffs.push(e.y);
        g = e.gcd;
    }
    debug_assert!(primes.is_empty() || g.is_one());
    Ok(primes.iter().copied().zip(coeffs).collect())
}

/// `Σ ℓ_p · k / p^m`, evaluated directly.
pub fn bezout_value(ell: &BTreeMap<u64, BigInt>, m: u32) -> BigInt {
    let k: BigInt = ell.keys().map(|&p| BigInt::from(p).pow(m)).product();
    ell.iter()
        .map(|(&p, l)| l * (&k / BigInt::from(p).pow(m)))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbedReport {
    pub window: Vec<u64>,
    pub sampled: usize,
    pub injective: bool,
    /// Two combinations of the generators, with different elements and the
    /// same components on the window.
    pub counterexample: Option<(Vec<i64>, Vec<i64>)>,
    /// Pairs of combinations that are already equal as elements.
    pub expected_equal: usize,
}

/// Tests `a ↦ (c_(a,p))_{p ∈ window}` for injectivity on the combinations
/// `Σ n_i g_i` with `|n_i| ≤ coeff_bound`.
pub fn embed_check(
    model: &ProfModel,
    window: &[u64],
    generators: &[ProfVec],
    coeff_bound: i64,
    sample_budget: usize,
) -> Result<EmbedReport, ProfError> {
    let side = (2 * coeff_bound + 1) as usize;
    let needed = side
        .checked_pow(generators.len() as u32)
        .unwrap_or(usize::MAX);
    if needed > sample_budget {
        return Err(ProfError::SampleBudget {
            needed,
            budget: sample_budget,
        });
    }
    let project = |a: &ProfVec| -> Vec<(u64, Vec<BigInt>)> {
        window
            .iter()
            .map(|&p| (p, a.comps.get(&p).cloned().unwrap_or_default()))
            .collect()
    };
    let mut seen: BTreeMap<Vec<(u64, Vec<BigInt>)>, (Vec<i64>, ProfVec)> = BTreeMap::new();
    let mut combo = vec![-coeff_bound; generators.len()];
    let mut expected_equal = 0;
    let mut counterexample = None;
    let mut sampled = 0;
    loop {
        let mut a = model.zero();
        for (g, &n) in generators.iter().zip(&combo) {
            a = model.add(&a, &model.scale(&BigInt::from(n), g));
        }
        sampled += 1;
        let key = project(&a);
        match seen.get(&key) {
            Some((_, b)) if *b == a => expected_equal += 1,
            Some((other, _)) => {
                if counterexample.is_none() {
                    counterexample = Some((other.clone(), combo.clone()));
                }
            }
            None => {
                seen.insert(key, (combo.clone(), a));
            }
        }
        let mut i = 0;
        loop {
            if i == combo.len() {
                return Ok(EmbedReport {
                    window: window.to_vec(),
                    sampled,
                    injective: counterexample.is_none(),
                    counterexample,
                    expected_equal,
                });
            }
            combo[i] += 1;
            if combo[i] <= coeff_bound {
                break;
            }
            combo[i] = -coeff_bound;
            i += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSum {
    pub n: usize,
    pub sum: ProfVec,
    /// Largest `j ≤ cap` with `j! | a − s_n`; `cap` when the difference is 0.
    pub index: usize,
}

pub fn cauchy_partial_sums(model: &ProfModel, a: &ProfVec, big_n: usize) -> Vec<PartialSum> {
    let cap = big_n.max(1);
    (1..=big_n)
        .map(|n| {
            let mut s = model.zero();
            for p in model.primes().into_iter().filter(|&p| (p as usize) < n) {
                s = model.add(&s, &model.component(a, p));
            }
            let d = model.sub(a, &s);
            let index = (1..=cap)
                .take_while(|&j| model.divide(&d, &factorial(j)).is_some())
                .last()
                .unwrap_or(0);
            PartialSum { n, sum: s, index }
        })
        .collect()
}

/// An endomorphism given on the generators `e_(p,i)`, with optional
/// overridden values on specific elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndoTable {
    pub images: BTreeMap<(u64, usize), ProfVec>,
    pub overrides: BTreeMap<ProfVec, ProfVec>,
}

impl EndoTable {
    pub fn scalar(model: &ProfModel, k: i64) -> Self {
        EndoTable {
            images: model
                .generators()
                .into_iter()
                .map(|(key, g)| (key, model.scale(&BigInt::from(k), &g)))
                .collect(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn identity(model: &ProfModel) -> Self {
        Self::scalar(model, 1)
    }

    /// Each image is killed by the order of its generator.
    pub fn check_consistent(&self, model: &ProfModel) -> Result<(), ProfError> {
        for (&(p, i), img) in &self.images {
            let g = model.group(p).ok_or(ProfError::OutsideWindow(p))?;
            let order = BigInt::from(p).pow(g.exponents[i]);
            if !model.is_zero(&model.scale(&order, img)) {
                return Err(ProfError::InconsistentEndo { p, index: i });
            }
        }
        Ok(())
    }

    pub fn apply(&self, model: &ProfModel, a: &ProfVec) -> ProfVec {
        if let Some(v) = self.overrides.get(a) {
            return v.clone();
        }
        let mut out = model.zero();
        for (p, cs) in &a.comps {
            for (i, c) in cs.iter().enumerate() {
                if let Some(img) = self.images.get(&(*p, i)) {
                    out = model.add(&out, &model.scale(c, img));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentCheck {
    pub holds: bool,
    /// `π(c_(a,p))`.
    pub lhs: ProfVec,
    /// `c_(π(a),p)`.
    pub rhs: ProfVec,
}

pub fn endo_respects_components(
    model: &ProfModel,
    pi: &EndoTable,
    a: &ProfVec,
    p: u64,
) -> Result<ComponentCheck, ProfError> {
    pi.check_consistent(model)?;
    let lhs = pi.apply(model, &model.component(a, p));
    let rhs = model.component(&pi.apply(model, a), p);
    Ok(ComponentCheck {
        holds: lhs == rhs,
        lhs,
        rhs,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonCoHopfCheck {
    pub homomorphism: bool,
    pub fixed_point_free: bool,
    pub z_avoids: bool,
    /// First failing element, per failed clause.
    pub locus: Option<String>,
    pub exhaustive: bool,
}

impl NonCoHopfCheck {
    pub fn holds(&self) -> bool {
        self.homomorphism && self.fixed_point_free && self.z_avoids
    }
}

/// Checks that `f` is a homomorphism, `f(x) ≠ x` for `x ≠ 0`, and
/// `z ≠ x − f(x)` for every `x`, by exhaustion over the window model.
pub fn noncohopf_witness_check(
    model: &ProfModel,
    f: &EndoTable,
    z: &ProfVec,
    budget: usize,
) -> Result<NonCoHopfCheck, ProfError> {
    let all = model.all_elements(budget).ok_or_else(|| ProfError::SampleBudget {
        needed: model.size().try_into().unwrap_or(usize::MAX),
        budget,
    })?;
    let mut out = NonCoHopfCheck {
        homomorphism: f.check_consistent(model).is_ok(),
        fixed_point_free: true,
        z_avoids: true,
        locus: None,
        exhaustive: true,
    };
    let img: BTreeMap<&ProfVec, ProfVec> = all.iter().map(|x| (x, f.apply(model, x))).collect();
    'hom: for x in &all {
        for y in &all {
            let s = model.add(x, y);
            if img[&s] != model.add(&img[x], &img[y]) {
                out.homomorphism = false;
                out.locus.get_or_insert(format!("f({} + {})", model.show(x), model.show(y)));
                break 'hom;
            }
        }
    }
    for x in &all {
        if !model.is_zero(x) && img[x] == *x {
            out.fixed_point_free = false;
            out.locus.get_or_insert(format!("f({0}) = {0}", model.show(x)));
            break;
        }
    }
    for x in &all {
        if model.sub(x, &img[x]) == *z {
            out.z_avoids = false;
            out.locus.get_or_insert(format!("z = x - f(x) at x = {}", model.show(x)));
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_model_and_elements() {
        let m: ProfModel = "2: 4 8\n3: 9 # comment\n".parse().unwrap();
        assert_eq!(m.group(2).unwrap().exponents, vec![2, 3]);
        let a = m.parse_element("2:5,9 3:10").unwrap();
        assert_eq!(m.show(&a), "2:1,1 3:1");
        assert!("2: 6".parse::<ProfModel>().is_err());
        assert_eq!(m.to_string(), "2: 4 8\n3: 9\n");
    }

    #[test]
    fn divide_in_cyclic_groups() {
        let m: ProfModel = "2: 4\n3: 9".parse().unwrap();
        let a = m.parse_element("2:2 3:3").unwrap();
        let b = m.divide(&a, &BigInt::from(2)).unwrap();
        assert_eq!(m.scale(&BigInt::from(2), &b), a);
        assert!(m.divide(&a, &BigInt::from(4)).is_none());
        assert!(m.divide(&a, &BigInt::from(3)).is_some());
        assert!(m.divide(&a, &BigInt::from(9)).is_none());
    }
}
