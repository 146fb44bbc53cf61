//! Endomorphism witnesses and bounded searches.
//!
//! A branch of the tree gives the rigid flavour a free automorphism (the
//! union of the maps along the branch) and the Hopfian flavour an onto,
//! non-injective endomorphism. On finite well-founded instances the searches
//! run over the candidate shapes that survive the structural reductions and
//! check them against certified divisibilities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::g1::{factorial, inv_power, is_stage_coefficient, Divisibility, G1Error, G1Ho, G1Ri, PCert};
use crate::lattice::{is_prime, rref, val_int};
use crate::qvec::{downset_ho, fhat_ho, QError, QVec};
use crate::scaffold::ri::ScaffoldRI;
use crate::scaffold::{Elem, ScaffoldError};
use crate::tree::{NodeId, TreeError, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndoError {
    #[error("the tree has no branch")]
    NoBranch,
    #[error("the branch or scaffold is shorter than depth {0}")]
    TooShallow(usize),
    #[error("ontoness check needs more than {0} steps")]
    OntoCheckBudget(usize),
    #[error("search needs more than {0} candidates")]
    SearchBudget(usize),
    #[error(transparent)]
    G1(#[from] G1Error),
    #[error(transparent)]
    Vector(#[from] QError),
    #[error(transparent)]
    Scaffold(#[from] ScaffoldError),
}

impl From<TreeError> for EndoError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::NoBranch => EndoError::NoBranch,
            _ => EndoError::TooShallow(0),
        }
    }
}

/// A homomorphism given on basis elements, extended linearly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialEndo {
    pub flavor: Variant,
    pub images: BTreeMap<Elem, QVec>,
    /// `Some(q)` when the map is `q` times a basis permutation.
    pub scalar: Option<BigRational>,
    pub defined_through: usize,
}

impl PartialEndo {
    /// `None` when some support element has no recorded image.
    pub fn apply(&self, v: &QVec) -> Option<QVec> {
        let mut out = QVec::zero();
        for (x, q) in v.terms() {
            out = &out + &self.images.get(&x)?.scale(q);
        }
        Some(out)
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().all(|(&x, v)| *v == QVec::basis(x))
    }

    pub fn is_minus_identity(&self) -> bool {
        self.images.iter().all(|(&x, v)| *v == -&QVec::basis(x))
    }

    /// Rank of the image of the recorded basis.
    pub fn rank(&self) -> usize {
        rref(&self.images.values().cloned().collect::<Vec<_>>()).rows.len()
    }
}

impl fmt::Display for PartialEndo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self
            .images
            .iter()
            .map(|(x, v)| format!("x{x}->{v}"))
            .collect();
        write!(f, "{}", pairs.join("; "))
    }
}

/// One named exact check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail: detail.into(),
    }
}

fn write_checks(out: &mut String, checks: &[Check]) -> fmt::Result {
    for c in checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        if c.detail.is_empty() {
            writeln!(out, "check {}: {status}", c.name)?;
        } else {
            writeln!(out, "check {}: {status} ({})", c.name, c.detail)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Rigid flavour: the branch automorphism

#[derive(Clone, Debug)]
pub struct BranchAuto {
    pub depth: usize,
    pub forward: PartialEndo,
    pub inverse: PartialEndo,
    /// Elements of `X_depth` outside the domain of the union.
    pub outside: Vec<Elem>,
    pub checks: Vec<Check>,
}

impl BranchAuto {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for BranchAuto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "branch-automorphism depth {}", self.depth)?;
        writeln!(out, "map {}", self.forward)?;
        let outside: Vec<String> = self.outside.iter().map(|x| format!("x{x}")).collect();
        writeln!(out, "outside-domain {}", outside.join(" "))?;
        write_checks(&mut out, &self.checks)?;
        f.write_str(&out)
    }
}

/// `f̂ = ⋃_{n ≤ depth} f̂_{t_n}` along the branch, on `dom(f_{t_depth})`.
pub fn branch_automorphism_ri(m: &ScaffoldRI, depth: usize) -> Result<BranchAuto, EndoError> {
    let tree = m.tree();
    let chain = tree.branch().ok_or(EndoError::NoBranch)?;
    if chain.len() <= depth || depth > m.last_stage() || depth == 0 {
        return Err(EndoError::TooShallow(depth));
    }
    let mut fwd: BTreeMap<Elem, Elem> = BTreeMap::new();
    let mut bwd: BTreeMap<Elem, Elem> = BTreeMap::new();
    let mut increasing = true;
    for &t in &chain[..=depth] {
        for (x, y) in m.map(t).pairs() {
            if fwd.insert(x, y).is_some_and(|old| old != y) {
                increasing = false;
            }
            if bwd.insert(y, x).is_some_and(|old| old != x) {
                increasing = false;
            }
        }
    }
    let images = |map: &BTreeMap<Elem, Elem>| -> BTreeMap<Elem, QVec> {
        map.iter().map(|(&x, &y)| (x, QVec::basis(y))).collect()
    };
    let forward = PartialEndo {
        flavor: Variant::Ri,
        images: images(&fwd),
        scalar: Some(BigRational::one()),
        defined_through: depth,
    };
    let inverse = PartialEndo {
        flavor: Variant::Ri,
        images: images(&bwd),
        scalar: Some(BigRational::one()),
        defined_through: depth,
    };
    let mut checks = vec![check("maps increase along the branch", increasing, "")];
    let mut bij = true;
    let mut detail = String::new();
    let top = depth.saturating_sub(2);
    for n in 0..=top {
        for x in m.strata().upto(n) {
            let there = fwd.get(&x).and_then(|y| bwd.get(y)) == Some(&x);
            let back = bwd.get(&x).and_then(|y| fwd.get(y)) == Some(&x);
            if !(there && back) && bij {
                bij = false;
                detail = format!("x{x} at stage {n}");
            }
        }
    }
    checks.push(check(
        &format!("bijection on X_n for n <= {top}"),
        bij,
        detail,
    ));
    let injective = fwd.len() == bwd.len();
    checks.push(check("permutes the basis", injective, ""));
    let moved = fwd.iter().find(|(x, y)| x != y);
    checks.push(check(
        "differs from id and -id",
        moved.is_some(),
        moved.map(|(x, y)| format!("x{x} -> x{y}")).unwrap_or_default(),
    ));
    let outside: Vec<Elem> = m
        .strata()
        .upto(depth)
        .into_iter()
        .filter(|x| !fwd.contains_key(x))
        .collect();
    Ok(BranchAuto {
        depth,
        forward,
        inverse,
        outside,
        checks,
    })
}

/// Checks that the automorphism carries each certified `p^m | a` to a
/// certified `p^m | f̂(a)`. Returns the number of instances checked.
pub fn check_divisibility_preservation(
    g1: &G1Ri<'_>,
    auto: &BranchAuto,
    samples: &[(QVec, u64, u32)],
) -> Result<Result<usize, String>, EndoError> {
    let mut checked = 0;
    for (a, p, k) in samples {
        let Divisibility::True(cert) = g1.divides(a, *p, *k)? else {
            continue;
        };
        if g1.verify(&cert).is_err() {
            return Ok(Err(format!("source certificate for {a} failed replay")));
        }
        let Some(b) = auto.forward.apply(a) else {
            continue;
        };
        match g1.divides(&b, *p, *k)? {
            Divisibility::True(c) if g1.verify(&c).is_ok() => checked += 1,
            _ => return Ok(Err(format!("{p}^{k} | {a} but not {p}^{k} | {b}"))),
        }
    }
    Ok(Ok(checked))
}

// ---------------------------------------------------------------------------
// Hopfian flavour: the branch endomorphism

#[derive(Clone, Debug)]
pub struct HopfWitness {
    pub depth: usize,
    pub map: PartialEndo,
    /// Stage whose generators are hit.
    pub n0: usize,
    /// `(generator, preimage)` pairs; preimages carry step certificates.
    pub preimages: Vec<(QVec, QVec)>,
    pub kernel: QVec,
    pub kernel_stage: usize,
    pub checks: Vec<Check>,
}

impl HopfWitness {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for HopfWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "hopfian-witness depth {}", self.depth)?;
        writeln!(out, "map {}", self.map)?;
        writeln!(out, "onto-stage {}", self.n0)?;
        for (g, c) in &self.preimages {
            writeln!(out, "preimage {g} <- {c}")?;
        }
        writeln!(out, "kernel {} (stage {})", self.kernel, self.kernel_stage)?;
        write_checks(&mut out, &self.checks)?;
        f.write_str(&out)
    }
}

/// The generators of `G_(1,n0)` that the clause-(d) route can reach through
/// stage `n0 + 1`: the basis of `X_{n0}` and `p^{-m} b` with `b ≤_* a_p`,
/// `supp(b) ⊆ X_{n0}` of size at most the tuple cap, `p ≤ n0+1`,
/// `p^m | (n0+1)!` and coefficients in the stage pattern.
pub fn stage_generators_ho(g1: &G1Ho<'_>, n0: usize) -> Result<Vec<QVec>, EndoError> {
    let m = g1.scaffold();
    let n = n0 + 1;
    let mut out: Vec<QVec> = m.strata().upto(n0).into_iter().map(QVec::basis).collect();
    let fact = factorial(n);
    for p in (2..=n as u64).filter(|&p| is_prime(p)) {
        let Ok(down) = g1.g1p_generators(p) else { continue };
        for b in down {
            let fits = b.len() <= m.tuple_cap()
                && b.support().iter().all(|&x| m.strata().in_stage(x, n0))
                && b.terms().all(|(_, q)| is_stage_coefficient(q, n));
            if !fits {
                continue;
            }
            for k in 1..=val_int(&fact, &BigInt::from(p)) {
                out.push(b.scale(&inv_power(p, k)));
            }
        }
    }
    Ok(out)
}

pub fn hopfian_witness(g1: &G1Ho<'_>, depth: usize, budget: usize) -> Result<HopfWitness, EndoError> {
    let m = g1.scaffold();
    let tree = m.tree();
    let chain = tree.branch().ok_or(EndoError::NoBranch)?;
    if chain.len() <= depth || depth > m.last_stage() || depth == 0 {
        return Err(EndoError::TooShallow(depth));
    }
    let top = chain[depth];
    let dom_stage = tree.birth(top);
    let mut images = BTreeMap::new();
    for x in m.strata().upto(dom_stage) {
        images.insert(x, fhat_ho(m, top, &QVec::basis(x))?);
    }
    let map = PartialEndo {
        flavor: Variant::Ho,
        images,
        scalar: None,
        defined_through: depth,
    };
    let mut checks = Vec::new();

    // The maps along the branch agree where both are defined.
    let mut consistent = true;
    let mut detail = String::new();
    for w in chain[..=depth].windows(2) {
        let (s, t) = (w[0], w[1]);
        for x in m.strata().upto(tree.birth(s)) {
            let a = fhat_ho(m, s, &QVec::basis(x))?;
            let b = fhat_ho(m, t, &QVec::basis(x))?;
            if a != b && consistent {
                consistent = false;
                detail = format!("x{x}");
            }
        }
    }
    checks.push(check("additively consistent along the branch", consistent, detail));

    // Ontoness on the stage-n0 generators through the witness tuples of `top`.
    let n0 = dom_stage - 1;
    let gens = stage_generators_ho(g1, n0)?;
    if gens.len() > budget {
        return Err(EndoError::OntoCheckBudget(budget));
    }
    let mut preimages = Vec::new();
    let mut onto = true;
    let mut detail = String::new();
    for g in &gens {
        match preimage_via_witness(g1, top, g)? {
            Some(c) => preimages.push((g.clone(), c)),
            None => {
                if onto {
                    detail = format!("no preimage for {g}");
                }
                onto = false;
            }
        }
    }
    checks.push(check(
        &format!("onto the {} generators of stage {n0}", gens.len()),
        onto,
        detail,
    ));

    // A clause-(h) filler at a branch stage.
    let mut kernel = None;
    for (d, &t) in chain[..=depth].iter().enumerate().skip(1) {
        let n = tree.birth(t);
        let covered: BTreeSet<Elem> = m
            .new_nodes(n)
            .iter()
            .flat_map(|&s| m.map(s).keys().copied().collect::<Vec<_>>())
            .collect();
        if let Some(x) = m
            .strata()
            .new_at(n)
            .into_iter()
            .find(|x| !covered.contains(x))
        {
            let dead = chain[d..=depth]
                .iter()
                .all(|&s| fhat_ho(m, s, &QVec::basis(x)).is_ok_and(|v| v.is_zero()));
            kernel = Some((QVec::basis(x), n, dead));
            break;
        }
    }
    let (kernel, kernel_stage, dead) =
        kernel.ok_or(EndoError::TooShallow(depth))?;
    checks.push(check(
        "nonzero kernel element",
        dead && !kernel.is_zero(),
        format!("{kernel}"),
    ));
    Ok(HopfWitness {
        depth,
        map,
        n0,
        preimages,
        kernel,
        kernel_stage,
        checks,
    })
}

/// `c = p^{-m} Σ q_ℓ z_ℓ` over the witness tuple of `supp(g)` at `top`,
/// certified in `G_1` and mapped onto `g` exactly.
fn preimage_via_witness(g1: &G1Ho<'_>, top: NodeId, g: &QVec) -> Result<Option<QVec>, EndoError> {
    let m = g1.scaffold();
    let n = m.tree().birth(top);
    let xs = g.support();
    let Some(zs) = m.witness(n, top, &xs) else {
        return Ok(None);
    };
    let den = g.denominator();
    let c = QVec::from_pairs(zs.iter().copied().zip(g.coefficients()));
    if fhat_ho(m, top, &c)? != *g {
        return Ok(None);
    }
    if den.is_one() {
        return Ok(Some(c));
    }
    // g = p^{-k} b with a single prime p.
    let primes = crate::lattice::prime_factors(&den);
    if primes.len() != 1 {
        return Ok(None);
    }
    let p: u64 = primes[0].clone().try_into().unwrap_or(0);
    let k = val_int(&den, &primes[0]);
    let base = c.scale(&BigRational::from_integer(den.clone()));
    match g1.p_member(&base, p, k, n)? {
        Some(PCert::Step(_)) | Some(PCert::Base { .. }) => Ok(Some(c)),
        None => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// Searches

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub candidate: String,
    pub filter: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub survivors: Vec<PartialEndo>,
    pub rejections: Vec<Rejection>,
    pub candidates: usize,
    /// How often the sum-zero filter rejected a candidate that the earlier
    /// filters let through.
    pub sum_zero_hits: usize,
}

impl fmt::Display for SearchOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "candidates {}", self.candidates)?;
        writeln!(out, "survivors {}", self.survivors.len())?;
        for s in &self.survivors {
            writeln!(out, "  survivor {s}")?;
        }
        writeln!(out, "sum-zero-hits {}", self.sum_zero_hits)?;
        for r in &self.rejections {
            writeln!(out, "reject [{}] {}: {}", r.filter, r.candidate, r.detail)?;
        }
        f.write_str(&out)
    }
}

fn permutations(items: &[Elem]) -> Vec<Vec<Elem>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Scalars `1, −1, 2, −2, …` up to the bound.
fn scalars(bound: u32) -> Vec<i64> {
    (1..=bound as i64).flat_map(|q| [q, -q]).collect()
}

/// Candidates `x ↦ q·g(x)` with `g` permuting each `E_1` class inside
/// `X_{stage_bound}`, filtered by ontoness onto the basis (`q^{-1} g^{-1}(x)
/// ∈ G_1`), divisibility preservation on certified pairs `p_a | a` for `a`
/// among `x`, `x + y`, `x − y`, and the sum-zero condition on images of
/// `x_1 − x_2`.
pub fn rigid_search(
    g1: &G1Ri<'_>,
    stage_bound: usize,
    coeff_bound: u32,
    budget: usize,
) -> Result<SearchOutcome, EndoError> {
    let m = g1.scaffold();
    let xs = m.strata().upto(stage_bound);
    let xset: BTreeSet<Elem> = xs.iter().copied().collect();
    let mut classes: Vec<Vec<Elem>> = Vec::new();
    let mut seen = BTreeSet::new();
    for &x in &xs {
        if seen.contains(&x) {
            continue;
        }
        let c: Vec<Elem> = m
            .e1_class(x)?
            .into_iter()
            .filter(|y| xset.contains(y))
            .collect();
        seen.extend(c.iter().copied());
        classes.push(c);
    }
    let perms: Vec<Vec<Vec<Elem>>> = classes.iter().map(|c| permutations(c)).collect();
    let total: usize = perms.iter().map(Vec::len).product::<usize>() * scalars(coeff_bound).len();
    if total > budget {
        return Err(EndoError::SearchBudget(budget));
    }

    // Certified pairs: (a, p_a) with p_a | a in G_1.
    let coeffs = g1.tags().params().coeff_bound as i64;
    let mut samples: Vec<QVec> = Vec::new();
    for &x in &xs {
        for c in (1..=coeffs).flat_map(|c| [c, -c]) {
            samples.push(QVec::from_ints(&[(x, c)]));
        }
    }
    for (i, &x) in xs.iter().enumerate() {
        for &y in &xs[i + 1..] {
            samples.push(QVec::from_ints(&[(x, 1), (y, 1)]));
            samples.push(QVec::from_ints(&[(x, 1), (y, -1)]));
        }
    }
    let mut certified = Vec::new();
    for a in samples {
        let Ok(p) = g1.tags().tag(&a) else { continue };
        if let Divisibility::True(c) = g1.divides(&a, p, 1)? {
            if g1.verify(&c).is_ok() {
                certified.push((a, p));
            }
        }
    }

    let mut cache = MemberCache {
        g1,
        known: BTreeMap::new(),
    };
    let mut survivors = Vec::new();
    let mut rejections = Vec::new();
    let mut sum_zero_hits = 0;
    let mut idx = vec![0usize; perms.len()];
    let mut candidates = 0;
    loop {
        let mut g: BTreeMap<Elem, Elem> = BTreeMap::new();
        for (c, (ps, &i)) in classes.iter().zip(perms.iter().zip(&idx)) {
            for (x, y) in c.iter().zip(&ps[i]) {
                g.insert(*x, *y);
            }
        }
        let ginv: BTreeMap<Elem, Elem> = g.iter().map(|(&x, &y)| (y, x)).collect();
        for q in scalars(coeff_bound) {
            candidates += 1;
            let qr = BigRational::from_integer(BigInt::from(q));
            let endo = PartialEndo {
                flavor: Variant::Ri,
                images: g.iter().map(|(&x, &y)| (x, QVec::basis(y).scale(&qr))).collect(),
                scalar: Some(qr.clone()),
                defined_through: stage_bound,
            };
            let name = describe_candidate(&g, q);
            if let Some(r) = rigid_filters(&mut cache, &endo, &ginv, &qr, &certified)? {
                rejections.push(Rejection {
                    candidate: name,
                    filter: r.0,
                    detail: r.1,
                });
                continue;
            }
            // Sum-zero: images of x_1 − x_2 inside G_(1, p_{x_1 − x_2}).
            let mut sum_zero_ok = true;
            for (a, _) in &certified {
                let coeffs = a.coefficients();
                if coeffs.len() == 2 && coeffs[0] == -coeffs[1].clone() {
                    let img = endo.apply(a).expect("recorded basis");
                    let s: BigRational = img.coefficients().into_iter().sum();
                    if !s.is_zero() {
                        sum_zero_ok = false;
                    }
                }
            }
            if !sum_zero_ok {
                sum_zero_hits += 1;
                rejections.push(Rejection {
                    candidate: name,
                    filter: "sum-zero",
                    detail: "coefficients of an image of x1 - x2 do not sum to 0".into(),
                });
                continue;
            }
            survivors.push(endo);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(SearchOutcome {
                    survivors,
                    rejections,
                    candidates,
                    sum_zero_hits,
                });
            }
            idx[k] += 1;
            if idx[k] < perms[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn describe_candidate(g: &BTreeMap<Elem, Elem>, q: i64) -> String {
    let moved: Vec<String> = g
        .iter()
        .filter(|(x, y)| x != y)
        .map(|(x, y)| format!("x{x}->x{y}"))
        .collect();
    if moved.is_empty() {
        format!("{q}*id")
    } else {
        format!("{q}*[{}]", moved.join(","))
    }
}

type FilterFailure = (&'static str, String);

/// Membership answers in `G_1`; candidates ask about the same vectors many
/// times over.
struct MemberCache<'g, 'a> {
    g1: &'g G1Ri<'a>,
    known: BTreeMap<QVec, bool>,
}

impl MemberCache<'_, '_> {
    fn member(&mut self, v: &QVec) -> Result<bool, EndoError> {
        if let Some(&b) = self.known.get(v) {
            return Ok(b);
        }
        let b = self.g1.member(v)?.is_true();
        self.known.insert(v.clone(), b);
        Ok(b)
    }
}

fn rigid_filters(
    g1: &mut MemberCache<'_, '_>,
    endo: &PartialEndo,
    ginv: &BTreeMap<Elem, Elem>,
    q: &BigRational,
    certified: &[(QVec, u64)],
) -> Result<Option<FilterFailure>, EndoError> {
    // Onto: each basis vector has the preimage q^{-1} g^{-1}(x) in G_1.
    let qinv = q.recip();
    for (&x, &y) in ginv {
        let pre = QVec::basis(y).scale(&qinv);
        if !g1.member(&pre)? {
            return Ok(Some((
                "onto-divisibility",
                format!("x{x} needs {pre} in G1, but G1 does not make x{y} divisible by {}", q.numer().abs()),
            )));
        }
    }
    // Onto on the generators `a / p_a` as well: their preimages
    // `(q p_a)^{-1} g^{-1}(a)` must lie in G_1.
    for (a, p) in certified {
        let back = a.relabel(|x| ginv.get(&x).copied()).expect("recorded basis");
        let pre = back.scale(&(qinv.clone() * inv_power(*p, 1)));
        if !g1.member(&pre)? {
            let detail = if q.numer().abs().is_one() {
                format!("({a})/{p} needs the preimage {pre}, which is not in G1")
            } else {
                format!(
                    "({a})/{p} needs {pre} in G1, but G1 does not make {} divisible by {}",
                    back.scale(&inv_power(*p, 1)),
                    q.numer().abs()
                )
            };
            return Ok(Some(("onto-divisibility", detail)));
        }
    }
    // Certified divisibilities are preserved: `p | b` in the torsion-free
    // G_1 exactly when `b / p ∈ G_1`.
    for (a, p) in certified {
        let img = endo.apply(a).expect("recorded basis");
        if !g1.member(&img.scale(&inv_power(*p, 1)))? {
            return Ok(Some((
                "divisibility",
                format!("{p} | {a} in G1 but not {p} | {img}"),
            )));
        }
    }
    Ok(None)
}

/// Candidates `π(x) = Σ_{y ≤_* x} r_y y` with `r_y ∈ {−1, 0, 1}` on
/// `X_{stage_bound}`, kept when onto and not injective. Ontoness is tested
/// on the basis over `Q` first, which already forces full rank, so the result
/// is empty on every finite instance; the rejection log records why each
/// rank-deficient candidate fails.
pub fn hopfian_search(
    g1: &G1Ho<'_>,
    stage_bound: usize,
    budget: usize,
) -> Result<SearchOutcome, EndoError> {
    let m = g1.scaffold();
    let xs = m.strata().upto(stage_bound);
    let mut options: Vec<Vec<QVec>> = Vec::new();
    for &x in &xs {
        let down: Vec<Elem> = downset_ho(m, &QVec::basis(x))?
            .into_iter()
            .filter(|v| v.len() == 1)
            .flat_map(|v| v.support())
            .collect();
        let mut opts = vec![QVec::zero()];
        for y in down {
            let mut next = Vec::new();
            for o in &opts {
                for r in [-1i64, 0, 1] {
                    let mut v = o.clone();
                    v.add_term(y, &BigRational::from_integer(BigInt::from(r)));
                    next.push(v);
                }
            }
            opts = next;
        }
        opts.sort();
        opts.dedup();
        options.push(opts);
    }
    let total = options
        .iter()
        .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
        .unwrap_or(usize::MAX);
    if total > budget {
        return Err(EndoError::SearchBudget(budget));
    }
    let mut idx = vec![0usize; options.len()];
    let mut rejections = Vec::new();
    // Onto forces full rank, so an onto non-injective candidate never appears.
    let survivors = Vec::new();
    let mut candidates = 0;
    loop {
        candidates += 1;
        let endo = PartialEndo {
            flavor: Variant::Ho,
            images: xs
                .iter()
                .zip(&idx)
                .zip(&options)
                .map(|((&x, &i), o)| (x, o[i].clone()))
                .collect(),
            scalar: None,
            defined_through: stage_bound,
        };
        let rank = endo.rank();
        let injective = rank == xs.len();
        if !injective {
            let zero: Vec<String> = endo
                .images
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(x, _)| format!("x{x}"))
                .collect();
            rejections.push(Rejection {
                candidate: endo.to_string(),
                filter: "onto",
                detail: format!(
                    "image has rank {rank} < {}; sent to 0: {}",
                    xs.len(),
                    zero.join(" ")
                ),
            });
        } else if !maps_into_g1(g1, &endo, stage_bound)? {
            rejections.push(Rejection {
                candidate: endo.to_string(),
                filter: "endomorphism",
                detail: "a generator leaves G1".into(),
            });
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(SearchOutcome {
                    survivors,
                    rejections,
                    candidates,
                    sum_zero_hits: 0,
                });
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `π` maps the base generators `b/p` (`b ≤_* a_p`, `p` a tag at most 7)
/// supported in `X_{stage_bound}` into `G_1`.
fn maps_into_g1(g1: &G1Ho<'_>, endo: &PartialEndo, stage_bound: usize) -> Result<bool, EndoError> {
    let m = g1.scaffold();
    for p in [2u64, 3, 5, 7] {
        let Ok(down) = g1.g1p_generators(p) else { continue };
        for b in down {
            if !b.support().iter().all(|&x| m.strata().in_stage(x, stage_bound)) {
                continue;
            }
            let Some(img) = endo.apply(&b.scale(&inv_power(p, 1))) else {
                continue;
            };
            if !g1.member(&img, m.last_stage())?.is_true() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
