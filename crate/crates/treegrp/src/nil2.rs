//! The 2-nilpotent group `H_2` over a rigid scaffold, its subgroup `H_1`
//! and the branch embedding.
//!
//! An element is stored in normal form: a stage `n`, letters
//! `(1/n!, x)^q` with `x` increasing, and central coordinates
//! `z(x, y; d)` for `x < y` with `d` in the Prüfer group `K_(x,y)`.
//! The commutator of two noncentral parts is the alternating form
//! `Σ_{x<y} ω_xy(u_x v_y − u_y v_x)`, with `ω_xy = ±φ_p` on pairs tagged by
//! `p` and `φ_p(r)` the `p`-primary part of `r / p` modulo 1. Hence
//! `a_(x,y,n) = φ_p(1/(n!)²)` and `p · a_(x,y,1) = 0 ≠ a_(x,y,1)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::g1::{factorial, G1Error, G1Ri, Membership};
use crate::lattice::{is_prime, p_part};
use crate::qvec::{QError, QVec};
use crate::scaffold::ri::ScaffoldRI;
use crate::scaffold::{Elem, ScaffoldError};
use crate::tree::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NilError {
    #[error("no valid pair for the prime {0}")]
    InsufficientClasses(u64),
    #[error("central coordinate on ({0}, {1}) does not fit the pair tags")]
    ContextMismatch(Elem, Elem),
    #[error("element x{0} is outside the domain of the map")]
    OutsideDomain(Elem),
    #[error("pair ({0}, {1}) and its image carry different tags")]
    TagMismatch(Elem, Elem),
    #[error("no chosen pair for a prime dividing {0}")]
    NoPairForDivisor(i64),
    #[error("|m| must exceed 1, got {0}")]
    TrivialMultiplier(i64),
    #[error("the tree has no branch")]
    NoBranch,
    #[error("cannot parse word: {0}")]
    Parse(String),
    #[error(transparent)]
    G1(#[from] G1Error),
    #[error(transparent)]
    Vector(#[from] QError),
    #[error(transparent)]
    Scaffold(#[from] ScaffoldError),
}

/// `c / p^k` in `Z(p^∞)`, reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PruferElem {
    p: u64,
    c: BigInt,
    k: u32,
}

impl PruferElem {
    pub fn zero(p: u64) -> Self {
        PruferElem {
            p,
            c: BigInt::zero(),
            k: 0,
        }
    }

    /// The class of `c / p^k`.
    pub fn new(p: u64, c: BigInt, k: u32) -> Self {
        Self::from_rational(p, &BigRational::new(c, BigInt::from(p).pow(k)))
    }

    /// A rational whose denominator is a power of `p`, taken mod 1.
    /// Other denominators keep only their `p`-primary part.
    pub fn from_rational(p: u64, q: &BigRational) -> Self {
        let r = p_part(q, &BigInt::from(p));
        if r.is_zero() {
            return Self::zero(p);
        }
        let k = crate::lattice::val_int(r.denom(), &BigInt::from(p));
        PruferElem {
            p,
            c: r.numer().clone(),
            k,
        }
    }

    /// `φ_p(r)`: the `p`-primary part of `r / p` modulo 1.
    pub fn phi(p: u64, r: &BigRational) -> Self {
        Self::from_rational(p, &(r / BigRational::from_integer(BigInt::from(p))))
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn numer(&self) -> &BigInt {
        &self.c
    }

    pub fn exponent(&self) -> u32 {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_zero()
    }

    pub fn value(&self) -> BigRational {
        BigRational::new(self.c.clone(), BigInt::from(self.p).pow(self.k))
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        Self::from_rational(self.p, &(self.value() + other.value()))
    }

    pub fn neg(&self) -> Self {
        Self::from_rational(self.p, &-self.value())
    }

    pub fn times(&self, n: &BigInt) -> Self {
        Self::from_rational(self.p, &(self.value() * BigRational::from_integer(n.clone())))
    }

    /// Order of the element.
    pub fn order(&self) -> BigInt {
        BigInt::from(self.p).pow(self.k)
    }
}

impl fmt::Display for PruferElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "0/{}^0", self.p)
        } else {
            write!(f, "{}/{}^{}", self.c, self.p, self.k)
        }
    }
}

/// The group `K_(x,y)` of an unordered pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairKind {
    Trivial,
    /// `Z(p^∞)`; `sign` is `+1` when `(x, y)` with `x < y` lies in the
    /// class of `(x_p, y_p)` and `−1` when it lies in the class of
    /// `(y_p, x_p)`.
    Prufer { p: u64, sign: i8 },
}

/// Chosen pairs and the induced tags on all pairs of the truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTag {
    pub chosen: BTreeMap<u64, (Elem, Elem)>,
    kinds: BTreeMap<(Elem, Elem), PairKind>,
}

impl PairTag {
    /// Builds the tags from explicit pairs; `classes` lists the `E_2`
    /// classes of ordered pairs.
    pub fn from_classes(chosen: BTreeMap<u64, (Elem, Elem)>, classes: &[Vec<Vec<Elem>>]) -> Self {
        let mut kinds = BTreeMap::new();
        for (&p, &(xp, yp)) in &chosen {
            for c in classes {
                let fwd = c.iter().any(|v| v[..] == [xp, yp]);
                let bwd = c.iter().any(|v| v[..] == [yp, xp]);
                if !(fwd || bwd) {
                    continue;
                }
                for v in c {
                    let (x, y) = (v[0], v[1]);
                    if x < y {
                        let sign = if fwd { 1 } else { -1 };
                        kinds.insert((x, y), PairKind::Prufer { p, sign });
                    }
                }
            }
        }
        PairTag { chosen, kinds }
    }

    /// The kind of the pair `{x, y}` for `x < y`.
    pub fn kind(&self, x: Elem, y: Elem) -> PairKind {
        let key = if x < y { (x, y) } else { (y, x) };
        self.kinds.get(&key).copied().unwrap_or(PairKind::Trivial)
    }

    /// `ω_xy(r)` for `x < y`.
    pub fn omega(&self, x: Elem, y: Elem, r: &BigRational) -> Option<PruferElem> {
        match self.kind(x, y) {
            PairKind::Trivial => None,
            PairKind::Prufer { p, sign } => {
                let d = PruferElem::phi(p, r);
                Some(if sign > 0 { d } else { d.neg() })
            }
        }
    }

    /// `a_(x,y,n)` for `x < y`.
    pub fn a(&self, x: Elem, y: Elem, n: usize) -> Option<PruferElem> {
        let f = BigRational::from_integer(factorial(n));
        self.omega(x, y, &(f.pow(2)).recip())
    }

    pub fn tagged_pairs(&self) -> impl Iterator<Item = (&(Elem, Elem), &PairKind)> {
        self.kinds.iter()
    }
}

/// First-fit choice of `(x_p, y_p)` for each prime: coordinates pairwise
/// `E_1`-inequivalent across all chosen pairs, `x_p + y_p` certified not
/// divisible by `p` in `G_1`, and `E_2`-separation from earlier pairs.
pub fn choose_pairs(g1: &G1Ri<'_>, primes: &[u64], e2_budget: usize) -> Result<PairTag, NilError> {
    let m = g1.scaffold();
    let classes = m.components_ek(2, e2_budget)?;
    let class_of: BTreeMap<(Elem, Elem), usize> = classes
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |v| ((v[0], v[1]), i)))
        .collect();
    let xs = m.strata().all();
    let mut used_e1: Vec<Elem> = Vec::new();
    let mut used_e2: BTreeSet<usize> = BTreeSet::new();
    let mut chosen = BTreeMap::new();
    for &p in primes {
        let mut found = None;
        'search: for (i, &x) in xs.iter().enumerate() {
            if used_e1.iter().any(|&u| m.e1_equivalent(u, x)) {
                continue;
            }
            for &y in &xs[i + 1..] {
                if m.e1_equivalent(x, y) || used_e1.iter().any(|&u| m.e1_equivalent(u, y)) {
                    continue;
                }
                let (c1, c2) = (class_of[&(x, y)], class_of[&(y, x)]);
                if used_e2.contains(&c1) || used_e2.contains(&c2) {
                    continue;
                }
                let sum = QVec::from_ints(&[(x, 1), (y, 1)]);
                match g1.divides(&sum, p, 1)? {
                    crate::g1::Divisibility::FalseWithinBudget { budget_hit: false } => {
                        found = Some((x, y, c1, c2));
                        break 'search;
                    }
                    _ => continue,
                }
            }
        }
        let (x, y, c1, c2) = found.ok_or(NilError::InsufficientClasses(p))?;
        used_e1.extend([x, y]);
        used_e2.extend([c1, c2]);
        chosen.insert(p, (x, y));
    }
    Ok(PairTag::from_classes(chosen, &classes))
}

/// A word in normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NilWord {
    stage: usize,
    letters: Vec<(Elem, BigInt)>,
    central: BTreeMap<(Elem, Elem), PruferElem>,
}

impl NilWord {
    pub fn identity() -> Self {
        NilWord {
            stage: 1,
            letters: Vec::new(),
            central: BTreeMap::new(),
        }
    }

    /// The element with noncentral part `v` (read as `Σ v_x · (1, x)`) and
    /// the given central coordinates; zero coordinates are dropped and
    /// pairs are oriented `x < y`.
    pub fn from_parts(v: &QVec, central: impl IntoIterator<Item = ((Elem, Elem), PruferElem)>) -> Self {
        let mut stage = 1;
        while !v.scale(&BigRational::from_integer(factorial(stage))).is_integral() {
            stage += 1;
        }
        let f = BigRational::from_integer(factorial(stage));
        let letters = v
            .terms()
            .map(|(x, q)| (x, (q * &f).to_integer()))
            .collect();
        let mut c: BTreeMap<(Elem, Elem), PruferElem> = BTreeMap::new();
        for ((x, y), d) in central {
            if x == y {
                continue;
            }
            let (key, d) = if x < y { ((x, y), d) } else { ((y, x), d.neg()) };
            let entry = c.entry(key).or_insert_with(|| PruferElem::zero(d.prime()));
            *entry = entry.add(&d);
        }
        c.retain(|_, d| !d.is_zero());
        NilWord {
            stage,
            letters,
            central: c,
        }
    }

    /// The letter `(1/n!, x)^q`.
    pub fn letter(n: usize, x: Elem, q: i64) -> Self {
        let v = QVec::basis(x).scale(&BigRational::new(BigInt::from(q), factorial(n)));
        Self::from_parts(&v, [])
    }

    /// `z(x, y; d)`.
    pub fn central_letter(x: Elem, y: Elem, d: PruferElem) -> Self {
        Self::from_parts(&QVec::zero(), [((x, y), d)])
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn letters(&self) -> &[(Elem, BigInt)] {
        &self.letters
    }

    pub fn central(&self) -> &BTreeMap<(Elem, Elem), PruferElem> {
        &self.central
    }

    /// `h_2`: the noncentral part as a vector of `G_2`.
    pub fn h2_project(&self) -> QVec {
        let f = BigRational::from_integer(factorial(self.stage));
        QVec::from_pairs(
            self.letters
                .iter()
                .map(|(x, q)| (*x, BigRational::from_integer(q.clone()) / &f)),
        )
    }

    pub fn is_central(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty() && self.central.is_empty()
    }

    fn check(&self, ctx: &PairTag) -> Result<(), NilError> {
        for (&(x, y), d) in &self.central {
            match ctx.kind(x, y) {
                PairKind::Prufer { p, .. } if p == d.prime() => {}
                _ => return Err(NilError::ContextMismatch(x, y)),
            }
        }
        Ok(())
    }
}

/// `γ(u, v) = −Σ_{x<y} ω_xy(u_y v_x)`, the correction from collecting
/// `N(u) N(v)` into `N(u + v)`.
fn cocycle(ctx: &PairTag, u: &QVec, v: &QVec) -> Vec<((Elem, Elem), PruferElem)> {
    let mut out = Vec::new();
    for (y, uy) in u.terms() {
        for (x, vx) in v.terms() {
            if x < y {
                if let Some(d) = ctx.omega(x, y, &(uy * vx)) {
                    out.push(((x, y), d.neg()));
                }
            }
        }
    }
    out
}

pub fn mul(ctx: &PairTag, a: &NilWord, b: &NilWord) -> Result<NilWord, NilError> {
    a.check(ctx)?;
    b.check(ctx)?;
    let (u, v) = (a.h2_project(), b.h2_project());
    let central = a
        .central
        .iter()
        .chain(&b.central)
        .map(|(k, d)| (*k, d.clone()))
        .chain(cocycle(ctx, &u, &v));
    Ok(NilWord::from_parts(&(&u + &v), central))
}

pub fn inverse(ctx: &PairTag, a: &NilWord) -> Result<NilWord, NilError> {
    a.check(ctx)?;
    let u = a.h2_project();
    // (u, c)^{-1} = (−u, −c + γ(u, u)).
    let central = a
        .central
        .iter()
        .map(|(k, d)| (*k, d.neg()))
        .chain(cocycle(ctx, &u, &u));
    Ok(NilWord::from_parts(&-&u, central))
}

/// `a^n` for any integer `n`.
pub fn power(ctx: &PairTag, a: &NilWord, n: i64) -> Result<NilWord, NilError> {
    let base = if n < 0 { inverse(ctx, a)? } else { a.clone() };
    let mut out = NilWord::identity();
    let mut sq = base;
    let mut k = n.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            out = mul(ctx, &out, &sq)?;
        }
        sq = mul(ctx, &sq, &sq)?;
        k >>= 1;
    }
    Ok(out)
}

/// `[a, b] = a⁻¹ b⁻¹ a b`.
pub fn commutator(ctx: &PairTag, a: &NilWord, b: &NilWord) -> Result<NilWord, NilError> {
    let ai = inverse(ctx, a)?;
    let bi = inverse(ctx, b)?;
    let left = mul(ctx, &ai, &bi)?;
    let right = mul(ctx, a, b)?;
    mul(ctx, &left, &right)
}

pub fn center_membership(u: &NilWord) -> bool {
    u.is_central()
}

/// `u ∈ H_1` iff `h_2(u) ∈ G_1`.
pub fn in_h1(g1: &G1Ri<'_>, u: &NilWord) -> Result<Membership, NilError> {
    Ok(g1.member(&u.h2_project())?)
}

/// `g²_t` applied letterwise.
pub fn g2t_apply(m: &ScaffoldRI, ctx: &PairTag, t: NodeId, u: &NilWord) -> Result<NilWord, NilError> {
    apply_map(ctx, |x| m.map(t).get(x), u)
}

fn apply_map(ctx: &PairTag, f: impl Fn(Elem) -> Option<Elem>, u: &NilWord) -> Result<NilWord, NilError> {
    u.check(ctx)?;
    let v = u.h2_project();
    let image = v
        .relabel(&f)
        .ok_or_else(|| NilError::OutsideDomain(v.support().into_iter().find(|&x| f(x).is_none()).unwrap_or(0)))?;
    let mut central = Vec::new();
    for (&(x, y), d) in &u.central {
        let (fx, fy) = match (f(x), f(y)) {
            (Some(a), Some(b)) => (a, b),
            (None, _) => return Err(NilError::OutsideDomain(x)),
            (_, None) => return Err(NilError::OutsideDomain(y)),
        };
        let same = match (ctx.kind(x, y), ctx.kind(fx, fy)) {
            (PairKind::Prufer { p: p1, sign: s1 }, PairKind::Prufer { p: p2, sign: s2 }) => {
                // Orientation is relative to the sorted pair.
                p1 == p2 && (s1 == s2) == (fx < fy)
            }
            _ => false,
        };
        if !same {
            return Err(NilError::TagMismatch(x, y));
        }
        central.push(((fx, fy), d.clone()));
    }
    Ok(NilWord::from_parts(&image, central))
}

/// The union of `f_{t_n}` along the branch through `depth`.
pub fn branch_union(m: &ScaffoldRI, depth: usize) -> Result<BTreeMap<Elem, Elem>, NilError> {
    let chain = m.tree().branch().ok_or(NilError::NoBranch)?;
    let mut out = BTreeMap::new();
    for &t in chain.iter().take(depth + 1) {
        out.extend(m.map(t).pairs());
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BranchEmbeddingReport {
    pub depth: usize,
    pub x_star: Elem,
    /// No branch map has `x_*` in its range, so every image projects to a
    /// vector with zero `x_*` coordinate, while `h_2((1, x_*)) = x_*`.
    pub x_star_outside_range: bool,
    pub x_star_in_h1: bool,
    pub pairs_checked: usize,
    pub injective_on_sample: bool,
    pub homomorphic_on_sample: bool,
    pub projection_commutes: bool,
    pub samples: usize,
}

impl BranchEmbeddingReport {
    pub fn all_pass(&self) -> bool {
        self.x_star_outside_range
            && self.x_star_in_h1
            && self.injective_on_sample
            && self.homomorphic_on_sample
            && self.projection_commutes
    }
}

impl fmt::Display for BranchEmbeddingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |b: bool| if b { "pass" } else { "FAIL" };
        writeln!(f, "branch-embedding depth {}", self.depth)?;
        writeln!(f, "x* x{}", self.x_star)?;
        writeln!(f, "check (1,x*) in H1: {}", s(self.x_star_in_h1))?;
        writeln!(f, "check (1,x*) outside the range: {}", s(self.x_star_outside_range))?;
        writeln!(
            f,
            "check injective on {} word pairs: {}",
            self.pairs_checked,
            s(self.injective_on_sample)
        )?;
        writeln!(f, "check homomorphism on the sample: {}", s(self.homomorphic_on_sample))?;
        writeln!(
            f,
            "check h2 after g1 equals fhat after h2 on {} words: {}",
            self.samples,
            s(self.projection_commutes)
        )
    }
}

/// Random words over the domain of `map`, stage at most 3 and at most four
/// letters, with central coordinates on tagged pairs inside the domain.
pub fn random_word<R: rand::Rng>(rng: &mut R, ctx: &PairTag, pool: &[Elem]) -> NilWord {
    let stage = rng.gen_range(1..=3);
    let f = BigRational::from_integer(factorial(stage));
    let mut v = QVec::zero();
    for _ in 0..rng.gen_range(0..=4) {
        let x = pool[rng.gen_range(0..pool.len())];
        let q: i64 = rng.gen_range(-12..=12);
        v.add_term(x, &(BigRational::from_integer(BigInt::from(q)) / &f));
    }
    let tagged: Vec<(Elem, Elem, u64)> = ctx
        .tagged_pairs()
        .filter(|((x, y), _)| pool.contains(x) && pool.contains(y))
        .filter_map(|(&(x, y), k)| match k {
            PairKind::Prufer { p, .. } => Some((x, y, *p)),
            PairKind::Trivial => None,
        })
        .collect();
    let mut central = Vec::new();
    if !tagged.is_empty() {
        for _ in 0..rng.gen_range(0..=2) {
            let (x, y, p) = tagged[rng.gen_range(0..tagged.len())];
            let k = rng.gen_range(1..=3);
            let c = rng.gen_range(1..p.pow(k));
            central.push(((x, y), PruferElem::new(p, BigInt::from(c), k)));
        }
    }
    NilWord::from_parts(&v, central)
}

pub fn branch_embedding_nil<R: rand::Rng>(
    m: &ScaffoldRI,
    g1: &G1Ri<'_>,
    ctx: &PairTag,
    depth: usize,
    samples: usize,
    rng: &mut R,
) -> Result<BranchEmbeddingReport, NilError> {
    let union = branch_union(m, depth)?;
    let chain = m.tree().branch().ok_or(NilError::NoBranch)?;
    let ran: BTreeSet<Elem> = union.values().copied().collect();
    let x_star = m
        .strata()
        .upto(0)
        .into_iter()
        .find(|x| !ran.contains(x))
        .unwrap_or(0);
    let outside = chain
        .iter()
        .take(depth + 1)
        .all(|&t| !m.map(t).contains_ran(x_star));
    let star = NilWord::letter(1, x_star, 1);
    let star_in = in_h1(g1, &star)?.is_true();
    let pool: Vec<Elem> = union.keys().copied().collect();
    let f = |x: Elem| union.get(&x).copied();
    let mut injective = true;
    let mut commutes = true;
    let mut homomorphic = true;
    let mut pairs = 0;
    if !pool.is_empty() {
        for _ in 0..samples {
            let a = random_word(rng, ctx, &pool);
            let b = random_word(rng, ctx, &pool);
            let (ga, gb) = (apply_map(ctx, f, &a)?, apply_map(ctx, f, &b)?);
            pairs += 1;
            if (a == b) != (ga == gb) {
                injective = false;
            }
            let lhs = ga.h2_project();
            let rhs = a.h2_project().relabel(f).expect("word over the domain");
            if lhs != rhs {
                commutes = false;
            }
            // Homomorphism on the sample.
            if apply_map(ctx, f, &mul(ctx, &a, &b)?)? != mul(ctx, &ga, &gb)? {
                homomorphic = false;
            }
        }
    }
    Ok(BranchEmbeddingReport {
        depth,
        x_star,
        x_star_outside_range: outside,
        x_star_in_h1: star_in,
        pairs_checked: pairs,
        injective_on_sample: injective,
        homomorphic_on_sample: homomorphic,
        projection_commutes: commutes,
        samples: pairs,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obstruction {
    pub m: i64,
    pub p: u64,
    pub pair: (Elem, Elem),
    /// `[(1, x_p), (1, y_p)]`.
    pub z: NilWord,
    /// `z^{m²}`.
    pub z_m2: NilWord,
    /// `[(1, x_p)^m, (1, y_p)^m]`.
    pub lifted: NilWord,
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "torsion-obstruction m {}", self.m)?;
        writeln!(f, "prime {}", self.p)?;
        writeln!(f, "pair x{} x{}", self.pair.0, self.pair.1)?;
        writeln!(f, "commutator {}", self.z)?;
        writeln!(f, "commutator^(m^2) {}", self.z_m2)?;
        writeln!(f, "commutator of m-th powers {}", self.lifted)
    }
}

/// The smallest prime `p | m` with a chosen pair, and the exact values
/// `[(1,x),(1,y)] ≠ e` and `[(1,x)^m, (1,y)^m] = z^{m²} = e`.
pub fn torsion_obstruction(ctx: &PairTag, m_int: i64) -> Result<Obstruction, NilError> {
    if m_int.abs() <= 1 {
        return Err(NilError::TrivialMultiplier(m_int));
    }
    let n = m_int.unsigned_abs();
    let p = (2..=n)
        .filter(|&p| is_prime(p) && n % p == 0)
        .find(|p| ctx.chosen.contains_key(p))
        .ok_or(NilError::NoPairForDivisor(m_int))?;
    let (x, y) = ctx.chosen[&p];
    let gx = NilWord::letter(1, x, 1);
    let gy = NilWord::letter(1, y, 1);
    let z = commutator(ctx, &gx, &gy)?;
    let z_m2 = power(ctx, &z, m_int * m_int)?;
    let lifted = commutator(ctx, &power(ctx, &gx, m_int)?, &power(ctx, &gy, m_int)?)?;
    Ok(Obstruction {
        m: m_int,
        p,
        pair: (x, y),
        z,
        z_m2,
        lifted,
    })
}

impl fmt::Display for NilWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .letters
            .iter()
            .map(|(x, q)| format!("(1/{}!,x{x})^{q}", self.stage))
            .collect();
        parts.extend(
            self.central
                .iter()
                .map(|((x, y), d)| format!("z(x{x},x{y};{d})")),
        );
        if parts.is_empty() {
            f.write_str("e")
        } else {
            f.write_str(&parts.join(" * "))
        }
    }
}

fn parse_elem(s: &str) -> Result<Elem, NilError> {
    s.trim()
        .strip_prefix('x')
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| NilError::Parse(s.to_string()))
}

/// `c/p^k` or `c/p`.
fn parse_prufer(s: &str) -> Result<PruferElem, NilError> {
    let bad = || NilError::Parse(s.to_string());
    let (c, rest) = s.trim().split_once('/').ok_or_else(bad)?;
    let c: BigInt = c.trim().parse().map_err(|_| bad())?;
    let (p, k) = match rest.split_once('^') {
        Some((p, k)) => (p, k.trim().parse::<u32>().map_err(|_| bad())?),
        None => (rest, 1),
    };
    let p: u64 = p.trim().parse().map_err(|_| bad())?;
    if !is_prime(p) {
        return Err(bad());
    }
    Ok(PruferElem::new(p, c, k))
}

impl FromStr for NilWord {
    type Err = NilError;

    /// Parses a product of factors `(1/n!,x<i>)^q`, `(1/n!,x<i>)` and
    /// `z(x<i>,x<j>;c/p^k)`, in any order; the result is only a normal form
    /// when the factors are already sorted, see [`parse_product`].
    fn from_str(s: &str) -> Result<Self, NilError> {
        let factors = parse_factors(s)?;
        let mut v = QVec::zero();
        let mut central = Vec::new();
        for fct in factors {
            match fct {
                Factor::Letter { n, x, q } => v.add_term(x, &BigRational::new(BigInt::from(q), factorial(n))),
                Factor::Z { x, y, d } => central.push(((x, y), d)),
            }
        }
        Ok(NilWord::from_parts(&v, central))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Letter { n: usize, x: Elem, q: i64 },
    Z { x: Elem, y: Elem, d: PruferElem },
}

impl Factor {
    pub fn to_word(&self) -> NilWord {
        match self {
            Factor::Letter { n, x, q } => NilWord::letter(*n, *x, *q),
            Factor::Z { x, y, d } => NilWord::central_letter(*x, *y, d.clone()),
        }
    }
}

pub fn parse_factors(s: &str) -> Result<Vec<Factor>, NilError> {
    let s = s.trim();
    if s == "e" || s.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in s.split('*') {
        let part = part.trim();
        let bad = || NilError::Parse(part.to_string());
        if let Some(body) = part.strip_prefix("z(") {
            let body = body.strip_suffix(')').ok_or_else(bad)?;
            let (xy, d) = body.split_once(';').ok_or_else(bad)?;
            let (x, y) = xy.split_once(',').ok_or_else(bad)?;
            out.push(Factor::Z {
                x: parse_elem(x)?,
                y: parse_elem(y)?,
                d: parse_prufer(d)?,
            });
        } else if let Some(body) = part.strip_prefix("(1/") {
            let (inner, q) = match body.split_once(")^") {
                Some((i, q)) => (i, q.trim().parse::<i64>().map_err(|_| bad())?),
                None => (body.strip_suffix(')').ok_or_else(bad)?, 1),
            };
            let (n, x) = inner.split_once(',').ok_or_else(bad)?;
            let n: usize = n.trim().strip_suffix('!').ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            out.push(Factor::Letter {
                n,
                x: parse_elem(x)?,
                q,
            });
        } else {
            return Err(bad());
        }
    }
    Ok(out)
}

/// Multiplies the factors of a word in the written order.
pub fn parse_product(ctx: &PairTag, s: &str) -> Result<NilWord, NilError> {
    let mut out = NilWord::identity();
    for f in parse_factors(s)? {
        out = mul(ctx, &out, &f.to_word())?;
    }
    Ok(out)
}

/// Rank of `{h_2((1, x))}`, the images of the basis letters in the
/// abelianization.
pub fn basis_rank(xs: &[Elem]) -> usize {
    let rows: Vec<QVec> = xs.iter().map(|&x| NilWord::letter(1, x, 1).h2_project()).collect();
    crate::lattice::rref(&rows).rows.len()
}

/// Smallest `n` such that `n! · r` is an integer.
pub fn factorial_stage(r: &BigRational) -> usize {
    let mut n = 1;
    while !(r * BigRational::from_integer(factorial(n))).is_integer() {
        n += 1;
    }
    n
}
