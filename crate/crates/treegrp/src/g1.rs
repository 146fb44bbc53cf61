//! Membership and divisibility in `G_1` for both flavours, with replayable
//! certificates.
//!
//! Rigid flavour: `G_1` is generated by `G_0` and `p_b^{-m} a` for `a 𝓔 b`.
//! Locally at a prime `r` it is `Z_(r)^X + span_Q(class(a_r))`, so membership
//! is decided prime by prime and the local answers are glued by partial
//! fractions. Hopfian flavour: the same with `class` replaced by the downset
//! of `a_r`, plus the stage generators `p^{-m} Σ q_ℓ z_ℓ` of the inductive
//! clause, which enter with integer coefficients glued by CRT. Stage
//! generators are enumerated under a budget, so a negative Hopfian answer is
//! only "false within budget".

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::lattice::{crt, is_prime, local_solve, p_part, prime_factors, val_int, val_rat};
use crate::qvec::{
    apply_label, class_e_labelled, downset_ho_chains, fhat_ho, QError, QVec,
};
use crate::scaffold::ho::ScaffoldHO;
use crate::scaffold::ri::{PathLabel, ScaffoldRI};
use crate::scaffold::Elem;
use crate::tags::{TagError, TagTable};
use crate::tree::{NodeId, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum G1Error {
    #[error("`{0}` is not a nonzero integral vector")]
    NotInG0(String),
    #[error("{0} is not a tag")]
    UnknownPrime(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("the inductive clause needs tuples of length {needed}, cap is {cap}")]
    CapExceeded { needed: usize, cap: usize },
    #[error("search needs more than {0} steps")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Vector(#[from] QError),
}

/// `p^{-m} Σ q_ℓ z_ℓ` with `z̄ = z̄_{(n,t,x̄)}`, justified by
/// `p^{-m} Σ q_ℓ x_ℓ ∈ G_(1,n−1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepCert {
    pub stage: usize,
    pub node: NodeId,
    pub xs: Vec<Elem>,
    pub zs: Vec<Elem>,
    pub q: Vec<BigRational>,
    pub p: u64,
    pub m: u32,
    pub sub: MemberCert,
}

impl StepCert {
    /// `Σ q_ℓ z_ℓ`.
    pub fn base(&self) -> QVec {
        QVec::from_pairs(self.zs.iter().copied().zip(self.q.iter().cloned()))
    }

    pub fn element(&self) -> QVec {
        self.base().scale(&inv_power(self.p, self.m))
    }
}

/// One generator of `G_1` used in a membership certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenCert {
    /// `member 𝓔 owner` with `owner = a_p`; any `p`-power denominator.
    RiClass { p: u64, owner: QVec, member: QVec, label: PathLabel },
    /// `member ≤_* owner` via node chain, `owner = a_p`; any `p`-power denominator.
    HoBase { p: u64, owner: QVec, member: QVec, chain: Vec<NodeId> },
    /// A stage generator; integer coefficient only.
    HoStep(Box<StepCert>),
}

impl GenCert {
    pub fn element(&self) -> QVec {
        match self {
            GenCert::RiClass { member, .. } | GenCert::HoBase { member, .. } => member.clone(),
            GenCert::HoStep(s) => s.element(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: BigRational,
    pub gen: GenCert,
}

/// `target = integral + Σ coeff · generator`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemberCert {
    pub target: QVec,
    pub integral: QVec,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// `a 𝓔 owner` and `owner = a_p`.
    RiClass { owner: QVec, label: PathLabel },
    /// `a ≤_* owner` and `owner = a_p`.
    HoBase { owner: QVec, chain: Vec<NodeId> },
    /// The inductive clause; the step's base is `a`.
    HoStep(Box<StepCert>),
    /// `a / p^m` written out as a membership certificate.
    Combination(MemberCert),
}

/// Certificate that `p^{-m} a ∈ G_1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivCert {
    pub flavor: Variant,
    pub target: QVec,
    pub p: u64,
    pub m: u32,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    True(MemberCert),
    /// No certificate found; `budget_hit` tells whether the search was cut.
    FalseWithinBudget { budget_hit: bool },
}

impl Membership {
    pub fn is_true(&self) -> bool {
        matches!(self, Membership::True(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Divisibility {
    True(DivCert),
    FalseWithinBudget { budget_hit: bool },
}

impl Divisibility {
    pub fn is_true(&self) -> bool {
        matches!(self, Divisibility::True(_))
    }

    pub fn cert(&self) -> Option<&DivCert> {
        match self {
            Divisibility::True(c) => Some(c),
            _ => None,
        }
    }
}

/// Where replay failed.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("certificate rejected at depth {depth}, step {step}: {reason}")]
pub struct CertFailure {
    pub depth: usize,
    pub step: usize,
    pub reason: String,
}

fn fail(depth: usize, step: usize, reason: impl Into<String>) -> CertFailure {
    CertFailure {
        depth,
        step,
        reason: reason.into(),
    }
}

pub fn inv_power(p: u64, m: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(p).pow(m))
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn is_p_power_denominator(q: &BigRational, p: u64) -> bool {
    let mut d = q.denom().clone();
    let p = BigInt::from(p);
    while (&d % &p).is_zero() {
        d /= &p;
    }
    d.is_one()
}

fn sum_terms(terms: &[Term]) -> QVec {
    terms.iter().fold(QVec::zero(), |acc, t| {
        &acc + &t.gen.element().scale(&t.coeff)
    })
}

fn primes_of(q: &BigInt) -> Vec<u64> {
    prime_factors(q)
        .into_iter()
        .filter_map(|p| p.to_u64())
        .collect()
}

/// `{±i/n! : 1 ≤ i ≤ (n!)²}`, ordered by absolute value, positive first.
pub fn stage_coefficients(n: usize) -> impl Iterator<Item = BigRational> {
    let f = factorial(n);
    let end = &f * &f * BigInt::from(2);
    let mut i = BigInt::zero();
    std::iter::from_fn(move || {
        if i >= end {
            return None;
        }
        let k = &i / BigInt::from(2) + BigInt::one();
        let q = BigRational::new(k, f.clone());
        let out = if i.is_even() { q } else { -q };
        i += 1;
        Some(out)
    })
}

pub fn is_stage_coefficient(q: &BigRational, n: usize) -> bool {
    let f = BigRational::from_integer(factorial(n));
    let i = q * &f;
    if !i.is_integer() || i.is_zero() {
        return false;
    }
    let i = i.to_integer();
    let top = factorial(n).pow(2);
    num_traits::Signed::abs(&i) <= top
}

// ---------------------------------------------------------------------------
// Rigid flavour

/// Membership oracle for the rigid flavour.
pub struct G1Ri<'a> {
    m: &'a ScaffoldRI,
    tags: &'a TagTable,
    budget: usize,
    classes: Mutex<BTreeMap<u64, Option<(QVec, BTreeMap<QVec, PathLabel>)>>>,
}

impl<'a> G1Ri<'a> {
    /// `budget` caps the size of any class used.
    pub fn new(m: &'a ScaffoldRI, tags: &'a TagTable, budget: usize) -> Self {
        G1Ri {
            m,
            tags,
            budget,
            classes: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn scaffold(&self) -> &ScaffoldRI {
        self.m
    }

    pub fn tags(&self) -> &TagTable {
        self.tags
    }

    /// `a_p` and its class on the built scaffold.
    fn owner_class(&self, p: u64) -> Result<Option<(QVec, BTreeMap<QVec, PathLabel>)>, G1Error> {
        if let Some(c) = self.classes.lock().expect("class cache").get(&p) {
            return Ok(c.clone());
        }
        let entry = match self.tags.owner(p)? {
            None => None,
            Some(owner) => {
                let class = class_e_labelled(self.m, &owner, self.m.last_stage())?;
                if class.len() > self.budget {
                    return Err(G1Error::BudgetExceeded(self.budget));
                }
                Some((owner, class))
            }
        };
        self.classes
            .lock()
            .expect("class cache")
            .insert(p, entry.clone());
        Ok(entry)
    }

    /// `ℙ_a = {p_b : b ∈ class_E(a, stage_bound)}`, over the tag table.
    pub fn p_a(&self, a: &QVec, stage_bound: usize) -> Result<BTreeSet<u64>, G1Error> {
        if !a.is_g0_plus() {
            return Err(G1Error::NotInG0(a.to_string()));
        }
        let mut out = BTreeSet::new();
        for b in class_e_labelled(self.m, a, stage_bound)?.keys() {
            match self.tags.tag(b) {
                Ok(p) => {
                    out.insert(p);
                }
                Err(TagError::OutsideTable(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out)
    }

    /// Generators of `G_(1,p)`: the class of `a_p`.
    pub fn g1p_generators(&self, p: u64) -> Result<Vec<QVec>, G1Error> {
        match self.owner_class(p)? {
            Some((_, class)) => Ok(class.into_keys().collect()),
            None => Err(G1Error::UnknownPrime(p)),
        }
    }

    pub fn member(&self, v: &QVec) -> Result<Membership, G1Error> {
        let mut terms = Vec::new();
        for r in primes_of(&v.denominator()) {
            let Some((owner, class)) = self.owner_class(r)? else {
                return Ok(Membership::FalseWithinBudget { budget_hit: false });
            };
            let members: Vec<(&QVec, &PathLabel)> = class.iter().collect();
            let w: Vec<QVec> = members.iter().map(|(b, _)| (*b).clone()).collect();
            let Some(sol) = local_solve(v, &w, &[], &BigInt::from(r)) else {
                return Ok(Membership::FalseWithinBudget { budget_hit: false });
            };
            for ((b, label), lam) in members.iter().zip(&sol.w_coeffs) {
                let k = p_part(lam, &BigInt::from(r));
                if !k.is_zero() {
                    terms.push(Term {
                        coeff: k,
                        gen: GenCert::RiClass {
                            p: r,
                            owner: owner.clone(),
                            member: (*b).clone(),
                            label: (*label).clone(),
                        },
                    });
                }
            }
        }
        let integral = v - &sum_terms(&terms);
        debug_assert!(integral.is_integral());
        if !integral.is_integral() {
            return Ok(Membership::FalseWithinBudget { budget_hit: false });
        }
        Ok(Membership::True(MemberCert {
            target: v.clone(),
            integral,
            terms,
        }))
    }

    /// Does `p^mexp` divide `a` in `G_1`?
    pub fn divides(&self, a: &QVec, p: u64, mexp: u32) -> Result<Divisibility, G1Error> {
        if !a.is_g0_plus() {
            return Err(G1Error::NotInG0(a.to_string()));
        }
        if !is_prime(p) {
            return Err(G1Error::NotPrime(p));
        }
        if let Some(owner) = self.tags.owner(p)? {
            let class = class_e_labelled(self.m, a, self.m.last_stage())?;
            if let Some(label) = class.get(&owner) {
                return Ok(Divisibility::True(DivCert {
                    flavor: Variant::Ri,
                    target: a.clone(),
                    p,
                    m: mexp,
                    evidence: Evidence::RiClass {
                        owner,
                        label: label.clone(),
                    },
                }));
            }
        }
        let v = a.scale(&inv_power(p, mexp));
        Ok(match self.member(&v)? {
            Membership::True(c) => Divisibility::True(DivCert {
                flavor: Variant::Ri,
                target: a.clone(),
                p,
                m: mexp,
                evidence: Evidence::Combination(c),
            }),
            Membership::FalseWithinBudget { budget_hit } => {
                Divisibility::FalseWithinBudget { budget_hit }
            }
        })
    }

    fn check_class(&self, depth: usize, step: usize, p: u64, owner: &QVec, member: &QVec, label: &PathLabel) -> Result<(), CertFailure> {
        match self.tags.owner(p) {
            Ok(Some(o)) if o == *owner => {}
            _ => return Err(fail(depth, step, format!("{owner} is not tagged {p}"))),
        }
        match apply_label(self.m, label, owner) {
            Ok(b) if b == *member => Ok(()),
            _ => Err(fail(depth, step, format!("label does not carry {owner} to {member}"))),
        }
    }

    fn verify_member(&self, c: &MemberCert, depth: usize) -> Result<(), CertFailure> {
        if !c.integral.is_integral() {
            return Err(fail(depth, 0, "residual is not integral"));
        }
        for (i, t) in c.terms.iter().enumerate() {
            match &t.gen {
                GenCert::RiClass { p, owner, member, label } => {
                    if !is_p_power_denominator(&t.coeff, *p) {
                        return Err(fail(depth, i + 1, "coefficient denominator is not a power of the tag"));
                    }
                    self.check_class(depth, i + 1, *p, owner, member, label)?;
                }
                _ => return Err(fail(depth, i + 1, "generator of the wrong flavour")),
            }
        }
        if &c.integral + &sum_terms(&c.terms) != c.target {
            return Err(fail(depth, c.terms.len() + 1, "terms do not sum to the target"));
        }
        Ok(())
    }

    pub fn verify(&self, cert: &DivCert) -> Result<(), CertFailure> {
        if cert.flavor != Variant::Ri {
            return Err(fail(0, 0, "wrong flavour"));
        }
        match &cert.evidence {
            Evidence::RiClass { owner, label } => {
                let back = PathLabel::new(
                    label.steps.iter().rev().map(|&(t, s)| (t, s.flip())).collect(),
                );
                // a 𝓔 owner: the label carries owner to a.
                self.check_class(0, 1, cert.p, owner, &cert.target, label)
                    .or_else(|_| self.check_class(0, 1, cert.p, owner, &cert.target, &back))
            }
            Evidence::Combination(c) => {
                if c.target != cert.target.scale(&inv_power(cert.p, cert.m)) {
                    return Err(fail(0, 0, "combination target is not a / p^m"));
                }
                self.verify_member(c, 1)
            }
            _ => Err(fail(0, 0, "evidence of the wrong flavour")),
        }
    }
}

// ---------------------------------------------------------------------------
// Hopfian flavour

/// Certificate that `p^m ∈ ℙ_(a,n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PCert {
    Base { owner: QVec, chain: Vec<NodeId> },
    Step(Box<StepCert>),
}

struct HoState {
    budget_left: usize,
    budget_hit: bool,
    memo: BTreeMap<(QVec, usize), Option<MemberCert>>,
    downsets: BTreeMap<u64, Option<(QVec, BTreeMap<QVec, Vec<NodeId>>)>>,
}

/// Membership oracle for the Hopfian flavour.
pub struct G1Ho<'a> {
    m: &'a ScaffoldHO,
    tags: &'a TagTable,
    budget: usize,
    state: Mutex<HoState>,
}

impl<'a> G1Ho<'a> {
    /// `budget` caps the number of stage coefficient vectors examined per
    /// top-level query.
    pub fn new(m: &'a ScaffoldHO, tags: &'a TagTable, budget: usize) -> Self {
        G1Ho {
            m,
            tags,
            budget,
            state: Mutex::new(HoState {
                budget_left: budget,
                budget_hit: false,
                memo: BTreeMap::new(),
                downsets: BTreeMap::new(),
            }),
        }
    }

    pub fn scaffold(&self) -> &ScaffoldHO {
        self.m
    }

    pub fn tags(&self) -> &TagTable {
        self.tags
    }

    fn owner_downset(&self, p: u64) -> Result<Option<(QVec, BTreeMap<QVec, Vec<NodeId>>)>, G1Error> {
        if let Some(d) = self.state.lock().expect("ho state").downsets.get(&p) {
            return Ok(d.clone());
        }
        let entry = match self.tags.owner(p)? {
            None => None,
            Some(owner) => {
                let d = downset_ho_chains(self.m, &owner)?;
                Some((owner, d))
            }
        };
        self.state
            .lock()
            .expect("ho state")
            .downsets
            .insert(p, entry.clone());
        Ok(entry)
    }

    /// Generators of `G_(1,p)`: the downset of `a_p`.
    pub fn g1p_generators(&self, p: u64) -> Result<Vec<QVec>, G1Error> {
        match self.owner_downset(p)? {
            Some((_, d)) => Ok(d.into_keys().collect()),
            None => Err(G1Error::UnknownPrime(p)),
        }
    }

    fn reset_budget(&self) {
        let mut s = self.state.lock().expect("ho state");
        s.budget_left = self.budget;
        s.budget_hit = false;
    }

    fn take_budget(&self) -> bool {
        let mut s = self.state.lock().expect("ho state");
        if s.budget_left == 0 {
            s.budget_hit = true;
            false
        } else {
            s.budget_left -= 1;
            true
        }
    }

    fn budget_hit(&self) -> bool {
        self.state.lock().expect("ho state").budget_hit
    }

    /// Is `v ∈ G_(1,n)`?
    pub fn member(&self, v: &QVec, n: usize) -> Result<Membership, G1Error> {
        self.reset_budget();
        Ok(match self.member_inner(v, n)? {
            Some(c) => Membership::True(c),
            None => Membership::FalseWithinBudget {
                budget_hit: self.budget_hit(),
            },
        })
    }

    fn member_inner(&self, v: &QVec, n: usize) -> Result<Option<MemberCert>, G1Error> {
        let n = n.min(self.m.last_stage());
        let key = (v.clone(), n);
        if let Some(hit) = self.state.lock().expect("ho state").memo.get(&key) {
            return Ok(hit.clone());
        }
        let out = self.member_uncached(v, n)?;
        // Negative answers depend on the remaining budget; keep only exact ones.
        if out.is_some() || !self.budget_hit() {
            self.state.lock().expect("ho state").memo.insert(key, out.clone());
        }
        Ok(out)
    }

    /// Stage generators whose witness tuple meets `supp(v)`, stage ≤ `n`.
    fn stage_generators(&self, v: &QVec, n: usize) -> Result<Vec<StepCert>, G1Error> {
        let supp: BTreeSet<Elem> = v.support().into_iter().collect();
        let mut out = Vec::new();
        for ((stage, node, xs), zs) in self.m.witnesses() {
            if *stage == 0 || *stage > n || !zs.iter().any(|z| supp.contains(z)) {
                continue;
            }
            let fact = factorial(*stage);
            for p in (2..=*stage as u64).filter(|&p| is_prime(p)) {
                let top = val_int(&fact, &BigInt::from(p));
                for mexp in 1..=top {
                    for q in self.candidate_coefficients(v, zs, *stage, p, mexp) {
                        if !self.take_budget() {
                            return Ok(out);
                        }
                        if let Some(step) = self.try_step(*stage, *node, xs, zs, q, p, mexp)? {
                            out.push(step);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// The coefficient vector read off `v` first, then all of `Q_n^k`.
    fn candidate_coefficients(
        &self,
        v: &QVec,
        zs: &[Elem],
        stage: usize,
        p: u64,
        mexp: u32,
    ) -> Box<dyn Iterator<Item = Vec<BigRational>>> {
        let scale = BigRational::from_integer(BigInt::from(p).pow(mexp));
        let preferred: Vec<BigRational> = zs.iter().map(|&z| v.get(z) * &scale).collect();
        let head = first_clone(&preferred, stage);
        let skip = head.clone();
        let k = zs.len();
        let pool: Vec<BigRational> = stage_coefficients(stage).collect();
        let mut digits = vec![0usize; k];
        let mut done = pool.is_empty() || k == 0;
        let rest = std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out: Vec<BigRational> = digits.iter().map(|&d| pool[d].clone()).collect();
            done = true;
            for i in (0..k).rev() {
                digits[i] += 1;
                if digits[i] < pool.len() {
                    done = false;
                    break;
                }
                digits[i] = 0;
            }
            Some(out)
        })
        .filter(move |q| Some(q) != skip.as_ref());
        Box::new(head.into_iter().chain(rest))
    }

    #[allow(clippy::too_many_arguments)]
    fn try_step(
        &self,
        stage: usize,
        node: NodeId,
        xs: &[Elem],
        zs: &[Elem],
        q: Vec<BigRational>,
        p: u64,
        mexp: u32,
    ) -> Result<Option<StepCert>, G1Error> {
        let image = QVec::from_pairs(xs.iter().copied().zip(q.iter().cloned()))
            .scale(&inv_power(p, mexp));
        Ok(self.member_inner(&image, stage - 1)?.map(|sub| StepCert {
            stage,
            node,
            xs: xs.to_vec(),
            zs: zs.to_vec(),
            q,
            p,
            m: mexp,
            sub,
        }))
    }

    fn member_uncached(&self, v: &QVec, n: usize) -> Result<Option<MemberCert>, G1Error> {
        if v.is_integral() {
            return Ok(Some(MemberCert {
                target: v.clone(),
                integral: v.clone(),
                terms: Vec::new(),
            }));
        }
        let gens = self.stage_generators(v, n)?;
        let elems: Vec<QVec> = gens.iter().map(StepCert::element).collect();
        let mut primes: BTreeSet<u64> = primes_of(&v.denominator()).into_iter().collect();
        for g in &elems {
            primes.extend(primes_of(&g.denominator()));
        }
        let mut terms = Vec::new();
        let mut residues: Vec<Vec<(BigInt, BigInt)>> = vec![Vec::new(); gens.len()];
        let mut locals = Vec::new();
        for &r in &primes {
            let rb = BigInt::from(r);
            let (owner, down): (Option<QVec>, Vec<(QVec, Vec<NodeId>)>) = match self.owner_downset(r)? {
                Some((o, d)) => (Some(o), d.into_iter().collect()),
                None => (None, Vec::new()),
            };
            let w: Vec<QVec> = down.iter().map(|(b, _)| b.clone()).collect();
            let idx: Vec<usize> = (0..gens.len())
                .filter(|&i| (elems[i].denominator() % &rb).is_zero())
                .collect();
            let l: Vec<QVec> = idx.iter().map(|&i| elems[i].clone()).collect();
            let Some(sol) = local_solve(v, &w, &l, &rb) else {
                return Ok(None);
            };
            for (&i, mu) in idx.iter().zip(&sol.l_coeffs) {
                let e = elems[i]
                    .terms()
                    .map(|(_, q)| (-val_rat(q, &rb)).max(0) as u32)
                    .max()
                    .unwrap_or(0)
                    .max(1);
                residues[i].push((mu.clone(), rb.pow(e)));
            }
            locals.push((r, owner, down, sol.w_coeffs));
        }
        for (i, step) in gens.iter().enumerate() {
            let nu = crt(&residues[i]);
            if !nu.is_zero() {
                terms.push(Term {
                    coeff: BigRational::from_integer(nu),
                    gen: GenCert::HoStep(Box::new(step.clone())),
                });
            }
        }
        for (r, owner, down, lam) in locals {
            let Some(owner) = owner else { continue };
            for ((b, chain), l) in down.iter().zip(lam) {
                let k = p_part(&l, &BigInt::from(r));
                if !k.is_zero() {
                    terms.push(Term {
                        coeff: k,
                        gen: GenCert::HoBase {
                            p: r,
                            owner: owner.clone(),
                            member: b.clone(),
                            chain: chain.clone(),
                        },
                    });
                }
            }
        }
        let integral = v - &sum_terms(&terms);
        debug_assert!(integral.is_integral(), "glued residual {integral}");
        if !integral.is_integral() {
            return Ok(None);
        }
        Ok(Some(MemberCert {
            target: v.clone(),
            integral,
            terms,
        }))
    }

    /// The witness key whose tuple has support exactly `supp(a)`.
    fn step_shape(&self, a: &QVec) -> Option<(usize, NodeId, Vec<Elem>, Vec<Elem>)> {
        let supp = a.support();
        let (key, zs) = self.m.witnesses().iter().find(|(_, zs)| {
            let mut s = zs.to_vec();
            s.sort();
            s == supp
        })?;
        Some((key.0, key.1, key.2.clone(), zs.clone()))
    }

    /// Decides `p^mexp ∈ ℙ_(a,n)`.
    pub fn p_member(&self, a: &QVec, p: u64, mexp: u32, n: usize) -> Result<Option<PCert>, G1Error> {
        if !is_prime(p) {
            return Err(G1Error::NotPrime(p));
        }
        if a.is_zero() {
            return Err(G1Error::NotInG0(a.to_string()));
        }
        self.reset_budget();
        if a.is_integral() {
            if let Some((owner, down)) = self.owner_downset(p)? {
                if let Some(chain) = down.get(a) {
                    return Ok(Some(PCert::Base {
                        owner,
                        chain: chain.clone(),
                    }));
                }
            }
        }
        let Some((stage, node, xs, zs)) = self.step_shape(a) else {
            if a.len() > self.m.tuple_cap() {
                return Err(G1Error::CapExceeded {
                    needed: a.len(),
                    cap: self.m.tuple_cap(),
                });
            }
            return Ok(None);
        };
        let q: Vec<BigRational> = zs.iter().map(|&z| a.get(z)).collect();
        let fact = factorial(stage);
        let ok = stage >= 1
            && stage <= n
            && p as usize <= stage
            && (&fact % BigInt::from(p).pow(mexp)).is_zero()
            && q.iter().all(|c| is_stage_coefficient(c, stage));
        if !ok {
            return Ok(None);
        }
        Ok(self
            .try_step(stage, node, &xs, &zs, q, p, mexp)?
            .map(|s| PCert::Step(Box::new(s))))
    }

    /// Does `p^mexp` divide `a` in `G_(1,n)`? Tries the clause for `ℙ_(a,n)`
    /// first, then general membership of `a / p^mexp`.
    pub fn divides(&self, a: &QVec, p: u64, mexp: u32, n: usize) -> Result<Divisibility, G1Error> {
        let wrap = |evidence| {
            Divisibility::True(DivCert {
                flavor: Variant::Ho,
                target: a.clone(),
                p,
                m: mexp,
                evidence,
            })
        };
        match self.p_member(a, p, mexp, n)? {
            Some(PCert::Base { owner, chain }) => return Ok(wrap(Evidence::HoBase { owner, chain })),
            Some(PCert::Step(s)) => return Ok(wrap(Evidence::HoStep(s))),
            None => {}
        }
        Ok(match self.member(&a.scale(&inv_power(p, mexp)), n)? {
            Membership::True(c) => wrap(Evidence::Combination(c)),
            Membership::FalseWithinBudget { budget_hit } => {
                Divisibility::FalseWithinBudget { budget_hit }
            }
        })
    }

    fn check_chain(&self, depth: usize, step: usize, owner: &QVec, chain: &[NodeId], member: &QVec) -> Result<(), CertFailure> {
        let mut cur = owner.clone();
        for &t in chain {
            cur = fhat_ho(self.m, t, &cur).map_err(|e| fail(depth, step, e.to_string()))?;
        }
        if cur != *member || member.is_zero() {
            return Err(fail(depth, step, format!("chain does not carry {owner} to {member}")));
        }
        Ok(())
    }

    fn check_owner(&self, depth: usize, step: usize, p: u64, owner: &QVec) -> Result<(), CertFailure> {
        match self.tags.owner(p) {
            Ok(Some(o)) if o == *owner => Ok(()),
            _ => Err(fail(depth, step, format!("{owner} is not tagged {p}"))),
        }
    }

    fn verify_step(&self, s: &StepCert, depth: usize) -> Result<(), CertFailure> {
        let tree = self.m.tree();
        if s.node >= tree.len() || tree.birth(s.node) != s.stage || s.stage == 0 {
            return Err(fail(depth, 0, "node is not new at the stage"));
        }
        match self.m.witness(s.stage, s.node, &s.xs) {
            Some(zs) if zs == s.zs.as_slice() => {}
            _ => return Err(fail(depth, 0, "z̄ is not the witness tuple")),
        }
        if s.q.len() != s.zs.len() || !s.q.iter().all(|q| is_stage_coefficient(q, s.stage)) {
            return Err(fail(depth, 0, "coefficients outside the stage pattern"));
        }
        if !is_prime(s.p) || s.p as usize > s.stage {
            return Err(fail(depth, 0, "prime exceeds the stage"));
        }
        if !(factorial(s.stage) % BigInt::from(s.p).pow(s.m)).is_zero() {
            return Err(fail(depth, 0, "p^m does not divide n!"));
        }
        for (x, z) in s.xs.iter().zip(&s.zs) {
            if self.m.f(s.node, *z) != Some(*x) {
                return Err(fail(depth, 0, "witness does not map onto x̄"));
            }
        }
        let image = QVec::from_pairs(s.xs.iter().copied().zip(s.q.iter().cloned()))
            .scale(&inv_power(s.p, s.m));
        if s.sub.target != image {
            return Err(fail(depth, 0, "sub-certificate targets the wrong vector"));
        }
        self.verify_member(&s.sub, depth + 1, s.stage - 1)
    }

    fn verify_member(&self, c: &MemberCert, depth: usize, n: usize) -> Result<(), CertFailure> {
        if !c.integral.is_integral() {
            return Err(fail(depth, 0, "residual is not integral"));
        }
        for (i, t) in c.terms.iter().enumerate() {
            match &t.gen {
                GenCert::HoBase { p, owner, member, chain } => {
                    if !is_p_power_denominator(&t.coeff, *p) {
                        return Err(fail(depth, i + 1, "coefficient denominator is not a power of the tag"));
                    }
                    self.check_owner(depth, i + 1, *p, owner)?;
                    self.check_chain(depth, i + 1, owner, chain, member)?;
                }
                GenCert::HoStep(s) => {
                    if !t.coeff.is_integer() {
                        return Err(fail(depth, i + 1, "stage generator with a fractional coefficient"));
                    }
                    if s.stage > n {
                        return Err(fail(depth, i + 1, "stage generator above the stage bound"));
                    }
                    self.verify_step(s, depth + 1)?;
                }
                GenCert::RiClass { .. } => {
                    return Err(fail(depth, i + 1, "generator of the wrong flavour"));
                }
            }
        }
        if &c.integral + &sum_terms(&c.terms) != c.target {
            return Err(fail(depth, c.terms.len() + 1, "terms do not sum to the target"));
        }
        Ok(())
    }

    pub fn verify(&self, cert: &DivCert) -> Result<(), CertFailure> {
        if cert.flavor != Variant::Ho {
            return Err(fail(0, 0, "wrong flavour"));
        }
        match &cert.evidence {
            Evidence::HoBase { owner, chain } => {
                self.check_owner(0, 1, cert.p, owner)?;
                self.check_chain(0, 1, owner, chain, &cert.target)
            }
            Evidence::HoStep(s) => {
                if s.p != cert.p || s.m != cert.m || s.base() != cert.target {
                    return Err(fail(0, 0, "step does not match the target"));
                }
                self.verify_step(s, 1)
            }
            Evidence::Combination(c) => {
                if c.target != cert.target.scale(&inv_power(cert.p, cert.m)) {
                    return Err(fail(0, 0, "combination target is not a / p^m"));
                }
                self.verify_member(c, 1, self.m.last_stage())
            }
            Evidence::RiClass { .. } => Err(fail(0, 0, "evidence of the wrong flavour")),
        }
    }

    /// An element of `I_(1,t)` outside `f̂_t[H_(1,t)]`, decided exactly: the
    /// target is `b / p` with `b ≤_* a_p`, `supp(b) ⊆ X_{n−1}`, and `p`
    /// exceeds every built stage, so no stage generator has a `p` in its
    /// denominator and `G_1` is `Z_(p)^X + span_Q(downset(a_p))` at `p`.
    pub fn nonsurjectivity_witness(&self, t: NodeId, prime_limit: u64) -> Result<Option<QVec>, G1Error> {
        let n = self.m.tree().birth(t);
        if n == 0 {
            return Ok(None);
        }
        let dom = self.m.map(t);
        let mut preimage: BTreeMap<Elem, Elem> = BTreeMap::new();
        for (&z, &x) in dom {
            preimage.entry(x).or_insert(z);
        }
        let upto_n = self.m.strata().upto(n);
        // Kernel of f̂_t on span_Q(X_n).
        let mut kernel: Vec<QVec> = upto_n
            .iter()
            .filter(|x| !dom.contains_key(x))
            .map(|&x| QVec::basis(x))
            .collect();
        for (&z, &x) in dom {
            if preimage[&x] != z {
                kernel.push(&QVec::basis(z) - &QVec::basis(preimage[&x]));
            }
        }
        for p in (2..=prime_limit).filter(|&p| is_prime(p) && p as usize > self.m.last_stage()) {
            let Some((_, down)) = self.owner_downset(p)? else { continue };
            for b in down.keys() {
                if !b.support().iter().all(|&x| self.m.strata().in_stage(x, n - 1)) {
                    continue;
                }
                let target = b.scale(&inv_power(p, 1));
                let Some(c0) = target.relabel(|x| preimage.get(&x).copied()) else {
                    continue;
                };
                let mut w: Vec<QVec> = down.keys().cloned().collect();
                w.extend(kernel.iter().cloned());
                if local_solve(&c0, &w, &[], &BigInt::from(p)).is_none() {
                    return Ok(Some(target));
                }
            }
        }
        Ok(None)
    }
}

fn first_clone(preferred: &[BigRational], stage: usize) -> Option<Vec<BigRational>> {
    preferred
        .iter()
        .all(|q| is_stage_coefficient(q, stage))
        .then(|| preferred.to_vec())
}

/// Verifies a certificate of either flavour.
pub enum Verifier<'a> {
    Ri(&'a G1Ri<'a>),
    Ho(&'a G1Ho<'a>),
}

pub fn verify_cert(v: Verifier<'_>, cert: &DivCert) -> Result<(), CertFailure> {
    match v {
        Verifier::Ri(g) => g.verify(cert),
        Verifier::Ho(g) => g.verify(cert),
    }
}

// ---------------------------------------------------------------------------
// Text form

fn label_text(l: &PathLabel) -> String {
    if l.steps.is_empty() {
        return "()".into();
    }
    l.steps
        .iter()
        .map(|(t, s)| format!("(t#{t},{s})"))
        .collect()
}

fn elems_text(xs: &[Elem]) -> String {
    let v: Vec<String> = xs.iter().map(|x| format!("x{x}")).collect();
    format!("({})", v.join(","))
}

fn write_member(out: &mut String, c: &MemberCert, ind: usize) -> fmt::Result {
    let pad = " ".repeat(ind);
    writeln!(out, "{pad}target {}", c.target)?;
    writeln!(out, "{pad}integral {}", c.integral)?;
    for t in &c.terms {
        writeln!(out, "{pad}term {}", t.coeff)?;
        write_gen(out, &t.gen, ind + 2)?;
    }
    Ok(())
}

fn write_step(out: &mut String, s: &StepCert, ind: usize) -> fmt::Result {
    let pad = " ".repeat(ind);
    writeln!(out, "{pad}stage {}", s.stage)?;
    writeln!(out, "{pad}node t#{}", s.node)?;
    writeln!(out, "{pad}xs {}", elems_text(&s.xs))?;
    writeln!(out, "{pad}zs {}", elems_text(&s.zs))?;
    let q: Vec<String> = s.q.iter().map(|q| q.to_string()).collect();
    writeln!(out, "{pad}q ({})", q.join(","))?;
    writeln!(out, "{pad}prime-power {}^{}", s.p, s.m)?;
    writeln!(out, "{pad}sub")?;
    write_member(out, &s.sub, ind + 2)
}

fn write_gen(out: &mut String, g: &GenCert, ind: usize) -> fmt::Result {
    let pad = " ".repeat(ind);
    match g {
        GenCert::RiClass { p, owner, member, label } => {
            writeln!(out, "{pad}class p={p}")?;
            writeln!(out, "{pad}  owner {owner}")?;
            writeln!(out, "{pad}  member {member}")?;
            writeln!(out, "{pad}  label {}", label_text(label))
        }
        GenCert::HoBase { p, owner, member, chain } => {
            writeln!(out, "{pad}base p={p}")?;
            writeln!(out, "{pad}  owner {owner}")?;
            writeln!(out, "{pad}  member {member}")?;
            let c: Vec<String> = chain.iter().map(|t| format!("t#{t}")).collect();
            writeln!(out, "{pad}  chain ({})", c.join(","))
        }
        GenCert::HoStep(s) => {
            writeln!(out, "{pad}step")?;
            write_step(out, s, ind + 2)
        }
    }
}

impl fmt::Display for DivCert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "divcert v1")?;
        writeln!(out, "flavor {}", self.flavor.as_str())?;
        writeln!(out, "target {}", self.target)?;
        writeln!(out, "prime-power {}^{}", self.p, self.m)?;
        match &self.evidence {
            Evidence::RiClass { owner, label } => {
                writeln!(out, "evidence class")?;
                writeln!(out, "  owner {owner}")?;
                writeln!(out, "  label {}", label_text(label))?;
            }
            Evidence::HoBase { owner, chain } => {
                writeln!(out, "evidence base")?;
                writeln!(out, "  owner {owner}")?;
                let c: Vec<String> = chain.iter().map(|t| format!("t#{t}")).collect();
                writeln!(out, "  chain ({})", c.join(","))?;
            }
            Evidence::HoStep(s) => {
                writeln!(out, "evidence step")?;
                write_step(&mut out, s, 2)?;
            }
            Evidence::Combination(c) => {
                writeln!(out, "evidence combination")?;
                write_member(&mut out, c, 2)?;
            }
        }
        f.write_str(&out)
    }
}

impl fmt::Display for MemberCert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "membercert v1")?;
        write_member(&mut out, self, 0)?;
        f.write_str(&out)
    }
}
