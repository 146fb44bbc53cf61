//! Brute-force rewriting oracle for the 2-nilpotent words, working from the
//! defining relations only. Shared by the unit tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use treegrp::nil2::{Factor, NilWord, PairKind, PairTag, PruferElem};
use treegrp::qvec::QVec;


pub fn fact(n: usize) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

/// `a_(x,y,N)` for `x < y`, recomputed from the tag: the class of
/// `sign / (p (N!)²)` in `Z(p^∞)`, found by splitting the denominator.
fn oracle_a(ctx: &PairTag, x: usize, y: usize, n: usize) -> Option<(u64, BigRational)> {
    let PairKind::Prufer { p, sign } = ctx.kind(x, y) else {
        return None;
    };
    let pb = BigInt::from(p);
    let mut den = BigInt::from(p) * fact(n).pow(2);
    let mut pk = BigInt::one();
    while den.is_multiple_of(&pb) {
        den /= &pb;
        pk *= &pb;
    }
    // 1/(pk·den) ≡ c/pk with c·den ≡ 1 mod pk.
    let c = (1..)
        .map(BigInt::from)
        .find(|c| (c * &den - 1i32).is_multiple_of(&pk))
        .unwrap();
    Some((p, BigRational::new(c * BigInt::from(sign), pk)))
}

fn frac_mod1(q: BigRational) -> BigRational {
    q.clone() - BigRational::from_integer(q.floor().to_integer())
}

pub fn oracle_normal_form(ctx: &PairTag, factors: &[Factor]) -> NilWord {
    let big_n = factors
        .iter()
        .map(|f| match f {
            Factor::Letter { n, .. } => *n,
            Factor::Z { .. } => 1,
        })
        .max()
        .unwrap_or(1);
    let mut letters: Vec<(usize, i64)> = Vec::new();
    let mut central: BTreeMap<(usize, usize), (u64, BigRational)> = BTreeMap::new();
    let add_central = |central: &mut BTreeMap<_, _>, x: usize, y: usize, p: u64, d: BigRational| {
        let (key, d) = if x < y { ((x, y), d) } else { ((y, x), -d) };
        let e = central.entry(key).or_insert((p, BigRational::zero()));
        e.1 = frac_mod1(e.1.clone() + d);
    };
    for f in factors {
        match f {
            Factor::Letter { n, x, q } => {
                // Relation (e): (1/n!, x) = (1/N!, x)^{N!/n!}.
                let k = (fact(big_n) / fact(*n)) * BigInt::from(*q);
                let reps: i64 = k.abs().try_into().unwrap();
                let s = if k.is_negative() { -1 } else { 1 };
                letters.extend(std::iter::repeat((*x, s)).take(reps as usize));
            }
            Factor::Z { x, y, d } => add_central(&mut central, *x, *y, d.prime(), d.value()),
        }
    }
    // Bubble sort: g_y^ε g_x^δ = g_x^δ g_y^ε [g_y, g_x]^{εδ}; with x < y,
    // [g_y, g_x] = z(x, y; −a_(x,y,N)) by relation (f) and (c).
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < letters.len() {
            let (y, e) = letters[i];
            let (x, d) = letters[i + 1];
            if x == y && e == -d {
                letters.drain(i..i + 2);
                changed = true;
                continue;
            }
            if x < y {
                letters.swap(i, i + 1);
                if let Some((p, a)) = oracle_a(ctx, x, y, big_n) {
                    add_central(&mut central, x, y, p, -a * BigRational::from_integer(BigInt::from(e * d)));
                }
                changed = true;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    let mut counts: BTreeMap<usize, BigInt> = BTreeMap::new();
    for (x, e) in letters {
        *counts.entry(x).or_default() += e;
    }
    counts.retain(|_, q| !q.is_zero());
    // Relation (e) backwards: lower the stage while every exponent allows.
    let mut n = big_n;
    while n > 1 && counts.values().all(|q| q.is_multiple_of(&BigInt::from(n))) {
        for q in counts.values_mut() {
            *q /= n;
        }
        n -= 1;
    }
    let v = QVec::from_pairs(
        counts
            .into_iter()
            .map(|(x, q)| (x, BigRational::new(q, fact(n)))),
    );
    NilWord::from_parts(
        &v,
        central
            .into_iter()
            .map(|((x, y), (p, d))| ((x, y), PruferElem::from_rational(p, &d))),
    )
}

pub fn factors_of(w: &NilWord) -> Vec<Factor> {
    let mut out: Vec<Factor> = w
        .letters()
        .iter()
        .map(|(x, q)| Factor::Letter {
            n: w.stage(),
            x: *x,
            q: q.try_into().unwrap(),
        })
        .collect();
    out.extend(w.central().iter().map(|(&(x, y), d)| Factor::Z { x, y, d: d.clone() }));
    out
}
