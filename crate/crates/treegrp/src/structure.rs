//! Exhaustive checks of two structural facts about rigid scaffolds.
//!
//! [`moved_violations`] tests that every map moves its domain and jumps
//! between strata in one of the two allowed ways. [`spread_violations`]
//! tests the spreading claim: given `a = Σ q_i x_i` over a minimal
//! reasonable tuple and distinct `𝓔`-relatives `b_0, …, b_{ℓ*-1}`, lifts
//! `ȳ^ℓ ≥ x̄` exist with distinct last coordinates and two "private"
//! coordinates in different lifts.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::qvec::{class_e_strict, QError, QVec};
use crate::scaffold::ri::ScaffoldRI;
use crate::scaffold::{Elem, ScaffoldError, Sign};
use crate::tree::NodeId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveViolation {
    pub t: NodeId,
    pub sign: Sign,
    pub x: Elem,
    pub image: Elem,
    pub birth_x: usize,
    pub birth_image: usize,
}

impl fmt::Display for MoveViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t{} sign {}: x{} (stage {}) -> x{} (stage {})",
            self.t,
            self.sign.as_i8(),
            self.x,
            self.birth_x,
            self.image,
            self.birth_image
        )
    }
}

/// Every `(t, i, x)` with `x ∈ dom(f^i_t)` where `f^i_t(x) = x`, or where
/// `x` is born at `n - 1` and the image is born neither at `n` nor before
/// `n - 1`.
pub fn moved_violations(m: &ScaffoldRI) -> Vec<MoveViolation> {
    let mut out = Vec::new();
    for t in m.built_nodes() {
        for sign in Sign::BOTH {
            let pairs: Vec<(Elem, Elem)> = match sign {
                Sign::Plus => m.map(t).pairs().collect(),
                Sign::Minus => m.map(t).pairs().map(|(x, y)| (y, x)).collect(),
            };
            for (x, y) in pairs {
                let (Some(bx), Some(by)) = (m.birth(x), m.birth(y)) else {
                    continue;
                };
                let n = bx + 1;
                let allowed = x != y && (by == n || by + 1 < n);
                if !allowed {
                    out.push(MoveViolation {
                        t,
                        sign,
                        x,
                        image: y,
                        birth_x: bx,
                        birth_image: by,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpreadViolation {
    pub xs: Vec<Elem>,
    pub coeffs: Vec<i64>,
    pub bs: Vec<QVec>,
    pub reason: String,
}

impl fmt::Display for SpreadViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bs: Vec<String> = self.bs.iter().map(|b| b.to_string()).collect();
        write!(
            f,
            "x̄ = {:?}, q = {:?}, b = [{}]: {}",
            self.xs,
            self.coeffs,
            bs.join("; "),
            self.reason
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpreadReport {
    /// Number of `(x̄, q̄, {b_ℓ})` configurations satisfying the hypotheses.
    pub configurations: usize,
    pub violations: Vec<SpreadViolation>,
}

#[derive(Clone, Copy, Debug)]
pub struct SpreadParams {
    pub max_lstar: usize,
    pub max_j: usize,
    pub max_coeff: i64,
}

impl Default for SpreadParams {
    fn default() -> Self {
        SpreadParams {
            max_lstar: 3,
            max_j: 3,
            max_coeff: 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StructureError {
    #[error(transparent)]
    Scaffold(#[from] ScaffoldError),
    #[error(transparent)]
    Vector(#[from] QError),
}

fn injective_tuples(all: &[Elem], k: usize) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(all: &[Elem], k: usize, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for &x in all {
            if !cur.contains(&x) {
                cur.push(x);
                go(all, k, cur, out);
                cur.pop();
            }
        }
    }
    go(all, k, &mut cur, &mut out);
    out
}

fn combine(ys: &[Elem], qs: &[i64]) -> QVec {
    QVec::from_pairs(
        ys.iter()
            .zip(qs)
            .map(|(&y, &q)| (y, BigRational::from_integer(BigInt::from(q)))),
    )
}

fn subsets<T: Clone>(items: &[T], size: usize) -> Vec<Vec<T>> {
    let n = items.len();
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i].clone()).collect());
        let Some(i) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
            return out;
        };
        idx[i] += 1;
        for k in i + 1..size {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

/// Clauses (c)–(e) of the conclusion for one choice of lifts; (a) and (b)
/// hold by how the candidates are generated.
fn lifts_ok(m: &ScaffoldRI, ys: &[&Vec<Elem>]) -> bool {
    let j = ys[0].len();
    if !ys.iter().all(|y| m.is_reasonable(y).unwrap_or(false)) {
        return false;
    }
    let last: BTreeSet<Elem> = ys.iter().map(|y| y[j - 1]).collect();
    if last.len() != ys.len() {
        return false;
    }
    let private = |l: usize, i: usize| {
        let v = ys[l][i];
        ys.iter()
            .enumerate()
            .all(|(l2, y)| y.iter().enumerate().all(|(i2, &w)| w != v || (l2, i2) == (l, i)))
    };
    let owners: BTreeSet<usize> = (0..ys.len())
        .filter(|&l| (0..j).any(|i| private(l, i)))
        .collect();
    owners.len() >= 2
}

fn search_lifts(m: &ScaffoldRI, cands: &[Vec<Vec<Elem>>], chosen: &mut Vec<usize>) -> bool {
    if chosen.len() == cands.len() {
        let ys: Vec<&Vec<Elem>> = chosen.iter().enumerate().map(|(l, &c)| &cands[l][c]).collect();
        return lifts_ok(m, &ys);
    }
    let l = chosen.len();
    for c in 0..cands[l].len() {
        chosen.push(c);
        if search_lifts(m, cands, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Exhaustive check of the spreading claim over all hypotheses with
/// `2 ≤ j ≤ max_j`, `2 ≤ ℓ* ≤ max_lstar` and coefficients in `1..=max_coeff`.
pub fn spread_violations(m: &ScaffoldRI, params: &SpreadParams) -> Result<SpreadReport, StructureError> {
    let all = m.strata().all();
    let mut report = SpreadReport::default();
    for j in 2..=params.max_j {
        let tuples = injective_tuples(&all, j);
        let mut has_pred = BTreeSet::new();
        for w in &tuples {
            has_pred.extend(m.suc_k(w)?);
        }
        for xs in &tuples {
            if has_pred.contains(xs) || !m.is_reasonable(xs)? {
                continue;
            }
            let component = m.ek_component(xs)?;
            let mut above = Vec::new();
            for ys in &component {
                if m.leq_k(xs, ys)? {
                    above.push(ys.clone());
                }
            }
            let coeff_vectors = coefficient_vectors(params.max_coeff, j);
            for qs in &coeff_vectors {
                let a = combine(xs, qs);
                let class: Vec<QVec> = class_e_strict(m, &a, m.last_stage())?.into_iter().collect();
                for lstar in 2..=params.max_lstar {
                    for bs in subsets(&class, lstar) {
                        report.configurations += 1;
                        let cands: Vec<Vec<Vec<Elem>>> = bs
                            .iter()
                            .map(|b| {
                                above
                                    .iter()
                                    .filter(|ys| combine(ys, qs) == *b)
                                    .cloned()
                                    .collect()
                            })
                            .collect();
                        let stuck = cands.iter().position(|c| {
                            c.iter().all(|ys| !m.is_reasonable(ys).unwrap_or(false))
                        });
                        let reason = if let Some(l) = cands.iter().position(|c| c.is_empty()) {
                            Some(format!("b_{l} has no lift above x̄"))
                        } else if let Some(l) = stuck {
                            Some(format!("every lift of b_{l} is non-reasonable, clause (c)"))
                        } else if search_lifts(m, &cands, &mut Vec::new()) {
                            None
                        } else {
                            Some("no choice of lifts meets clauses (c)-(e)".to_string())
                        };
                        if let Some(reason) = reason {
                            report.violations.push(SpreadViolation {
                                xs: xs.clone(),
                                coeffs: qs.clone(),
                                bs,
                                reason,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// All vectors in `{1..=max}^j`.
fn coefficient_vectors(max: i64, j: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..j {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..=max).map(move |q| {
                    let mut w = v.clone();
                    w.push(q);
                    w
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_count() {
        assert_eq!(subsets(&[1, 2, 3, 4], 2).len(), 6);
        assert_eq!(subsets(&[1, 2, 3], 3), vec![vec![1, 2, 3]]);
        assert!(subsets(&[1], 2).is_empty());
        assert_eq!(coefficient_vectors(2, 3).len(), 8);
    }
}
