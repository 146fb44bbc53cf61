//! Exact linear algebra: Z-span membership, Q-row reduction and linear
//! congruences modulo prime powers.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::qvec::QVec;
use crate::scaffold::Elem;

/// p-adic valuation of a nonzero integer.
pub fn val_int(n: &BigInt, p: &BigInt) -> u32 {
    assert!(!n.is_zero());
    let mut n = n.clone();
    let mut v = 0;
    while (&n % p).is_zero() {
        n /= p;
        v += 1;
    }
    v
}

/// p-adic valuation of a nonzero rational.
pub fn val_rat(q: &BigRational, p: &BigInt) -> i64 {
    val_int(q.numer(), p) as i64 - val_int(q.denom(), p) as i64
}

pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

/// Image of a `p`-integral rational in `Z/m` for `m` a power of `p`.
pub fn rat_mod(q: &BigRational, m: &BigInt) -> Option<BigInt> {
    let inv = mod_inverse(q.denom(), m)?;
    Some((q.numer() * inv).mod_floor(m))
}

/// Columns used by a family of vectors, the target included.
fn coordinates<'a>(vs: impl IntoIterator<Item = &'a QVec>) -> Vec<Elem> {
    let mut set = BTreeSet::new();
    for v in vs {
        set.extend(v.support());
    }
    set.into_iter().collect()
}

/// Integer coefficients `c` with `Σ c_i g_i = target`, if any.
pub fn z_span_solve(gens: &[QVec], target: &QVec) -> Option<Vec<BigInt>> {
    let cols = coordinates(gens.iter().chain([target]));
    let mut den = target.denominator();
    for g in gens {
        den = den.lcm(&g.denominator());
    }
    let scale = BigRational::from_integer(den);
    let to_row = |v: &QVec| -> Vec<BigInt> {
        cols.iter()
            .map(|&c| (v.get(c) * &scale).to_integer())
            .collect()
    };
    let k = gens.len();
    let mut rows: Vec<Vec<BigInt>> = gens.iter().map(to_row).collect();
    // Unimodular transform, rows[i] = Σ_j u[i][j] gens[j].
    let mut u: Vec<Vec<BigInt>> = (0..k)
        .map(|i| (0..k).map(|j| BigInt::from((i == j) as i32)).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols.len() {
        // Euclid on column c among rows r.., leaving one nonzero entry.
        loop {
            let nz: Vec<usize> = (r..k).filter(|&i| !rows[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&i) = nz.first() {
                    rows.swap(r, i);
                    u.swap(r, i);
                    pivots.push((r, c));
                    r += 1;
                }
                break;
            }
            let &best = nz
                .iter()
                .min_by_key(|&&i| rows[i][c].abs())
                .expect("nonempty");
            for &i in &nz {
                if i == best {
                    continue;
                }
                let f = rows[i][c].div_floor(&rows[best][c]);
                for j in 0..cols.len() {
                    let d = &f * &rows[best][j];
                    rows[i][j] -= d;
                }
                for j in 0..k {
                    let d = &f * &u[best][j];
                    u[i][j] -= d;
                }
            }
        }
        if r == k {
            break;
        }
    }
    let mut b = to_row(target);
    let mut coef = vec![BigInt::zero(); k];
    for &(i, c) in &pivots {
        if b[c].is_zero() {
            continue;
        }
        let (q, rem) = b[c].div_rem(&rows[i][c]);
        if !rem.is_zero() {
            return None;
        }
        for j in 0..cols.len() {
            let d = &q * &rows[i][j];
            b[j] -= d;
        }
        for j in 0..k {
            coef[j] += &q * &u[i][j];
        }
    }
    b.iter().all(Zero::is_zero).then_some(coef)
}

/// Reduced row echelon form of the Q-span of `gens`.
#[derive(Clone, Debug)]
pub struct Rref {
    /// Reduced rows as vectors.
    pub rows: Vec<QVec>,
    /// Pivot coordinate of each row.
    pub pivots: Vec<Elem>,
    /// `rows[i] = Σ_j transform[i][j] · gens[j]`.
    pub transform: Vec<Vec<BigRational>>,
}

pub fn rref(gens: &[QVec]) -> Rref {
    let cols = coordinates(gens);
    let k = gens.len();
    let mut rows: Vec<Vec<BigRational>> = gens
        .iter()
        .map(|g| cols.iter().map(|&c| g.get(c)).collect())
        .collect();
    let mut t: Vec<Vec<BigRational>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols.len() {
        let Some(i) = (r..k).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, i);
        t.swap(r, i);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for x in t[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..k {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            for j in 0..cols.len() {
                let d = &f * &rows[r][j];
                rows[i][j] -= d;
            }
            for j in 0..k {
                let d = &f * &t[r][j];
                t[i][j] -= d;
            }
        }
        pivots.push(cols[c]);
        r += 1;
        if r == k {
            break;
        }
    }
    Rref {
        rows: rows[..r]
            .iter()
            .map(|row| QVec::from_pairs(cols.iter().copied().zip(row.iter().cloned())))
            .collect(),
        pivots,
        transform: t[..r].to_vec(),
    }
}

/// Solves `A x ≡ b (mod p^e)` by Smith-style elimination.
pub fn solve_mod_prime_power(
    a: &[Vec<BigInt>],
    b: &[BigInt],
    p: &BigInt,
    e: u32,
) -> Option<Vec<BigInt>> {
    let q = p.pow(e);
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .map(|r| r.iter().map(|x| x.mod_floor(&q)).collect())
        .collect();
    let mut rhs: Vec<BigInt> = b.iter().map(|x| x.mod_floor(&q)).collect();
    let mut v: Vec<Vec<BigInt>> = (0..cols)
        .map(|i| (0..cols).map(|j| BigInt::from((i == j) as i32)).collect())
        .collect();
    let mut diag = Vec::new();
    let mut k = 0;
    while k < rows.min(cols) {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                if !m[i][j].is_zero() {
                    let val = val_int(&m[i][j], p);
                    if best.is_none_or(|(bv, _, _)| val < bv) {
                        best = Some((val, i, j));
                    }
                }
            }
        }
        let Some((val, bi, bj)) = best else { break };
        m.swap(k, bi);
        rhs.swap(k, bi);
        for row in m.iter_mut() {
            row.swap(k, bj);
        }
        for row in v.iter_mut() {
            row.swap(k, bj);
        }
        let pv = p.pow(val);
        let unit_inv = mod_inverse(&(&m[k][k] / &pv), &q).expect("unit");
        for i in 0..rows {
            if i == k || m[i][k].is_zero() {
                continue;
            }
            let f = (&m[i][k] / &pv * &unit_inv).mod_floor(&q);
            for j in 0..cols {
                let d = &f * &m[k][j];
                m[i][j] = (&m[i][j] - d).mod_floor(&q);
            }
            rhs[i] = (&rhs[i] - &f * &rhs[k]).mod_floor(&q);
        }
        for j in (k + 1)..cols {
            if m[k][j].is_zero() {
                continue;
            }
            let f = (&m[k][j] / &pv * &unit_inv).mod_floor(&q);
            m[k][j] = BigInt::zero();
            for row in v.iter_mut() {
                row[j] = (&row[j] - &f * &row[k]).mod_floor(&q);
            }
        }
        diag.push((val, unit_inv));
        k += 1;
    }
    let mut y = vec![BigInt::zero(); cols];
    for (i, (val, unit_inv)) in diag.iter().enumerate() {
        if rhs[i].is_zero() {
            continue;
        }
        let pv = p.pow(*val);
        if !(&rhs[i] % &pv).is_zero() {
            return None;
        }
        y[i] = (&rhs[i] / &pv * unit_inv).mod_floor(&q);
    }
    if rhs[diag.len()..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let x = (0..cols)
        .map(|i| {
            (0..cols)
                .fold(BigInt::zero(), |acc, j| acc + &v[i][j] * &y[j])
                .mod_floor(&q)
        })
        .collect();
    Some(x)
}

/// Solution of the p-local problem `v ∈ Z_(p)^X + span_Q(W) + span_{Z_(p)}(L)`.
#[derive(Clone, Debug)]
pub struct LocalSolution {
    /// Rational coefficients on the `W` generators.
    pub w_coeffs: Vec<BigRational>,
    /// Integer coefficients on the `L` generators, meaningful modulo a power of `p`.
    pub l_coeffs: Vec<BigInt>,
}

fn max_neg_val(qs: impl IntoIterator<Item = BigRational>, p: &BigInt) -> u32 {
    qs.into_iter()
        .filter(|q| !q.is_zero())
        .map(|q| (-val_rat(&q, p)).max(0) as u32)
        .max()
        .unwrap_or(0)
}

pub fn local_solve(v: &QVec, w: &[QVec], l: &[QVec], p: &BigInt) -> Option<LocalSolution> {
    let red = rref(w);
    let pivot_set: BTreeSet<Elem> = red.pivots.iter().copied().collect();
    let reduce = |g: &QVec| -> QVec {
        let mut out = g.clone();
        for (row, &c) in red.rows.iter().zip(&red.pivots) {
            let f = g.get(c);
            if !f.is_zero() {
                out = &out - &row.scale(&f);
            }
        }
        out
    };
    let u = reduce(v);
    let l_red: Vec<QVec> = l.iter().map(reduce).collect();
    let cols: Vec<Elem> = coordinates(red.rows.iter().chain(&l_red).chain([&u]))
        .into_iter()
        .filter(|c| !pivot_set.contains(c))
        .collect();
    // Unknowns: ν_i (one per reduced row) then μ_g; equation per free column:
    // u + Σ ν_i R_i − Σ μ_g g' ≡ 0.
    let mut mat: Vec<Vec<BigRational>> = cols
        .iter()
        .map(|&c| {
            red.rows
                .iter()
                .map(|r| r.get(c))
                .chain(l_red.iter().map(|g| -g.get(c)))
                .collect()
        })
        .collect();
    let rhs: Vec<BigRational> = cols.iter().map(|&c| -u.get(c)).collect();
    let e = max_neg_val(
        mat.iter().flatten().cloned().chain(rhs.iter().cloned()),
        p,
    );
    let nu_mu = if e == 0 {
        vec![BigInt::zero(); red.rows.len() + l.len()]
    } else {
        let scale = BigRational::from_integer(p.pow(e));
        let q = p.pow(e);
        for row in mat.iter_mut() {
            for x in row.iter_mut() {
                *x *= &scale;
            }
        }
        let a: Vec<Vec<BigInt>> = mat
            .iter()
            .map(|r| r.iter().map(|x| rat_mod(x, &q).expect("p-integral")).collect())
            .collect();
        let b: Vec<BigInt> = rhs
            .iter()
            .map(|x| rat_mod(&(x * &scale), &q).expect("p-integral"))
            .collect();
        if a.is_empty() {
            vec![BigInt::zero(); red.rows.len() + l.len()]
        } else {
            solve_mod_prime_power(&a, &b, p, e)?
        }
    };
    let (nu, mu) = nu_mu.split_at(red.rows.len());
    let mut lmu = QVec::zero();
    for (g, c) in l.iter().zip(mu) {
        lmu = &lmu + &g.scale(&BigRational::from_integer(c.clone()));
    }
    // Row coefficient λ_i = v_{c_i} − (Lμ)_{c_i} − ν_i, then back to `w`.
    let mut w_coeffs = vec![BigRational::zero(); w.len()];
    for (i, &c) in red.pivots.iter().enumerate() {
        let lam = v.get(c) - lmu.get(c) - BigRational::from_integer(nu[i].clone());
        for (j, t) in red.transform[i].iter().enumerate() {
            w_coeffs[j] += &lam * t;
        }
    }
    Some(LocalSolution {
        w_coeffs,
        l_coeffs: mu.to_vec(),
    })
}

/// The `p`-part of `q` in its partial-fraction decomposition: `k/p^e` with
/// `q − k/p^e` p-integral and `0 ≤ k < p^e`.
pub fn p_part(q: &BigRational, p: &BigInt) -> BigRational {
    if q.is_zero() {
        return BigRational::zero();
    }
    let e = val_int(q.denom(), p);
    if e == 0 {
        return BigRational::zero();
    }
    let pe = p.pow(e);
    let rest = q.denom() / &pe;
    let inv = mod_inverse(&rest, &pe).expect("coprime");
    let k = (q.numer() * inv).mod_floor(&pe);
    BigRational::new(k, pe)
}

pub fn prime_factors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::from(2);
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            out.push(d.clone());
            while (&n % &d).is_zero() {
                n /= &d;
            }
        }
        d += 1;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Chinese remaindering of `x ≡ r_i (mod m_i)` for pairwise coprime moduli.
pub fn crt(pairs: &[(BigInt, BigInt)]) -> BigInt {
    let mut x = BigInt::zero();
    let mut m = BigInt::one();
    for (r, mi) in pairs {
        let inv = mod_inverse(&m, mi).expect("coprime moduli");
        let t = ((r - &x) * inv).mod_floor(mi);
        x += &m * t;
        m *= mi;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qvec::{int, rat};

    #[test]
    fn z_span() {
        let g = vec![QVec::from_ints(&[(0, 2)]), QVec::from_ints(&[(0, 3), (1, 1)])];
        let t = QVec::from_ints(&[(0, 1), (1, 1)]);
        let c = z_span_solve(&g, &t).unwrap();
        assert_eq!(c, vec![BigInt::from(-1), BigInt::from(1)]);
        assert!(z_span_solve(&g, &QVec::from_ints(&[(0, 1)])).is_none());
        assert_eq!(z_span_solve(&[], &QVec::zero()), Some(vec![]));
    }

    #[test]
    fn congruences() {
        let p = BigInt::from(2);
        let a = vec![vec![BigInt::from(2)], vec![BigInt::from(0)]];
        let x = solve_mod_prime_power(&a, &[BigInt::from(6), BigInt::from(0)], &p, 3).unwrap();
        assert_eq!((BigInt::from(2) * &x[0]).mod_floor(&BigInt::from(8)), BigInt::from(6));
        assert!(solve_mod_prime_power(&a, &[BigInt::from(1), BigInt::from(0)], &p, 3).is_none());
    }

    #[test]
    fn local_problem() {
        let p = BigInt::from(2);
        let x0 = QVec::basis(0);
        let half = x0.scale(&rat(1, 2));
        assert!(local_solve(&half, &[], &[], &p).is_none());
        assert!(local_solve(&half, &[x0.clone()], &[], &p).is_some());
        assert!(local_solve(&half, &[], &[half.clone()], &p).is_some());
        let mixed = QVec::from_pairs([(0, rat(1, 2)), (1, rat(1, 2))]);
        assert!(local_solve(&mixed, &[x0.clone()], &[], &p).is_none());
        let s = local_solve(&mixed, &[QVec::from_ints(&[(0, 1), (1, 1)])], &[], &p).unwrap();
        assert_eq!(s.w_coeffs.len(), 1);
        assert_eq!(local_solve(&mixed, &[], &[], &BigInt::from(3)).map(|_| ()), Some(()));
    }

    #[test]
    fn partial_fractions() {
        let p = BigInt::from(2);
        let q = rat(5, 12);
        let k = p_part(&q, &p);
        assert_eq!(*k.denom(), BigInt::from(4));
        assert!(val_rat(&(&q - &k), &p) >= 0);
        assert_eq!(p_part(&int(3), &p), int(0));
        assert_eq!(prime_factors(&BigInt::from(360)), vec![2.into(), 3.into(), 5.into()]);
        assert_eq!(crt(&[(1.into(), 4.into()), (2.into(), 9.into())]), BigInt::from(29));
    }
}
