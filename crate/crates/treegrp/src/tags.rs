//! The prime tag table `a ↦ p_a` on a truncation of `G_0^+`.
//!
//! Elements are enumerated by `(𝐧(a), sorted support, coefficient vector)`,
//! where supports compare lexicographically as sorted lists and coefficients
//! run through `1, −1, 2, −2, …, C, −C`. Each element receives the smallest
//! unused prime that divides none of its coefficients. The table is filled
//! lazily, so asking for `a_2` costs a handful of steps while a forward
//! lookup deep in the order may hit the budget.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::lattice::is_prime;
use crate::qvec::QVec;
use crate::scaffold::{Elem, Strata};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("{0} is not in the truncated tag table")]
    OutsideTable(String),
    #[error("tag lookup needs more than {0} table entries")]
    BudgetExceeded(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TagParams {
    /// Supports lie in `X_{stage_bound}`.
    pub stage_bound: usize,
    /// Coefficients lie in `[−C, C] \ {0}`.
    pub coeff_bound: u32,
    /// Largest support size enumerated.
    pub max_support: usize,
    /// Entries the lazy enumeration may create.
    pub budget: usize,
}

impl Default for TagParams {
    fn default() -> Self {
        TagParams {
            stage_bound: 1,
            coeff_bound: 3,
            max_support: 3,
            budget: 200_000,
        }
    }
}

/// Position in the canonical order.
#[derive(Clone, Debug)]
struct Cursor {
    stage: usize,
    pool: Vec<Elem>,
    /// Indices into `pool`, strictly increasing.
    support: Vec<usize>,
    /// Indices into the coefficient order, one per support element.
    digits: Vec<usize>,
    done: bool,
}

#[derive(Debug)]
struct State {
    entries: Vec<(QVec, u64)>,
    by_elem: BTreeMap<QVec, u64>,
    by_prime: BTreeMap<u64, usize>,
    /// Unused primes below `fresh`; they divide some admissible coefficient.
    skipped: std::collections::BTreeSet<u64>,
    fresh: u64,
    cursor: Cursor,
}

#[derive(Debug)]
pub struct TagTable {
    params: TagParams,
    stages: Vec<Vec<Elem>>,
    births: BTreeMap<Elem, usize>,
    state: Mutex<State>,
}

impl TagTable {
    pub fn new(strata: &Strata, params: TagParams) -> Self {
        let bound = params.stage_bound.min(strata.last_stage());
        let stages: Vec<Vec<Elem>> = (0..=bound).map(|n| strata.upto(n)).collect();
        let births = stages
            .last()
            .into_iter()
            .flatten()
            .filter_map(|&x| strata.birth(x).map(|b| (x, b)))
            .collect();
        let cursor = Cursor {
            stage: 0,
            pool: stages.first().cloned().unwrap_or_default(),
            support: Vec::new(),
            digits: Vec::new(),
            done: stages.is_empty() || params.coeff_bound == 0 || params.max_support == 0,
        };
        let mut table = TagTable {
            params: TagParams {
                stage_bound: bound,
                ..params
            },
            stages,
            births,
            state: Mutex::new(State {
                entries: Vec::new(),
                by_elem: BTreeMap::new(),
                by_prime: BTreeMap::new(),
                skipped: Default::default(),
                fresh: 2,
                cursor,
            }),
        };
        table.prime_cursor();
        table
    }

    fn prime_cursor(&mut self) {
        let mut cursor = self.state.get_mut().expect("tag table lock").cursor.clone();
        if !cursor.done && !self.advance_support(&mut cursor) {
            cursor.done = true;
        }
        self.state.get_mut().expect("tag table lock").cursor = cursor;
    }

    pub fn params(&self) -> TagParams {
        self.params
    }

    fn coefficient(&self, digit: usize) -> i64 {
        let m = (digit / 2 + 1) as i64;
        if digit % 2 == 0 {
            m
        } else {
            -m
        }
    }

    fn in_table(&self, a: &QVec) -> bool {
        !a.is_zero()
            && a.len() <= self.params.max_support
            && a.support().iter().all(|x| self.births.contains_key(x))
            && a.terms().all(|(_, q)| {
                q.is_integer()
                    && q.to_integer().abs() <= BigInt::from(self.params.coeff_bound)
            })
    }

    /// Moves to the next support at the current stage (or later) that
    /// contains an element of the current birth; resets the digits.
    fn advance_support(&self, c: &mut Cursor) -> bool {
        loop {
            if !self.next_subset(c) {
                c.stage += 1;
                if c.stage >= self.stages.len() {
                    return false;
                }
                c.pool = self.stages[c.stage].clone();
                c.support.clear();
                continue;
            }
            let stage = c.stage;
            if c.support
                .iter()
                .any(|&i| self.births.get(&c.pool[i]) == Some(&stage))
            {
                c.digits = vec![0; c.support.len()];
                return true;
            }
        }
    }

    /// Lexicographic pre-order over sorted index lists.
    fn next_subset(&self, c: &mut Cursor) -> bool {
        let n = c.pool.len();
        if n == 0 {
            return false;
        }
        if c.support.is_empty() {
            c.support.push(0);
            return true;
        }
        let last = *c.support.last().expect("nonempty");
        if c.support.len() < self.params.max_support && last + 1 < n {
            c.support.push(last + 1);
            return true;
        }
        loop {
            let last = c.support.pop().expect("nonempty");
            if last + 1 < n {
                c.support.push(last + 1);
                return true;
            }
            if c.support.is_empty() {
                return false;
            }
        }
    }

    fn next_digits(&self, c: &mut Cursor) -> bool {
        let top = 2 * self.params.coeff_bound as usize;
        for i in (0..c.digits.len()).rev() {
            c.digits[i] += 1;
            if c.digits[i] < top {
                return true;
            }
            c.digits[i] = 0;
        }
        false
    }

    /// Adds one entry; false once the table is exhausted.
    fn step(&self, state: &mut State) -> Result<bool, TagError> {
        if state.cursor.done {
            return Ok(false);
        }
        if state.entries.len() >= self.params.budget {
            return Err(TagError::BudgetExceeded(self.params.budget));
        }
        let c = &state.cursor;
        let coeffs: Vec<i64> = c.digits.iter().map(|&d| self.coefficient(d)).collect();
        let a = QVec::from_ints(
            &c.support
                .iter()
                .zip(&coeffs)
                .map(|(&i, &q)| (c.pool[i], q))
                .collect::<Vec<_>>(),
        );
        let fits = |p: u64| coeffs.iter().all(|q| q.unsigned_abs() % p != 0);
        let p = match state.skipped.iter().copied().find(|&p| fits(p)) {
            Some(p) => {
                state.skipped.remove(&p);
                p
            }
            None => loop {
                let p = state.fresh;
                state.fresh += 1;
                if !is_prime(p) {
                    continue;
                }
                if fits(p) {
                    break p;
                }
                state.skipped.insert(p);
            },
        };
        state.by_prime.insert(p, state.entries.len());
        state.by_elem.insert(a.clone(), p);
        state.entries.push((a, p));
        let mut cursor = state.cursor.clone();
        if !self.next_digits(&mut cursor) && !self.advance_support(&mut cursor) {
            cursor.done = true;
        }
        state.cursor = cursor;
        Ok(true)
    }

    /// `p_a`.
    pub fn tag(&self, a: &QVec) -> Result<u64, TagError> {
        if !self.in_table(a) {
            return Err(TagError::OutsideTable(a.to_string()));
        }
        let mut state = self.state.lock().expect("tag table lock");
        loop {
            if let Some(&p) = state.by_elem.get(a) {
                return Ok(p);
            }
            if !self.step(&mut state)? {
                return Err(TagError::OutsideTable(a.to_string()));
            }
        }
    }

    /// `a_p`, the element tagged `p`, if any.
    pub fn owner(&self, p: u64) -> Result<Option<QVec>, TagError> {
        if !is_prime(p) {
            return Ok(None);
        }
        let mut state = self.state.lock().expect("tag table lock");
        loop {
            if let Some(&i) = state.by_prime.get(&p) {
                return Ok(Some(state.entries[i].0.clone()));
            }
            if !self.step(&mut state)? {
                return Ok(None);
            }
        }
    }

    pub fn owner_big(&self, p: &BigInt) -> Result<Option<QVec>, TagError> {
        match p.to_u64() {
            Some(p) => self.owner(p),
            None => Ok(None),
        }
    }

    /// The first `k` entries in canonical order.
    pub fn prefix(&self, k: usize) -> Result<Vec<(QVec, u64)>, TagError> {
        let mut state = self.state.lock().expect("tag table lock");
        while state.entries.len() < k {
            if !self.step(&mut state)? {
                break;
            }
        }
        Ok(state.entries.iter().take(k).cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strata() -> Strata {
        Strata::from_births([(0, 0), (1, 1), (2, 1)].into_iter().collect(), 1)
    }

    #[test]
    fn first_tags_on_a_singleton() {
        let t = TagTable::new(&strata(), TagParams::default());
        let got = t.prefix(6).unwrap();
        let want = [(1, 2), (-1, 3), (2, 5), (-2, 7), (3, 11), (-3, 13)];
        for ((a, p), (q, wp)) in got.iter().zip(want) {
            assert_eq!(*a, QVec::from_ints(&[(0, q)]));
            assert_eq!(*p, wp);
        }
        // Stage 1 starts with [0,1] = (1,1), then the next prime not yet used.
        assert_eq!(t.tag(&QVec::from_ints(&[(0, 1), (1, 1)])).unwrap(), 17);
        assert_eq!(t.owner(2).unwrap(), Some(QVec::basis(0)));
        assert_eq!(t.owner(4).unwrap(), None);
    }

    #[test]
    fn skips_primes_dividing_coefficients() {
        let t = TagTable::new(&strata(), TagParams::default());
        let p = t.tag(&QVec::from_ints(&[(0, 2), (1, 3)])).unwrap();
        assert!(p != 2 && p != 3);
        assert!(t.tag(&QVec::from_ints(&[(0, 4)])).is_err());
    }

    #[test]
    fn injective() {
        let t = TagTable::new(&strata(), TagParams::default());
        let all = t.prefix(10_000).unwrap();
        let mut primes: Vec<u64> = all.iter().map(|e| e.1).collect();
        primes.sort();
        primes.dedup();
        assert_eq!(primes.len(), all.len());
    }
}
