
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treegrp::profinite::{
    bezout_value, bezout_witnesses, cauchy_partial_sums, check_partial_sum_divisibility,
    component_candidates, embed_check, endo_respects_components, noncohopf_witness_check, EndoTable,
    ProfError, ProfModel,
};

fn window() -> ProfModel {
    "2: 2 8\n3: 9 3\n5: 25\n7: 7 49".parse().unwrap()
}

#[test]
fn component_examples() {
    let m: ProfModel = "2: 4\n3: 3".parse().unwrap();
    let a = m.parse_element("2:2 3:1").unwrap();
    assert_eq!(m.show(&m.component(&a, 2)), "2:2 3:0");
    let b = m.parse_element("2:0 3:1").unwrap();
    assert!(m.is_zero(&m.component(&b, 2)));
    assert!(m.is_zero(&m.component(&a, 11)));
}

#[test]
fn partial_sum_examples() {
    let m: ProfModel = "2: 4\n3: 9".parse().unwrap();
    let a = m.parse_element("2:2 3:3").unwrap();
    let w = check_partial_sum_divisibility(&m, &a, 4).unwrap();
    assert!(w.holds && m.is_zero(&w.difference));
    let zero_below = m.parse_element("2:0 3:4").unwrap();
    let w = check_partial_sum_divisibility(&m, &zero_below, 3).unwrap();
    assert!(w.holds);
    assert_eq!(m.scale(&BigInt::from(2), &w.quotient), w.difference);
    assert_eq!(
        check_partial_sum_divisibility(&m, &a, 1).unwrap_err(),
        ProfError::SmallIndex(1)
    );
}

/// Independent oracle for the Bézout coefficients: `ℓ_p ≡ (k/p^m)^{-1}`
/// modulo `p^m` exists for each `p`, found by search.
fn inverse_by_search(a: &BigInt, m: &BigInt) -> BigInt {
    let mut x = BigInt::zero();
    while !((a * &x - 1u32).is_multiple_of(m)) {
        x += 1;
    }
    x
}

#[test]
fn bezout_examples() {
    let l = bezout_witnesses(&[2, 3], 1).unwrap();
    assert_eq!(bezout_value(&l, 1), BigInt::one());
    assert_eq!(&l[&2] * 3 + &l[&3] * 2, BigInt::one());
    assert_eq!(l[&2], BigInt::one());
    assert_eq!(l[&3], BigInt::from(-1));
    let single = bezout_witnesses(&[7], 3).unwrap();
    assert_eq!(single[&7], BigInt::one());
    let l = bezout_witnesses(&[2, 3, 5], 2).unwrap();
    assert_eq!(bezout_value(&l, 2), BigInt::one());
    // Each ℓ_p inverts k/p^m modulo p^m.
    for (&p, lp) in &l {
        let pm = BigInt::from(p).pow(2);
        let cof = BigInt::from(900) / &pm;
        let inv = inverse_by_search(&cof, &pm);
        assert_eq!(lp.mod_floor(&pm), inv);
    }
    assert_eq!(bezout_witnesses(&[2, 2], 1).unwrap_err(), ProfError::DuplicatePrime(2));
}

#[test]
fn embed_examples() {
    let m = window();
    let g1 = m.parse_element("2:1,0 3:0,0 5:0 7:0,0").unwrap();
    let g2 = m.parse_element("2:0,0 3:1,0 5:0 7:0,0").unwrap();
    let r = embed_check(&m, &m.primes(), &[g1.clone(), g2.clone()], 2, 10_000).unwrap();
    assert!(r.injective);
    let dup = embed_check(&m, &m.primes(), &[g1.clone(), g1.clone()], 1, 10_000).unwrap();
    assert!(dup.injective && dup.expected_equal > 0);
    // Seen only through the 2-part, the 3-torsion generator is invisible.
    let hidden = embed_check(&m, &[2], &[g1, g2], 1, 10_000).unwrap();
    assert!(!hidden.injective);
    let (c1, c2) = hidden.counterexample.unwrap();
    assert_eq!(c1[0], c2[0]);
    assert_ne!(c1[1], c2[1]);
}

#[test]
fn cauchy_examples() {
    let m = window();
    let zero = m.zero();
    let s = cauchy_partial_sums(&m, &zero, 8);
    assert!(s.iter().all(|t| m.is_zero(&t.sum)));
    let two = m.parse_element("2:1,3 3:0,0 5:0 7:0,0").unwrap();
    let s = cauchy_partial_sums(&m, &two, 8);
    assert!(s[..2].iter().all(|t| m.is_zero(&t.sum)));
    assert!(s[2..].iter().all(|t| t.sum == two));
}

#[test]
fn endo_examples() {
    let m: ProfModel = "2: 8".parse().unwrap();
    let a = m.parse_element("2:5").unwrap();
    for pi in [EndoTable::identity(&m), EndoTable::scalar(&m, 3)] {
        assert!(endo_respects_components(&m, &pi, &a, 2).unwrap().holds);
    }
    let two: ProfModel = "2: 8\n3: 3".parse().unwrap();
    let a = two.parse_element("2:5 3:1").unwrap();
    let mut bad = EndoTable::identity(&two);
    bad.overrides.insert(two.component(&a, 2), two.parse_element("2:1 3:0").unwrap());
    let r = endo_respects_components(&two, &bad, &a, 2).unwrap();
    assert!(!r.holds);
    assert_ne!(r.lhs, r.rhs);
    let w: ProfModel = "2: 2\n3: 3".parse().unwrap();
    let mut leak = EndoTable::identity(&w);
    leak.images.insert((2, 0), w.parse_element("2:1 3:1").unwrap());
    assert_eq!(
        endo_respects_components(&w, &leak, &w.zero(), 2).unwrap_err(),
        ProfError::InconsistentEndo { p: 2, index: 0 }
    );
}

#[test]
fn noncohopf_examples() {
    let z4: ProfModel = "2: 4".parse().unwrap();
    let zero = EndoTable::scalar(&z4, 0);
    let one = z4.parse_element("2:1").unwrap();
    let r = noncohopf_witness_check(&z4, &zero, &one, 1000).unwrap();
    assert!(r.fixed_point_free && !r.z_avoids && !r.holds());
    let z2: ProfModel = "2: 2".parse().unwrap();
    let r = noncohopf_witness_check(&z2, &EndoTable::identity(&z2), &z2.zero(), 1000).unwrap();
    assert!(!r.fixed_point_free);
    let z5: ProfModel = "5: 5".parse().unwrap();
    let r = noncohopf_witness_check(&z5, &EndoTable::scalar(&z5, 2), &z5.parse_element("5:3").unwrap(), 1000)
        .unwrap();
    assert!(r.homomorphism && r.fixed_point_free && !r.z_avoids);
}

/// Oracle for `k | d`: search every element of the window.
fn brute_divides(m: &ProfModel, d: &treegrp::profinite::ProfVec, k: &BigInt) -> bool {
    m.all_elements(1_000_000)
        .unwrap()
        .iter()
        .any(|b| m.scale(k, b) == *d)
}

#[test]
fn window_identities_on_200_elements() {
    let m = window();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let small: ProfModel = "2: 2 4\n3: 3\n5: 5\n7: 7".parse().unwrap();
    for i in 0..200 {
        let a = m.random(&mut rng);
        for p in m.primes() {
            let c = m.component(&a, p);
            assert_eq!(m.component(&c, p), c);
            let cands = component_candidates(&m, &a, p, m.max_exponent());
            assert_eq!(cands, vec![c]);
            for pi in [EndoTable::identity(&m), EndoTable::scalar(&m, 5), EndoTable::scalar(&m, -3)] {
                assert!(endo_respects_components(&m, &pi, &a, p).unwrap().holds);
            }
        }
        let sum = m
            .primes()
            .iter()
            .fold(m.zero(), |s, &p| m.add(&s, &m.component(&a, p)));
        assert_eq!(sum, a);
        for n in 2..=8 {
            let w = check_partial_sum_divisibility(&m, &a, n).unwrap();
            assert!(w.holds, "n = {n}");
        }
        let idx: Vec<usize> = cauchy_partial_sums(&m, &a, 8).iter().map(|s| s.index).collect();
        assert!(idx.windows(2).all(|w| w[0] <= w[1]), "{idx:?}");
        // Cross-check divisibility on a window small enough to search.
        if i < 20 {
            let b = small.random(&mut rng);
            for n in 2..=8 {
                let w = check_partial_sum_divisibility(&small, &b, n).unwrap();
                let k: BigInt = (1..n).map(BigInt::from).product();
                assert!(brute_divides(&small, &w.difference, &k));
            }
        }
    }
}

proptest! {
    #[test]
    fn bezout_identity(mask in 1u32..64, m in 1u32..4) {
        let primes: Vec<u64> = [2, 3, 5, 7, 11, 13]
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| *p)
            .collect();
        let l = bezout_witnesses(&primes, m).unwrap();
        // Evaluate the identity from scratch.
        let k: BigInt = primes.iter().map(|&p| BigInt::from(p).pow(m)).product();
        let total: BigInt = l.iter().map(|(&p, lp)| lp * (&k / BigInt::from(p).pow(m))).sum();
        prop_assert_eq!(total, BigInt::one());
    }

    #[test]
    fn component_is_an_additive_projection(seed in 0u64..1000) {
        let m = window();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (m.random(&mut rng), m.random(&mut rng));
        for p in m.primes() {
            prop_assert_eq!(
                m.component(&m.add(&a, &b), p),
                m.add(&m.component(&a, p), &m.component(&b, p))
            );
        }
    }

    #[test]
    fn divide_matches_definition(seed in 0u64..500, k in 1i64..50) {
        let m: ProfModel = "2: 2 4\n3: 9\n5: 5".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = m.random(&mut rng);
        let kb = BigInt::from(k);
        match m.divide(&a, &kb) {
            Some(b) => prop_assert_eq!(m.scale(&kb, &b), a),
            None => prop_assert!(!brute_divides(&m, &a, &kb)),
        }
    }
}

#[test]
fn model_file_rejects_bad_lines() {
    assert!("4: 4".parse::<ProfModel>().is_err());
    assert!("2 4".parse::<ProfModel>().is_err());
    assert!("2: 4\n2: 8".parse::<ProfModel>().is_err());
    let m: ProfModel = "".parse().unwrap();
    assert_eq!(m.primes(), Vec::<u64>::new());
}
