use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use proptest::prelude::*;

use treegrp::g1::{Divisibility, Evidence, G1Ho, G1Ri, GenCert, Membership, PCert};
use treegrp::qvec::{class_e, int, rat, QVec};
use treegrp::scaffold::ho::{build_ho, HoParams, ScaffoldHO};
use treegrp::scaffold::ri::{build_ri, RiParams, ScaffoldRI};
use treegrp::tags::{TagParams, TagTable};
use treegrp::tree::{chain_tree, parse_tree, Variant};

fn running() -> ScaffoldRI {
    build_ri(&chain_tree(Variant::Ri, 1, true), &RiParams::default()).unwrap()
}

fn tags_for(strata: &treegrp::scaffold::Strata, bound: usize) -> TagTable {
    TagTable::new(
        strata,
        TagParams {
            stage_bound: bound,
            ..TagParams::default()
        },
    )
}

/// Independent oracle: `v` with a single prime `p` in its denominator lies in
/// `Z_(p)^X + span_Q(W)` iff some `Σ (k_j / p^e) w_j` with `0 ≤ k_j < p^e`
/// adjusts it to a p-integral vector, where `p^e` clears `v`.
fn brute_local(v: &QVec, w: &[QVec], p: u64) -> bool {
    let pb = BigInt::from(p);
    let mut e = 0u32;
    let mut d = v.denominator();
    while d.is_multiple_of(&pb) {
        d /= &pb;
        e += 1;
    }
    let pe = p.pow(e);
    let p_integral = |u: &QVec| u.terms().all(|(_, q)| !q.denom().is_multiple_of(&pb));
    let mut digits = vec![0u64; w.len()];
    loop {
        let mut u = v.clone();
        for (wj, k) in w.iter().zip(&digits) {
            u = &u - &wj.scale(&rat(*k as i64, pe as i64));
        }
        if p_integral(&u) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return false;
            }
            digits[i] += 1;
            if digits[i] < pe {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn rigid_divisibility_running_example() {
    let m = running();
    let tags = tags_for(m.strata(), 1);
    let g = G1Ri::new(&m, &tags, 10_000);
    let x0 = QVec::basis(0);
    // p = p_a: every power.
    for k in [1, 5, 20] {
        let d = g.divides(&x0, 2, k).unwrap();
        assert!(matches!(
            d.cert().unwrap().evidence,
            Evidence::RiClass { .. }
        ));
        g.verify(d.cert().unwrap()).unwrap();
    }
    // p = p_b for b in the class of a.
    let x1 = QVec::basis(1);
    let d = g.divides(&x1, 2, 3).unwrap();
    g.verify(d.cert().unwrap()).unwrap();
    // the filler x3 has a singleton class: tag 2 does not divide it.
    let x3 = QVec::basis(3);
    assert_eq!(
        g.divides(&x3, 2, 1).unwrap(),
        Divisibility::FalseWithinBudget { budget_hit: false }
    );
    let p3 = tags.tag(&x3).unwrap();
    assert!(g.divides(&x3, p3, 4).unwrap().is_true());
}

#[test]
fn rigid_p_a_running_example() {
    let m = running();
    let tags = tags_for(m.strata(), 1);
    let g = G1Ri::new(&m, &tags, 10_000);
    let want: std::collections::BTreeSet<u64> = [0, 1, 2]
        .iter()
        .map(|&x| tags.tag(&QVec::basis(x)).unwrap())
        .collect();
    assert_eq!(g.p_a(&QVec::basis(0), 1).unwrap(), want);
    let at0 = g.p_a(&QVec::basis(0), 0).unwrap();
    assert!(at0.is_subset(&want));
    assert_eq!(at0, [2].into_iter().collect());
    assert_eq!(g.p_a(&QVec::basis(3), 1).unwrap().len(), 1);
    assert!(g.p_a(&QVec::zero(), 1).is_err());
    assert_eq!(g.g1p_generators(2).unwrap().len(), 3);
}

#[test]
fn rigid_membership_frozen_values() {
    let m = running();
    let tags = tags_for(m.strata(), 1);
    let g = G1Ri::new(&m, &tags, 10_000);
    let cases: Vec<(QVec, bool)> = vec![
        (QVec::from_pairs([(0, rat(1, 2)), (1, rat(1, 2))]), true),
        (QVec::from_pairs([(0, rat(1, 6)), (2, rat(5, 4))]), true),
        (QVec::from_pairs([(3, rat(1, 2))]), false),
        (QVec::from_pairs([(0, rat(1, 2)), (3, rat(1, 2))]), false),
        (QVec::from_pairs([(0, rat(3, 1))]), true),
    ];
    for (v, want) in cases {
        let got = g.member(&v).unwrap();
        assert_eq!(got.is_true(), want, "{v}");
        if let Membership::True(c) = got {
            assert_eq!(c.target, v);
            assert!(c.integral.is_integral());
        }
    }
}

#[test]
fn rigid_membership_matches_brute_force_on_single_primes() {
    let m = running();
    let tags = tags_for(m.strata(), 1);
    let g = G1Ri::new(&m, &tags, 10_000);
    for p in [2u64, 3, 5, 7] {
        let w = match tags.owner(p).unwrap() {
            Some(o) => class_e(&m, &o, m.last_stage()).unwrap().into_iter().collect(),
            None => Vec::new(),
        };
        for a in 0..p as i64 {
            for b in 0..p as i64 {
                for c in [0i64, 1] {
                    let v = QVec::from_pairs([
                        (0, rat(a, p as i64)),
                        (1, rat(b, p as i64)),
                        (3, rat(c, p as i64)),
                    ]);
                    if v.is_integral() {
                        continue;
                    }
                    assert_eq!(
                        g.member(&v).unwrap().is_true(),
                        brute_local(&v, &w, p),
                        "{v} at {p}"
                    );
                }
            }
        }
    }
}

#[test]
fn rigid_tampered_certificates_are_rejected() {
    let m = running();
    let tags = tags_for(m.strata(), 1);
    let g = G1Ri::new(&m, &tags, 10_000);
    let v = QVec::from_pairs([(0, rat(1, 4)), (2, rat(1, 2))]);
    let Divisibility::True(cert) = g
        .divides(&QVec::from_ints(&[(0, 1), (2, 2)]), 2, 2)
        .unwrap()
    else {
        panic!("expected divisibility");
    };
    g.verify(&cert).unwrap();
    let Evidence::Combination(c) = &cert.evidence else {
        panic!("expected a combination for a two-term vector");
    };
    assert_eq!(c.target, v);
    let mut bad = cert.clone();
    bad.p = 3;
    assert!(g.verify(&bad).is_err());
    let mut bad = cert.clone();
    if let Evidence::Combination(c) = &mut bad.evidence {
        c.integral = &c.integral + &QVec::basis(1);
    }
    assert!(g.verify(&bad).is_err());
    let mut bad = cert.clone();
    if let Evidence::Combination(c) = &mut bad.evidence {
        if let GenCert::RiClass { p, .. } = &mut c.terms[0].gen {
            *p = 5;
        }
    }
    assert!(g.verify(&bad).is_err());
    let text = cert.to_string();
    assert!(text.starts_with("divcert v1\nflavor ri\n"));
}

proptest! {
    #[test]
    fn rigid_soundness(a in -8i64..8, b in -8i64..8, c in -8i64..8, d in 1i64..13) {
        let m = running();
        let tags = tags_for(m.strata(), 1);
        let g = G1Ri::new(&m, &tags, 10_000);
        let v = QVec::from_pairs([(0, rat(a, d)), (2, rat(b, d)), (4, rat(c, d))]);
        if let Membership::True(cert) = g.member(&v).unwrap() {
            let sum = cert.terms.iter().fold(cert.integral.clone(), |acc, t| {
                &acc + &t.gen.element().scale(&t.coeff)
            });
            prop_assert_eq!(sum, v);
            prop_assert!(cert.integral.is_integral());
        }
    }
}

// Hopfian flavour ------------------------------------------------------------

const HO_TREE: &str = "variant ho\nt0 - 0\nt1 t0 1\nt2 t0 1\nt3 t1 2\nt4 t1 2\nbranch: t0 t1 t3\n";

fn ho_model() -> ScaffoldHO {
    let tree = parse_tree(HO_TREE).unwrap();
    build_ho(
        &tree,
        &HoParams {
            tuple_cap: 1,
            ..HoParams::default()
        },
    )
    .unwrap()
}

#[test]
fn hopfian_base_clause() {
    let m = ho_model();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 5_000);
    let x0 = QVec::basis(0);
    let pc = g.p_member(&x0, 2, 7, 0).unwrap().unwrap();
    assert!(matches!(pc, PCert::Base { .. }));
    let d = g.divides(&x0, 2, 7, 0).unwrap();
    g.verify(d.cert().unwrap()).unwrap();
    // b ≤_* a_p: the image of a stage-1 preimage of x0 is x0 itself.
    assert_eq!(g.g1p_generators(2).unwrap(), vec![x0.clone()]);
}

#[test]
fn hopfian_step_clause() {
    let m = ho_model();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 5_000);
    let t3 = m.tree().by_name("t3").unwrap();
    let zs = m.witness(2, t3, &[0]).unwrap().to_vec();
    let z = QVec::basis(zs[0]);
    // (1/2) f_t(z) = x0 / 2 ∈ G_(1,1), 2 ≤ 2, 2 | 2!.
    let pc = g.p_member(&z, 2, 1, 2).unwrap().unwrap();
    let PCert::Step(step) = pc else { panic!("expected a step") };
    assert_eq!(step.stage, 2);
    assert_eq!(step.xs, vec![0]);
    let d = g.divides(&z, 2, 1, 2).unwrap();
    g.verify(d.cert().unwrap()).unwrap();
    // Not yet at stage 1, and 3 exceeds the stage.
    assert!(g.p_member(&z, 2, 1, 1).unwrap().is_none());
    assert!(g.p_member(&z, 3, 1, 2).unwrap().is_none());
    // 4 does not divide 2!.
    assert!(g.p_member(&z, 2, 2, 2).unwrap().is_none());
    // Rational coefficients from the stage pattern: z/2 with q = 1/2.
    let half = z.scale(&rat(1, 2));
    assert!(g.p_member(&half, 2, 1, 2).unwrap().is_some());
}

#[test]
fn hopfian_broken_subcertificate_fails_at_depth() {
    let m = ho_model();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 5_000);
    let t3 = m.tree().by_name("t3").unwrap();
    let z = QVec::basis(m.witness(2, t3, &[0]).unwrap()[0]);
    let Divisibility::True(mut cert) = g.divides(&z, 2, 1, 2).unwrap() else {
        panic!()
    };
    if let Evidence::HoStep(s) = &mut cert.evidence {
        s.sub.integral = &s.sub.integral + &QVec::from_pairs([(0, rat(1, 3))]);
    }
    let err = g.verify(&cert).unwrap_err();
    assert_eq!(err.depth, 2);
}

#[test]
fn hopfian_monotone_in_stage() {
    let m = ho_model();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 5_000);
    let samples: Vec<QVec> = (0..m.strata().len().min(12))
        .map(QVec::basis)
        .collect();
    for a in &samples {
        for p in [2u64, 3] {
            let mut prev = false;
            for n in 0..=m.last_stage() {
                let now = g.p_member(a, p, 1, n).unwrap().is_some();
                assert!(!prev || now, "{a} {p} {n}");
                prev = now;
            }
        }
    }
}

#[test]
fn hopfian_infinite_divisibility_is_decided_at_stage_zero() {
    let m = ho_model();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 5_000);
    // p^m with p^m ∤ n! for every built stage isolates the base clause.
    let deep = 6;
    for x in 0..m.strata().len().min(12) {
        let a = QVec::basis(x);
        for p in [2u64, 3] {
            let top = g.divides(&a, p, deep, m.last_stage()).unwrap().is_true();
            let base = g.divides(&a, p, deep, 0).unwrap().is_true();
            assert_eq!(top, base, "{a} {p}");
        }
    }
}

#[test]
fn hopfian_levels_not_onto() {
    let m = ho_model();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 5_000);
    for t in m.built_nodes().filter(|&t| m.tree().birth(t) > 0) {
        let w = g.nonsurjectivity_witness(t, 20).unwrap();
        let w = w.expect("a missed element");
        assert!(!w.is_integral());
    }
}

#[test]
fn stage_coefficient_pattern_is_inclusive() {
    use treegrp::g1::{is_stage_coefficient, stage_coefficients};
    let all: Vec<BigRational> = stage_coefficients(2).collect();
    assert_eq!(all.len(), 8);
    assert_eq!(all[0], rat(1, 2));
    assert_eq!(all[1], rat(-1, 2));
    assert!(is_stage_coefficient(&int(2), 2));
    assert!(!is_stage_coefficient(&rat(5, 2), 2));
    assert!(!is_stage_coefficient(&rat(1, 3), 2));
}
