use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treegrp::g1::G1Ri;
use treegrp::nil2::{
    basis_rank, branch_embedding_nil, center_membership, choose_pairs, commutator, g2t_apply, in_h1,
    inverse, mul, parse_factors, power, torsion_obstruction, NilError, NilWord, PairKind,
    PairTag, PruferElem,
};
use treegrp::qvec::{rat, QVec};
use treegrp::scaffold::ri::{build_ri, RiKind, RiParams, ScaffoldRI};
use treegrp::tags::{TagParams, TagTable};
use treegrp::tree::{chain_tree, Variant};

mod common;
use common::rewrite::{fact, factors_of, oracle_normal_form};

const PRIMES: [u64; 4] = [2, 3, 5, 7];

fn scaffold() -> ScaffoldRI {
    build_ri(
        &chain_tree(Variant::Ri, 2, true),
        &RiParams {
            kind: RiKind::Embedding,
            fillers_per_stage: 3,
            stages: None,
        },
    )
    .unwrap()
}

struct Fixture {
    m: ScaffoldRI,
    tags: TagTable,
}

impl Fixture {
    fn new() -> Self {
        let m = scaffold();
        let tags = TagTable::new(
            m.strata(),
            TagParams {
                stage_bound: 0,
                ..TagParams::default()
            },
        );
        Fixture { m, tags }
    }

    fn g1(&self) -> G1Ri<'_> {
        G1Ri::new(&self.m, &self.tags, 20_000)
    }

    fn ctx(&self) -> PairTag {
        choose_pairs(&self.g1(), &PRIMES, 100_000).unwrap()
    }
}

fn fixture() -> &'static (Fixture, PairTag) {
    use std::sync::OnceLock;
    static F: OnceLock<(Fixture, PairTag)> = OnceLock::new();
    F.get_or_init(|| {
        let f = Fixture::new();
        let ctx = f.ctx();
        (f, ctx)
    })
}

// ---------------------------------------------------------------------------

fn pool(ctx: &PairTag) -> Vec<usize> {
    let (x, y) = ctx.chosen[&2];
    let (u, _) = ctx.chosen[&3];
    vec![x, y, u]
}

fn word_strategy(alphabet: Vec<usize>, ctx: PairTag) -> impl Strategy<Value = NilWord> + Clone {
    let tagged: Vec<(usize, usize, u64)> = ctx
        .tagged_pairs()
        .filter(|((x, y), _)| alphabet.contains(x) && alphabet.contains(y))
        .filter_map(|(&(x, y), k)| match k {
            PairKind::Prufer { p, .. } => Some((x, y, *p)),
            PairKind::Trivial => None,
        })
        .collect();
    let na = alphabet.len();
    let nt = tagged.len().max(1);
    (
        1usize..=3,
        prop::collection::vec((0..na, -4i64..=4), 0..=3),
        prop::collection::vec((0..nt, 1i64..8), 0..=1),
    )
        .prop_map(move |(n, ls, zs)| {
            let f = BigRational::from_integer(fact(n));
            let mut v = QVec::zero();
            for (i, q) in ls {
                v.add_term(alphabet[i], &(BigRational::from_integer(BigInt::from(q)) / &f));
            }
            let central: Vec<_> = if tagged.is_empty() {
                Vec::new()
            } else {
                zs.into_iter()
                    .map(|(i, c)| {
                        let (x, y, p) = tagged[i];
                        ((x, y), PruferElem::new(p, BigInt::from(c), 2))
                    })
                    .collect()
            };
            NilWord::from_parts(&v, central)
        })
}

#[test]
fn prufer_arithmetic() {
    let a = PruferElem::new(2, BigInt::from(3), 2);
    assert_eq!(a.to_string(), "3/2^2");
    assert!(a.times(&BigInt::from(4)).is_zero());
    assert_eq!(a.add(&a), PruferElem::new(2, BigInt::one(), 1));
    assert_eq!(PruferElem::new(3, BigInt::from(9), 2), PruferElem::zero(3));
    assert_eq!(a.neg().add(&a), PruferElem::zero(2));
}

#[test]
fn chosen_pairs_satisfy_the_choice() {
    let (f, ctx) = fixture();
    let g = f.g1();
    let mut coords = Vec::new();
    for (&p, &(x, y)) in &ctx.chosen {
        coords.extend([x, y]);
        let sum = QVec::from_ints(&[(x, 1), (y, 1)]);
        assert!(!g.divides(&sum, p, 1).unwrap().is_true());
        assert!(matches!(ctx.kind(x, y), PairKind::Prufer { p: q, .. } if q == p));
        // a_1 has order p.
        let a1 = ctx.a(x.min(y), x.max(y), 1).unwrap();
        assert_eq!(a1.order(), BigInt::from(p));
        assert!(a1.times(&BigInt::from(p)).is_zero());
    }
    for (i, &a) in coords.iter().enumerate() {
        for &b in &coords[i + 1..] {
            assert!(!f.m.e1_equivalent(a, b));
        }
    }
    assert_eq!(ctx.kind(coords[0], coords[0]), PairKind::Trivial);
}

#[test]
fn e1_equivalent_candidates_are_rejected() {
    let (f, ctx) = fixture();
    for &(x, y) in ctx.chosen.values() {
        assert!(!f.m.e1_equivalent(x, y));
    }
    // A scaffold with a single class cannot host a pair.
    let tiny = build_ri(
        &chain_tree(Variant::Ri, 1, true),
        &RiParams {
            kind: RiKind::Embedding,
            ..RiParams::default()
        },
    )
    .unwrap();
    let tags = TagTable::new(tiny.strata(), TagParams::default());
    let g = G1Ri::new(&tiny, &tags, 5_000);
    assert!(matches!(
        choose_pairs(&g, &[2, 3, 5, 7, 11, 13, 17], 10_000),
        Err(NilError::InsufficientClasses(_))
    ));
}

#[test]
fn spec_examples() {
    let (_, ctx) = fixture();
    let (x, y) = ctx.chosen[&2];
    let (x, y) = (x.min(y), x.max(y));
    let gx = NilWord::letter(1, x, 1);
    let gy = NilWord::letter(1, y, 1);
    let xy = mul(ctx, &gx, &gy).unwrap();
    assert!(xy.central().is_empty());
    assert_eq!(xy.letters().len(), 2);
    let yx = mul(ctx, &gy, &gx).unwrap();
    assert_eq!(yx.h2_project(), xy.h2_project());
    assert_eq!(yx.central()[&(x, y)], ctx.a(x, y, 1).unwrap().neg());
    let z = commutator(ctx, &gx, &gy).unwrap();
    assert_eq!(z.central()[&(x, y)], PruferElem::new(2, BigInt::one(), 1));
    assert!(z.is_central() && !z.is_identity());
    let z2 = commutator(ctx, &power(ctx, &gx, 2).unwrap(), &gy).unwrap();
    assert!(z2.is_identity());
    assert!(commutator(ctx, &gx, &gx).unwrap().is_identity());
    assert!(mul(ctx, &gx, &inverse(ctx, &gx).unwrap()).unwrap().is_identity());
    let w = NilWord::letter(2, x, 3);
    assert_eq!(w.h2_project(), QVec::basis(x).scale(&rat(3, 2)));
    assert_eq!(w.to_string(), format!("(1/2!,x{x})^3"));
    // Stage lowering: (1/2!, x)^4 = (1/1!, x)^2.
    assert_eq!(NilWord::letter(2, x, 4), NilWord::letter(1, x, 2));
    assert!(center_membership(&z));
    assert!(!center_membership(&gx));
    let parsed: NilWord = z.to_string().parse().unwrap();
    assert_eq!(parsed, z);
}

#[test]
fn h1_membership() {
    let (f, ctx) = fixture();
    let g = f.g1();
    let (x, y) = ctx.chosen[&2];
    let z = commutator(ctx, &NilWord::letter(1, x, 1), &NilWord::letter(1, y, 1)).unwrap();
    assert!(in_h1(&g, &z).unwrap().is_true());
    assert!(in_h1(&g, &NilWord::letter(1, x, 1)).unwrap().is_true());
    // x/p is outside G_1 for a prime not attached to x's class.
    let bad = NilWord::from_parts(&QVec::basis(x).scale(&rat(1, 101)), []);
    assert!(!in_h1(&g, &bad).unwrap().is_true());
}

#[test]
fn partial_embeddings() {
    let (f, ctx) = fixture();
    let t1 = f.m.tree().branch_node(1).unwrap();
    let map = f.m.map(t1);
    let (x, y) = ctx
        .tagged_pairs()
        .map(|(k, _)| *k)
        .find(|&(x, y)| map.contains_dom(x) && map.contains_dom(y))
        .expect("a tagged pair inside the domain");
    let w = NilWord::letter(1, x, 1);
    let img = g2t_apply(&f.m, ctx, t1, &w).unwrap();
    assert_eq!(img, NilWord::letter(1, map.get(x).unwrap(), 1));
    let d = PruferElem::new(ctx.a(x, y, 1).unwrap().prime(), BigInt::one(), 2);
    let z = NilWord::central_letter(x, y, d.clone());
    let zi = g2t_apply(&f.m, ctx, t1, &z).unwrap();
    let expect = NilWord::central_letter(map.get(x).unwrap(), map.get(y).unwrap(), d);
    assert_eq!(zi, expect);
    // Homomorphism on a commutator.
    let gy = NilWord::letter(1, y, 1);
    let c = commutator(ctx, &w, &gy).unwrap();
    let ci = commutator(
        ctx,
        &g2t_apply(&f.m, ctx, t1, &w).unwrap(),
        &g2t_apply(&f.m, ctx, t1, &gy).unwrap(),
    )
    .unwrap();
    assert_eq!(g2t_apply(&f.m, ctx, t1, &c).unwrap(), ci);
    let outside = f.m.strata().all().into_iter().find(|&u| !map.contains_dom(u)).unwrap();
    assert_eq!(
        g2t_apply(&f.m, ctx, t1, &NilWord::letter(1, outside, 1)).unwrap_err(),
        NilError::OutsideDomain(outside)
    );
}

#[test]
fn branch_embedding_is_not_onto() {
    let (f, ctx) = fixture();
    let g = f.g1();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r = branch_embedding_nil(&f.m, &g, ctx, 2, 50, &mut rng).unwrap();
    assert!(r.all_pass(), "{r}");
    assert_eq!(r.pairs_checked, 50);
}

#[test]
fn torsion_obstruction_for_small_multipliers() {
    let (_, ctx) = fixture();
    for m in (2..=10i64).flat_map(|m| [m, -m]) {
        let o = torsion_obstruction(ctx, m).unwrap();
        assert_eq!(m % o.p as i64, 0);
        assert!(!o.z.is_identity());
        assert!(o.z_m2.is_identity());
        assert!(o.lifted.is_identity());
        let p_small = (2..=m.unsigned_abs()).find(|d| m.unsigned_abs() % d == 0).unwrap();
        assert_eq!(o.p, p_small);
    }
    assert_eq!(torsion_obstruction(ctx, 6).unwrap().p, 2);
    assert_eq!(
        torsion_obstruction(ctx, 1).unwrap_err(),
        NilError::TrivialMultiplier(1)
    );
}

#[test]
fn basis_letters_are_independent() {
    let (f, _) = fixture();
    let xs = f.m.strata().all();
    assert_eq!(basis_rank(&xs), xs.len());
}

#[test]
fn parser_round_trip() {
    let (_, ctx) = fixture();
    let (x, y) = ctx.chosen[&3];
    let (x, y) = (x.min(y), x.max(y));
    let s = format!("(1/3!,x{x})^5 * (1/3!,x{y})^-2 * z(x{x},x{y};4/3^2)");
    let w: NilWord = s.parse().unwrap();
    assert_eq!(w.to_string(), s);
    assert_eq!(parse_factors(&s).unwrap().len(), 3);
    assert!("(1/0!,x1)".parse::<NilWord>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn group_laws(
        (a, b, c) in {
            let (_, ctx) = fixture();
            let s = word_strategy(fixture().0.m.strata().all().into_iter().take(6).collect(), ctx.clone());
            (s.clone(), s.clone(), s)
        }
    ) {
        let (_, ctx) = fixture();
        let ab_c = mul(ctx, &mul(ctx, &a, &b).unwrap(), &c).unwrap();
        let a_bc = mul(ctx, &a, &mul(ctx, &b, &c).unwrap()).unwrap();
        prop_assert_eq!(&ab_c, &a_bc);
        let ai = inverse(ctx, &a).unwrap();
        prop_assert!(mul(ctx, &a, &ai).unwrap().is_identity());
        prop_assert!(mul(ctx, &ai, &a).unwrap().is_identity());
        prop_assert_eq!(mul(ctx, &a, &NilWord::identity()).unwrap(), a.clone());
        prop_assert!(commutator(ctx, &a, &b).unwrap().is_central());
        // h_2 is a homomorphism whose kernel is the central words.
        prop_assert_eq!(mul(ctx, &a, &b).unwrap().h2_project(), &a.h2_project() + &b.h2_project());
        prop_assert_eq!(a.h2_project().is_zero(), a.is_central());
    }

    #[test]
    fn commutator_power_law(
        (a, b) in {
            let (_, ctx) = fixture();
            let s = word_strategy(pool(ctx), ctx.clone());
            (s.clone(), s)
        },
        n in -5i64..=5,
        k in -5i64..=5,
    ) {
        let (_, ctx) = fixture();
        let lhs = commutator(ctx, &power(ctx, &a, n).unwrap(), &power(ctx, &b, k).unwrap()).unwrap();
        let rhs = power(ctx, &commutator(ctx, &a, &b).unwrap(), n * k).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn normal_forms_match_rewriting(
        (a, b, c) in {
            let (_, ctx) = fixture();
            let s = word_strategy(pool(ctx), ctx.clone());
            (s.clone(), s.clone(), s)
        }
    ) {
        let (_, ctx) = fixture();
        // Multiply the factors in written order, then normalize by rewriting.
        let mut fs = factors_of(&a);
        fs.extend(factors_of(&b));
        fs.extend(factors_of(&c));
        let fast = mul(ctx, &mul(ctx, &a, &b).unwrap(), &c).unwrap();
        prop_assert_eq!(oracle_normal_form(ctx, &fs), fast);
        // The normal form itself is a fixed point.
        prop_assert_eq!(oracle_normal_form(ctx, &factors_of(&a)), a);
    }
}
