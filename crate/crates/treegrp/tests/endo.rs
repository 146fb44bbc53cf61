use treegrp::endo::{branch_automorphism_ri, hopfian_search, hopfian_witness, rigid_search, EndoError};
use treegrp::g1::{G1Ho, G1Ri};
use treegrp::qvec::QVec;
use treegrp::scaffold::ho::{build_ho, HoParams};
use treegrp::scaffold::ri::{build_ri, RiParams};
use treegrp::tags::{TagParams, TagTable};
use treegrp::tree::{chain_tree, parse_tree, Variant};

fn tags_for(strata: &treegrp::scaffold::Strata, bound: usize) -> TagTable {
    TagTable::new(
        strata,
        TagParams {
            stage_bound: bound,
            ..TagParams::default()
        },
    )
}

#[test]
fn running_chain_automorphism() {
    let m = build_ri(&chain_tree(Variant::Ri, 1, true), &RiParams::default()).unwrap();
    let a = branch_automorphism_ri(&m, 1).unwrap();
    println!("{a}");
    assert_eq!(a.forward.apply(&QVec::basis(0)), Some(QVec::basis(1)));
    assert_eq!(a.forward.apply(&QVec::basis(2)), Some(QVec::basis(0)));
    assert!(a.all_pass());
    assert!(!a.forward.is_identity() && !a.forward.is_minus_identity());
}

#[test]
fn deeper_chain_is_a_bijection_below_the_top() {
    let m = build_ri(&chain_tree(Variant::Ri, 4, true), &RiParams::default()).unwrap();
    let a = branch_automorphism_ri(&m, 4).unwrap();
    assert!(a.all_pass(), "{a}");
    let tags = tags_for(m.strata(), 1);
    let g = G1Ri::new(&m, &tags, 20_000);
    let samples: Vec<_> = m
        .strata()
        .upto(1)
        .into_iter()
        .filter(|x| a.forward.images.contains_key(x))
        .map(|x| {
            let q = QVec::basis(x);
            let p = tags.tag(&q).unwrap();
            (q, p, 2)
        })
        .collect();
    let n = treegrp::endo::check_divisibility_preservation(&g, &a, &samples)
        .unwrap()
        .unwrap();
    assert!(n > 0);
}

#[test]
fn no_branch_is_an_error() {
    let m = build_ri(&chain_tree(Variant::Ri, 2, false), &RiParams::default()).unwrap();
    assert_eq!(branch_automorphism_ri(&m, 1).unwrap_err(), EndoError::NoBranch);
}

#[test]
fn rigid_search_keeps_only_plus_minus_identity() {
    let m = build_ri(
        &chain_tree(Variant::Ri, 2, false),
        &RiParams::default(),
    )
    .unwrap();
    let tags = tags_for(m.strata(), 1);
    let g = G1Ri::new(&m, &tags, 20_000);
    let out = rigid_search(&g, 1, 3, 100_000).unwrap();
    println!("{out}");
    assert_eq!(out.survivors.len(), 2);
    assert!(out.survivors.iter().any(|s| s.is_identity()));
    assert!(out.survivors.iter().any(|s| s.is_minus_identity()));
    assert!(out
        .rejections
        .iter()
        .any(|r| r.candidate == "2*id" && r.filter == "onto-divisibility"));
    assert_eq!(out.sum_zero_hits, 0);
}

const HO_TREE: &str = "variant ho\nt0 - 0\nt1 t0 1\nt2 t0 1\nt3 t1 2\nt4 t1 2\nbranch: t0 t1 t3\n";

#[test]
fn hopfian_witness_on_small_chain() {
    let tree = parse_tree(HO_TREE).unwrap();
    let m = build_ho(
        &tree,
        &HoParams {
            tuple_cap: 1,
            ..HoParams::default()
        },
    )
    .unwrap();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 20_000);
    let w = hopfian_witness(&g, 2, 10_000).unwrap();
    println!("{w}");
    assert!(w.all_pass(), "{w}");
    assert!(!w.kernel.is_zero());
    for (gen, pre) in &w.preimages {
        assert_eq!(w.map.apply(pre).as_ref(), Some(gen));
    }
}

#[test]
fn hopfian_search_finds_nothing() {
    let tree = parse_tree(HO_TREE).unwrap();
    let m = build_ho(
        &tree,
        &HoParams {
            tuple_cap: 1,
            ..HoParams::default()
        },
    )
    .unwrap();
    let tags = tags_for(m.strata(), 0);
    let g = G1Ho::new(&m, &tags, 20_000);
    let out = hopfian_search(&g, 1, 100_000).unwrap();
    assert!(out.survivors.is_empty());
    assert!(out.candidates > 0);
}
