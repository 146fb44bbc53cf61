use treegrp::qvec::QVec;
use treegrp::scaffold::ri::{build_ri, RiParams, ScaffoldRI};
use treegrp::scaffold::Sign;
use treegrp::structure::{moved_violations, spread_violations, SpreadParams};
use treegrp::tree::{all_trees, chain_tree, parse_tree, StratifiedTree, Variant};

fn build(tree: &StratifiedTree) -> ScaffoldRI {
    build_ri(tree, &RiParams::default()).unwrap()
}

fn synchronous(tree: &StratifiedTree) -> bool {
    (0..tree.len()).all(|t| tree.level(t).unwrap() == tree.birth(t))
}

#[test]
fn maps_never_fix_a_point() {
    for tree in all_trees(Variant::Ri, 2, 2) {
        let m = build(&tree);
        assert!(moved_violations(&m).iter().all(|v| v.x != v.image));
    }
}

#[test]
fn stage_jumps_on_synchronous_trees() {
    let trees: Vec<_> = all_trees(Variant::Ri, 2, 2).into_iter().filter(synchronous).collect();
    assert!(trees.len() >= 5);
    for tree in trees {
        assert_eq!(moved_violations(&build(&tree)), vec![], "{}", tree.to_text());
    }
}

#[test]
fn late_child_of_root_jumps_two_stages() {
    let tree = parse_tree("variant ri\nt0 - 0\nt1 t0 1\nt2 t0 2\n").unwrap();
    let m = build(&tree);
    let v = moved_violations(&m);
    let from_root: Vec<_> = v.iter().filter(|v| v.x == 0 && v.sign == Sign::Plus).collect();
    assert_eq!(from_root.len(), 1);
    assert_eq!((from_root[0].t, from_root[0].birth_x, from_root[0].birth_image), (2, 0, 2));
}

#[test]
fn spreading_fails_only_through_non_reasonable_lifts() {
    let mut configurations = 0;
    for tree in all_trees(Variant::Ri, 2, 2) {
        let m = build(&tree);
        if m.strata().len() > 13 {
            continue;
        }
        let report = spread_violations(&m, &SpreadParams::default()).unwrap();
        configurations += report.configurations;
        for v in &report.violations {
            assert!(v.reason.contains("clause (c)"), "{v}");
        }
    }
    assert!(configurations > 1000);
}

#[test]
fn spreading_fails_reasonableness_on_three_chain() {
    // f_{t1} sends x2 back to x0, so f_{t2} carries (x1, x2) to (x4, x0).
    let m = build(&chain_tree(Variant::Ri, 2, true));
    assert_eq!(m.f_tuple(2, Sign::Plus, &[1, 2]), Some(vec![4, 0]));
    assert!(m.lt_k(&[1, 2], &[4, 0]).unwrap());
    assert!(m.is_reasonable(&[1, 2]).unwrap());
    assert!(!m.is_reasonable(&[4, 0]).unwrap());
    let report = spread_violations(&m, &SpreadParams::default()).unwrap();
    let b = QVec::from_ints(&[(0, 1), (4, 1)]);
    assert!(report
        .violations
        .iter()
        .any(|v| v.xs == vec![1, 2] && v.coeffs == vec![1, 1] && v.bs.contains(&b)));
}

#[test]
fn spreading_holds_on_small_scaffolds() {
    for text in ["variant ri\nt0 - 0\nt1 t0 1\n", "variant ri\nt0 - 0\nt1 t0 1\nt2 t0 1\n"] {
        let m = build(&parse_tree(text).unwrap());
        assert!(spread_violations(&m, &SpreadParams::default()).unwrap().violations.is_empty());
    }
}
