//! The `report` verb: a fixed sequence of every check the tool knows, on
//! built-in inputs, with all randomness drawn from the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treegrp::g1::G1Ri;
use treegrp::profinite::{check_partial_sum_divisibility, ProfModel};
use treegrp::scaffold::ri::{build_ri, RiParams};
use treegrp::tree::{chain_tree, parse_tree, random_tree, ParentPolicy, TreeGenParams, Variant};

use crate::commands::{
    endo_branch, endo_hopf, endo_search, nil2_check, prof_bezout, prof_components, prof_embed,
    tag_table, tree_show, validate_ho, validation, NilContext,
};
use crate::{math, Budgets, CliError, Flavor, Report, Source, DEFAULT_HO_TREE};

/// Model used by the profinite section.
pub const BATTERY_MODEL: &str = "2: 2 8\n3: 9 3\n5: 5 25\n7: 7 49\n";

pub fn battery(r: &mut Report, b: &Budgets) -> Result<(), CliError> {
    let ri = Source::default();
    let ho = Source::default();

    tree_show(r, &chain_tree(Variant::Ri, 3, true))?;
    tree_show(r, &parse_tree(DEFAULT_HO_TREE).expect("built-in tree"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    for i in 0..5 {
        let tree = random_tree(
            &mut rng,
            &TreeGenParams {
                variant: Variant::Ri,
                last_stage: 3,
                new_per_stage: (1, 2),
                max_nodes: 8,
                policy: if i % 2 == 0 { ParentPolicy::Synchronous } else { ParentPolicy::Any },
                branch: false,
            },
        );
        let m = build_ri(&tree, &RiParams::default()).map_err(math)?;
        r.section(&format!("random tree {i}"));
        r.line(tree.to_text());
        r.line(format!("|X| = {}", m.strata().len()));
        validation(r, &m.validate());
    }

    let m = crate::commands::ho_scaffold(&ho, b)?;
    r.section("hopfian scaffold");
    r.line(format!("|X| = {}", m.strata().len()));
    validate_ho(r, &m)?;

    let m = build_ri(&chain_tree(Variant::Ri, 1, true), &RiParams::default()).map_err(math)?;
    let tags = tag_table(r, b, m.strata(), 1);
    let g = G1Ri::new(&m, &tags, b.budget);
    r.section("certified divisibility");
    for (a, p) in tags.prefix(6).map_err(math)? {
        let d = g.divides(&a, p, 2).map_err(math)?;
        let ok = d.cert().is_some_and(|c| g.verify(c).is_ok());
        let s = r.check(&format!("{p}^2 | {a}"), ok);
        r.line(format!("{p}^2 | {a}: {s}"));
    }

    endo_branch(r, b, &ri)?;
    endo_hopf(r, b, &ho)?;
    endo_search(r, b, Flavor::Ri, &ri, b.stage_bound.unwrap_or(1))?;

    let ctx = NilContext::new(r, b)?;
    let pairs = ctx.pairs()?;
    nil2_check(r, b, &ctx, &pairs)?;

    let model: ProfModel = BATTERY_MODEL.parse().map_err(math)?;
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    for _ in 0..3 {
        let a = model.random(&mut rng);
        prof_components(r, &model, &a);
        for n in 2..=8 {
            let w = check_partial_sum_divisibility(&model, &a, n).map_err(math)?;
            let s = r.check(&format!("(n-1)! divisibility at n = {n}"), w.holds);
            r.line(format!("n {n}: quotient {}: {s}", model.show(&w.quotient)));
        }
    }
    prof_bezout(r, &[2, 3, 5, 7], 2)?;
    let gens: Vec<_> = model.generators().into_iter().map(|(_, g)| g).collect();
    let small = Budgets { coeff_bound: 1, ..b.clone() };
    prof_embed(r, &small, &model, &model.primes(), &gens[..4])?;
    Ok(())
}
