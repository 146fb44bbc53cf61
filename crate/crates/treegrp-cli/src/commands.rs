use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treegrp::dump::{dump_ho, dump_ri, parse_dump, Scaffold};
use treegrp::endo::{
    branch_automorphism_ri, check_divisibility_preservation, hopfian_search, hopfian_witness,
    rigid_search,
};
use treegrp::g1::{Divisibility, G1Ho, G1Ri, Membership};
use treegrp::nil2::{
    branch_embedding_nil, choose_pairs, commutator, mul, parse_product, torsion_obstruction,
    PairTag,
};
use treegrp::profinite::{bezout_value, bezout_witnesses, embed_check, ProfModel};
use treegrp::qvec::QVec;
use treegrp::scaffold::ho::{build_ho, HoParams, ScaffoldHO};
use treegrp::scaffold::ri::{build_ri, RiKind, RiParams, ScaffoldRI};
use treegrp::scaffold::ValidationReport;
use treegrp::structure::{moved_violations, spread_violations, SpreadParams};
use treegrp::tags::{TagParams, TagTable};
use treegrp::tree::{
    chain_tree, parse_tree, random_tree, ParentPolicy, StratifiedTree, TreeGenParams, Variant,
};

use crate::{
    input, math, read_file, write_file, Budgets, Cli, CliError, DividesArgs, EndoCmd, Flavor,
    GroupCmd, KindArg, NilCmd, PolicyArg, ProfCmd, Report, ScaffoldCmd, Source, TreeCmd, Verb,
    DEFAULT_HO_TREE,
};

/// Primes carrying the central part of the 2-nilpotent group.
pub const NIL_PRIMES: [u64; 4] = [2, 3, 5, 7];
/// Largest `|X|` on which the spreading check runs.
pub const SPREAD_MAX_ELEMENTS: usize = 13;

pub fn dispatch(cli: &Cli, r: &mut Report) -> Result<(), CliError> {
    let b = &cli.budgets;
    match &cli.verb {
        Verb::Tree { cmd } => match cmd {
            TreeCmd::Show { tree } => tree_show(r, &load_tree(tree)?),
            TreeCmd::Random {
                flavor,
                stages,
                max_nodes,
                policy,
            } => tree_random(r, b, *flavor, *stages, *max_nodes, *policy),
        },
        Verb::Scaffold { cmd } => match cmd {
            ScaffoldCmd::Build {
                flavor,
                source,
                save,
            } => scaffold_build(r, b, *flavor, source, save.as_deref()),
            ScaffoldCmd::Validate { flavor, source } => scaffold_validate(r, b, *flavor, source),
            ScaffoldCmd::Structure { source } => {
                let m = ri_scaffold(source, || chain_tree(Variant::Ri, 2, true))?;
                structure(r, &m)
            }
        },
        Verb::Group { cmd } => match cmd {
            GroupCmd::Tags {
                flavor,
                source,
                count,
            } => group_tags(r, b, *flavor, source, *count),
            GroupCmd::Member {
                flavor,
                source,
                a,
                n,
            } => group_member(r, b, *flavor, source, a, *n),
        },
        Verb::Divides(args) => divides(r, b, args),
        Verb::Endo { cmd } => match cmd {
            EndoCmd::Branch { source } => endo_branch(r, b, source),
            EndoCmd::Hopf { source } => endo_hopf(r, b, source),
            EndoCmd::Search { flavor, source } => {
                let sb = b.stage_bound.ok_or(CliError::MissingBudget("stage-bound"))?;
                endo_search(r, b, *flavor, source, sb)
            }
        },
        Verb::Nil2 { cmd } => {
            let ctx = NilContext::new(r, b)?;
            let pairs = ctx.pairs()?;
            match cmd {
                NilCmd::Mul { u, v } => {
                    let (u, v) = (word(&pairs, u)?, word(&pairs, v)?);
                    r.line(format!("product {}", mul(&pairs, &u, &v).map_err(math)?));
                    Ok(())
                }
                NilCmd::Comm { u, v } => {
                    let (u, v) = (word(&pairs, u)?, word(&pairs, v)?);
                    r.line(format!("commutator {}", commutator(&pairs, &u, &v).map_err(math)?));
                    Ok(())
                }
                NilCmd::Project { u } => {
                    let u = word(&pairs, u)?;
                    r.line(format!("normal-form {u}"));
                    r.line(format!("h2 {}", u.h2_project()));
                    r.line(format!("central {}", u.is_central()));
                    Ok(())
                }
                NilCmd::Check => nil2_check(r, b, &ctx, &pairs),
            }
        }
        Verb::Profinite { cmd } => match cmd {
            ProfCmd::Components { model, a } => {
                let model = load_model(model)?;
                let a = model.parse_element(a).map_err(input)?;
                prof_components(r, &model, &a);
                Ok(())
            }
            ProfCmd::Bezout { primes, m } => prof_bezout(r, &parse_primes(primes)?, *m),
            ProfCmd::EmbedCheck {
                model,
                gens,
                window,
            } => {
                let model = load_model(model)?;
                let gens = gens
                    .split(';')
                    .map(|g| model.parse_element(g.trim()).map_err(input))
                    .collect::<Result<Vec<_>, _>>()?;
                let window = match window {
                    Some(w) => parse_primes(w)?,
                    None => model.primes(),
                };
                prof_embed(r, b, &model, &window, &gens)
            }
        },
        Verb::Report => crate::battery(r, b),
    }
}

pub fn load_tree(path: &Path) -> Result<StratifiedTree, CliError> {
    parse_tree(&read_file(path)?).map_err(input)
}

fn load_model(path: &Path) -> Result<ProfModel, CliError> {
    read_file(path)?.parse::<ProfModel>().map_err(input)
}

fn parse_primes(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| input(format!("bad prime `{p}`"))))
        .collect()
}

fn parse_vec(s: &str) -> Result<QVec, CliError> {
    s.parse::<QVec>().map_err(input)
}

fn word(pairs: &PairTag, s: &str) -> Result<treegrp::nil2::NilWord, CliError> {
    parse_product(pairs, s).map_err(input)
}

fn ri_params(source: &Source) -> RiParams {
    RiParams {
        kind: match source.kind {
            Some(KindArg::Embedding) => RiKind::Embedding,
            _ => RiKind::Standard,
        },
        fillers_per_stage: source.fillers,
        stages: source.stages,
    }
}

fn ho_params(source: &Source, b: &Budgets) -> HoParams {
    HoParams {
        tuple_cap: b.tuple_cap,
        fillers_per_stage: source.fillers,
        stages: source.stages,
        ..HoParams::default()
    }
}

pub fn ri_scaffold(
    source: &Source,
    default: impl FnOnce() -> StratifiedTree,
) -> Result<ScaffoldRI, CliError> {
    if let Some(path) = &source.dump {
        return match parse_dump(&read_file(path)?).map_err(input)? {
            Scaffold::Ri(m) => Ok(m),
            Scaffold::Ho(_) => Err(CliError::Usage("expected a rigid (ri) dump".into())),
        };
    }
    let tree = match &source.tree {
        Some(path) => load_tree(path)?,
        None => default(),
    };
    build_ri(&tree, &ri_params(source)).map_err(math)
}

pub fn ho_scaffold(source: &Source, b: &Budgets) -> Result<ScaffoldHO, CliError> {
    if let Some(path) = &source.dump {
        return match parse_dump(&read_file(path)?).map_err(input)? {
            Scaffold::Ho(m) => Ok(m),
            Scaffold::Ri(_) => Err(CliError::Usage("expected a Hopfian (ho) dump".into())),
        };
    }
    let tree = match &source.tree {
        Some(path) => load_tree(path)?,
        None => parse_tree(DEFAULT_HO_TREE).expect("built-in tree"),
    };
    build_ho(&tree, &ho_params(source, b)).map_err(math)
}

pub fn tag_table(r: &mut Report, b: &Budgets, strata: &treegrp::scaffold::Strata, default_bound: usize) -> TagTable {
    let stage_bound = b.stage_bound.unwrap_or(default_bound);
    r.budget("stage-bound", stage_bound);
    TagTable::new(
        strata,
        TagParams {
            stage_bound,
            coeff_bound: b.coeff_bound,
            ..TagParams::default()
        },
    )
}

pub fn tree_show(r: &mut Report, tree: &StratifiedTree) -> Result<(), CliError> {
    r.section("tree");
    r.line(format!("variant {}", tree.variant().as_str()));
    r.line(format!("nodes {}", tree.len()));
    r.line(format!("stages {}", tree.stage_count()));
    r.line(format!("rank {}", tree.rank()));
    for t in 0..tree.len() {
        let parent = tree.parent(t).map_or("-".to_string(), |p| tree.name(p).to_string());
        r.line(format!(
            "node {} parent {} birth {} level {}",
            tree.name(t),
            parent,
            tree.birth(t),
            tree.level(t).map_err(math)?
        ));
    }
    if let Some(chain) = tree.branch() {
        let names: Vec<&str> = chain.iter().map(|&t| tree.name(t)).collect();
        r.line(format!("branch {}", names.join(" ")));
    }
    Ok(())
}

fn tree_random(
    r: &mut Report,
    b: &Budgets,
    flavor: Flavor,
    stages: usize,
    max_nodes: usize,
    policy: PolicyArg,
) -> Result<(), CliError> {
    let variant = variant_of(flavor);
    let params = TreeGenParams {
        variant,
        last_stage: stages,
        new_per_stage: (variant.min_new_per_stage(), variant.min_new_per_stage() + 1),
        max_nodes,
        policy: match policy {
            PolicyArg::Any => ParentPolicy::Any,
            PolicyArg::Synchronous => ParentPolicy::Synchronous,
        },
        branch: false,
    };
    let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(b.seed), &params);
    r.section("tree-file");
    r.line(tree.to_text());
    tree_show(r, &tree)
}

fn variant_of(flavor: Flavor) -> Variant {
    match flavor {
        Flavor::Ri => Variant::Ri,
        Flavor::Ho => Variant::Ho,
    }
}

fn scaffold_build(
    r: &mut Report,
    b: &Budgets,
    flavor: Flavor,
    source: &Source,
    save: Option<&Path>,
) -> Result<(), CliError> {
    let (text, report) = match flavor {
        Flavor::Ri => {
            let m = ri_scaffold(source, || chain_tree(Variant::Ri, 1, true))?;
            (dump_ri(&m), m.validate())
        }
        Flavor::Ho => {
            let m = ho_scaffold(source, b)?;
            (dump_ho(&m), m.validate())
        }
    };
    if let Some(path) = save {
        write_file(path, &text)?;
    }
    r.section("dump");
    r.line(&text);
    validation(r, &report);
    Ok(())
}

/// Writes a clause report and records each failing clause.
pub fn validation(r: &mut Report, report: &ValidationReport) {
    r.section("validation");
    r.line(report.to_string());
    for c in report.failures() {
        r.fail(format!("clause ({})", c.clause));
    }
}

fn scaffold_validate(r: &mut Report, b: &Budgets, flavor: Flavor, source: &Source) -> Result<(), CliError> {
    let flavor = match &source.dump {
        Some(path) => match parse_dump(&read_file(path)?).map_err(input)? {
            Scaffold::Ri(m) => {
                validation(r, &m.validate());
                return Ok(());
            }
            Scaffold::Ho(m) => {
                validate_ho(r, &m)?;
                return Ok(());
            }
        },
        None => flavor,
    };
    match flavor {
        Flavor::Ri => validation(r, &ri_scaffold(source, || chain_tree(Variant::Ri, 1, true))?.validate()),
        Flavor::Ho => validate_ho(r, &ho_scaffold(source, b)?)?,
    }
    Ok(())
}

/// Clause report plus the locator property `x ∈ dom(f_t) ⇔ 𝐡(x) ≤_T t`.
pub fn validate_ho(r: &mut Report, m: &ScaffoldHO) -> Result<(), CliError> {
    validation(r, &m.validate());
    let tree = m.tree();
    let mut bad = None;
    let mut checked = 0;
    for x in m.strata().all() {
        let h = m.locator_of(x).map_err(math)?;
        for t in m.built_nodes() {
            checked += 1;
            let located = h.is_some_and(|h| tree.leq(h, t));
            if located != m.map(t).contains_key(&x) && bad.is_none() {
                bad = Some(format!("x{x} at node {}", tree.name(t)));
            }
        }
    }
    let status = r.check("locator", bad.is_none());
    r.line(format!(
        "locator {status} on {checked} pairs{}",
        bad.map(|b| format!(" ({b})")).unwrap_or_default()
    ));
    Ok(())
}

pub fn structure(r: &mut Report, m: &ScaffoldRI) -> Result<(), CliError> {
    r.budget("spread-elements", SPREAD_MAX_ELEMENTS);
    r.section("stage jumps");
    let moved = moved_violations(m);
    let fixed = moved.iter().filter(|v| v.x == v.image).count();
    let s = r.check("maps move their domain", fixed == 0);
    r.line(format!("fixed points: {s}"));
    let s = r.check("stage-jump trichotomy", moved.is_empty());
    r.line(format!("stage jumps: {s} ({} violations)", moved.len()));
    for v in moved.iter().take(5) {
        r.line(format!("  {v}"));
    }
    r.section("spreading");
    if m.strata().len() > SPREAD_MAX_ELEMENTS {
        r.line(format!("skipped: |X| = {} > {SPREAD_MAX_ELEMENTS}", m.strata().len()));
        return Ok(());
    }
    let params = SpreadParams::default();
    let spread = spread_violations(m, &params).map_err(math)?;
    r.line(format!(
        "j <= {}, lstar <= {}, coefficients <= {}",
        params.max_j, params.max_lstar, params.max_coeff
    ));
    r.line(format!("configurations {}", spread.configurations));
    let s = r.check("spreading claim", spread.violations.is_empty());
    r.line(format!("spreading: {s} ({} violations)", spread.violations.len()));
    for v in spread.violations.iter().take(5) {
        r.line(format!("  {v}"));
    }
    Ok(())
}

fn group_tags(r: &mut Report, b: &Budgets, flavor: Flavor, source: &Source, count: usize) -> Result<(), CliError> {
    let strata = match flavor {
        Flavor::Ri => ri_scaffold(source, || chain_tree(Variant::Ri, 1, true))?.strata().clone(),
        Flavor::Ho => ho_scaffold(source, b)?.strata().clone(),
    };
    let tags = tag_table(r, b, &strata, 1);
    r.section("tags");
    for (a, p) in tags.prefix(count).map_err(math)? {
        r.line(format!("p({a}) = {p}"));
    }
    Ok(())
}

fn membership_lines(r: &mut Report, v: &QVec, res: &Membership) {
    match res {
        Membership::True(cert) => {
            r.line(format!("member {v}: true"));
            r.line(cert.to_string());
        }
        Membership::FalseWithinBudget { budget_hit } => {
            r.line(format!("member {v}: false within budget (budget hit: {budget_hit})"));
        }
    }
}

fn group_member(
    r: &mut Report,
    b: &Budgets,
    flavor: Flavor,
    source: &Source,
    a: &str,
    n: Option<usize>,
) -> Result<(), CliError> {
    let v = parse_vec(a)?;
    r.section("membership");
    match flavor {
        Flavor::Ri => {
            let m = ri_scaffold(source, || chain_tree(Variant::Ri, 1, true))?;
            let tags = tag_table(r, b, m.strata(), 1);
            let g = G1Ri::new(&m, &tags, b.budget);
            let res = g.member(&v).map_err(math)?;
            membership_lines(r, &v, &res);
        }
        Flavor::Ho => {
            let m = ho_scaffold(source, b)?;
            let n = n.unwrap_or(m.last_stage());
            r.line(format!("level {n}"));
            let tags = tag_table(r, b, m.strata(), 0);
            let g = G1Ho::new(&m, &tags, b.budget);
            let res = g.member(&v, n).map_err(math)?;
            membership_lines(r, &v, &res);
        }
    }
    Ok(())
}

fn divisibility_lines(r: &mut Report, res: &Divisibility, replay: impl FnOnce(&treegrp::g1::DivCert) -> Result<(), String>) {
    match res {
        Divisibility::True(cert) => {
            r.line("divides: true");
            r.line(cert.to_string());
            let ok = replay(cert);
            let s = r.check("certificate replay", ok.is_ok());
            r.line(format!(
                "replay: {s}{}",
                ok.err().map(|e| format!(" ({e})")).unwrap_or_default()
            ));
        }
        Divisibility::FalseWithinBudget { budget_hit } => {
            r.line(format!("divides: false within budget (budget hit: {budget_hit})"));
        }
    }
}

fn divides(r: &mut Report, b: &Budgets, args: &DividesArgs) -> Result<(), CliError> {
    let a = parse_vec(&args.a)?;
    r.section("divides");
    r.line(format!("query {}^{} | {a}", args.p, args.m));
    match args.flavor {
        Flavor::Ri => {
            let m = ri_scaffold(&args.source, || chain_tree(Variant::Ri, 1, true))?;
            let tags = tag_table(r, b, m.strata(), 1);
            let g = G1Ri::new(&m, &tags, b.budget);
            let res = g.divides(&a, args.p, args.m).map_err(math)?;
            divisibility_lines(r, &res, |c| g.verify(c).map_err(|e| e.to_string()));
        }
        Flavor::Ho => {
            let n = args
                .n
                .ok_or_else(|| CliError::Usage("--n is required with --flavor ho".into()))?;
            let m = ho_scaffold(&args.source, b)?;
            let tags = tag_table(r, b, m.strata(), 0);
            let g = G1Ho::new(&m, &tags, b.budget);
            r.line(format!("level {n}"));
            let res = g.divides(&a, args.p, args.m, n).map_err(math)?;
            divisibility_lines(r, &res, |c| g.verify(c).map_err(|e| e.to_string()));
        }
    }
    Ok(())
}

pub fn endo_branch(r: &mut Report, b: &Budgets, source: &Source) -> Result<(), CliError> {
    let depth = b.depth.unwrap_or(4);
    r.budget("depth", depth);
    let m = ri_scaffold(source, || chain_tree(Variant::Ri, depth, true))?;
    let auto = branch_automorphism_ri(&m, depth).map_err(math)?;
    r.section("branch automorphism");
    r.line(auto.to_string());
    for c in auto.checks.iter().filter(|c| !c.pass) {
        r.fail(c.name.clone());
    }
    let tags = tag_table(r, b, m.strata(), 1);
    let g = G1Ri::new(&m, &tags, b.budget);
    let mut samples = Vec::new();
    for (i, (a, p)) in tags.prefix(b.samples).map_err(math)?.into_iter().enumerate() {
        if auto.forward.apply(&a).is_some() {
            samples.push((a, p, 1 + (i % 2) as u32));
        }
    }
    r.section("divisibility preservation");
    match check_divisibility_preservation(&g, &auto, &samples).map_err(math)? {
        Ok(n) => r.line(format!("preserved: pass ({n} certified instances)")),
        Err(e) => {
            r.fail("divisibility preservation");
            r.line(format!("preserved: FAIL ({e})"));
        }
    }
    Ok(())
}

pub fn endo_hopf(r: &mut Report, b: &Budgets, source: &Source) -> Result<(), CliError> {
    let depth = b.depth.unwrap_or(2);
    r.budget("depth", depth);
    let m = ho_scaffold(source, b)?;
    let tags = tag_table(r, b, m.strata(), 0);
    let g = G1Ho::new(&m, &tags, b.budget);
    let w = hopfian_witness(&g, depth, b.budget).map_err(math)?;
    r.section("hopfian witness");
    r.line(w.to_string());
    for c in w.checks.iter().filter(|c| !c.pass) {
        r.fail(c.name.clone());
    }
    Ok(())
}

pub fn endo_search(
    r: &mut Report,
    b: &Budgets,
    flavor: Flavor,
    source: &Source,
    stage_bound: usize,
) -> Result<(), CliError> {
    r.budget("stage-bound", stage_bound);
    r.section("search");
    match flavor {
        Flavor::Ri => {
            let m = ri_scaffold(source, || chain_tree(Variant::Ri, 2, false))?;
            let tags = tag_table(r, b, m.strata(), stage_bound);
            let g = G1Ri::new(&m, &tags, b.budget);
            let out = rigid_search(&g, stage_bound, b.coeff_bound, b.budget).map_err(math)?;
            let rigid = out.survivors.len() == 2
                && out.survivors.iter().any(|s| s.is_identity())
                && out.survivors.iter().any(|s| s.is_minus_identity());
            r.line(out.to_string());
            r.line(format!("only id and -id: {rigid}"));
        }
        Flavor::Ho => {
            let m = ho_scaffold(source, b)?;
            let tags = tag_table(r, b, m.strata(), 0);
            let g = G1Ho::new(&m, &tags, b.budget);
            let out = hopfian_search(&g, stage_bound, b.budget).map_err(math)?;
            r.line(out.to_string());
            r.line(format!("onto and not injective found: {}", !out.survivors.is_empty()));
        }
    }
    Ok(())
}

/// The rigid scaffold behind the 2-nilpotent group: an embedding-kind chain
/// of length 2 with three fillers per stage.
pub struct NilContext {
    pub m: ScaffoldRI,
    pub tags: TagTable,
    e2_budget: usize,
}

impl NilContext {
    pub fn new(r: &mut Report, b: &Budgets) -> Result<Self, CliError> {
        let m = build_ri(
            &chain_tree(Variant::Ri, 2, true),
            &RiParams {
                kind: RiKind::Embedding,
                fillers_per_stage: 3,
                stages: None,
            },
        )
        .map_err(math)?;
        let tags = tag_table(r, b, m.strata(), 0);
        let primes: Vec<String> = NIL_PRIMES.iter().map(|p| p.to_string()).collect();
        r.budget("nil2-primes", primes.join(","));
        Ok(NilContext {
            m,
            tags,
            e2_budget: b.budget.max(100_000),
        })
    }

    pub fn g1(&self) -> G1Ri<'_> {
        G1Ri::new(&self.m, &self.tags, 20_000)
    }

    pub fn pairs(&self) -> Result<PairTag, CliError> {
        choose_pairs(&self.g1(), &NIL_PRIMES, self.e2_budget).map_err(math)
    }
}

pub fn nil2_check(r: &mut Report, b: &Budgets, ctx: &NilContext, pairs: &PairTag) -> Result<(), CliError> {
    let depth = b.depth.unwrap_or(2);
    r.budget("depth", depth);
    r.section("chosen pairs");
    for (p, (x, y)) in &pairs.chosen {
        r.line(format!("p {p}: x{x} x{y}"));
    }
    r.section("branch embedding");
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let emb = branch_embedding_nil(&ctx.m, &ctx.g1(), pairs, depth, b.samples, &mut rng).map_err(math)?;
    r.line(emb.to_string());
    r.check("branch embedding", emb.all_pass());
    r.section("torsion obstruction");
    for m in (2..=10).flat_map(|k| [k, -k]) {
        let ob = torsion_obstruction(pairs, m).map_err(math)?;
        let ok = !ob.z.is_identity() && ob.z_m2.is_identity() && ob.lifted.is_identity() && m % ob.p as i64 == 0;
        let s = r.check(&format!("torsion obstruction m = {m}"), ok);
        r.line(format!("m {m}: p {} z {} z^(m^2) {}: {s}", ob.p, ob.z, ob.z_m2));
    }
    Ok(())
}

pub fn prof_components(r: &mut Report, model: &ProfModel, a: &treegrp::profinite::ProfVec) {
    r.section("components");
    r.line(format!("a = {}", model.show(a)));
    for p in model.primes() {
        r.line(format!("c(a,{p}) = {}", model.show(&model.component(a, p))));
    }
}

pub fn prof_bezout(r: &mut Report, primes: &[u64], m: u32) -> Result<(), CliError> {
    let ell = bezout_witnesses(primes, m).map_err(input)?;
    r.section("bezout");
    for (p, l) in &ell {
        r.line(format!("l_{p} = {l}"));
    }
    let value = bezout_value(&ell, m);
    let s = r.check("bezout identity", value == 1.into());
    r.line(format!("sum l_p * k / p^{m} = {value}: {s}"));
    Ok(())
}

pub fn prof_embed(
    r: &mut Report,
    b: &Budgets,
    model: &ProfModel,
    window: &[u64],
    gens: &[treegrp::profinite::ProfVec],
) -> Result<(), CliError> {
    let rep = embed_check(model, window, gens, b.coeff_bound as i64, b.budget).map_err(math)?;
    r.section("embed-check");
    let w: Vec<String> = rep.window.iter().map(|p| p.to_string()).collect();
    r.line(format!("window {}", w.join(",")));
    r.line(format!("combinations {}", rep.sampled));
    r.line(format!("expected-equal pairs {}", rep.expected_equal));
    let s = r.check("embedding", rep.injective);
    r.line(format!("injective: {s}"));
    if let Some((u, v)) = &rep.counterexample {
        r.line(format!("counterexample {u:?} vs {v:?}"));
    }
    Ok(())
}
