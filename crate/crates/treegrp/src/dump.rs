//! Versioned text dumps of scaffolds.
//!
//! ```text
//! scaffold-dump v1
//! flavor ri
//! fillers 1
//! last-stage 1
//! tree:
//! variant ri
//! t0 - 0
//! t1 t0 1
//! branch: t0 t1
//! end-tree
//! birth x0 0
//! birth x1 1
//! kind ri
//! map t0:
//! map t1: x0->x1 x2->x0
//! ```
//!
//! Hopfian dumps add `tuple-cap k` and lines `witness n t x0,x3 -> x7,x9`.
//! Keys are written in sorted order, so equal scaffolds give equal dumps.
//! The reader keeps whatever the file says, including broken maps, so a
//! validator can name the clause that fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::scaffold::ho::{HoParts, ScaffoldHO};
use crate::scaffold::ri::{RiKind, RiParts, ScaffoldRI};
use crate::scaffold::{Elem, PartialMap, Strata};
use crate::tree::{parse_tree, NodeId, StratifiedTree, TreeError};

pub const DUMP_HEADER: &str = "scaffold-dump v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DumpError {
    #[error("missing or unsupported header, expected `{DUMP_HEADER}`")]
    Header,
    #[error("line {line}: {text}")]
    Malformed { line: usize, text: String },
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Clone, Debug)]
pub enum Scaffold {
    Ri(ScaffoldRI),
    Ho(ScaffoldHO),
}

fn names(tree: &StratifiedTree, t: NodeId) -> &str {
    tree.name(t)
}

fn elems(xs: &[Elem]) -> String {
    xs.iter().map(|x| format!("x{x}")).collect::<Vec<_>>().join(",")
}

fn header(out: &mut String, flavor: &str, tree: &StratifiedTree, strata: &Strata, fillers: usize) {
    let _ = writeln!(out, "{DUMP_HEADER}");
    let _ = writeln!(out, "flavor {flavor}");
    let _ = writeln!(out, "fillers {fillers}");
    let _ = writeln!(out, "last-stage {}", strata.last_stage());
    let _ = writeln!(out, "tree:");
    out.push_str(&tree.to_text());
    let _ = writeln!(out, "end-tree");
    for (x, n) in strata.births() {
        let _ = writeln!(out, "birth x{x} {n}");
    }
}

pub fn dump_ri(m: &ScaffoldRI) -> String {
    let parts = m.parts();
    let mut out = String::new();
    header(&mut out, "ri", &parts.tree, &parts.strata, parts.fillers_per_stage);
    let _ = writeln!(out, "kind {}", parts.kind.as_str());
    for (t, map) in parts.maps.iter().enumerate() {
        let pairs: Vec<String> = map.pairs().map(|(x, y)| format!("x{x}->x{y}")).collect();
        let _ = writeln!(out, "map {}: {}", names(&parts.tree, t), pairs.join(" "));
    }
    out
}

pub fn dump_ho(m: &ScaffoldHO) -> String {
    let parts = m.parts();
    let mut out = String::new();
    header(&mut out, "ho", &parts.tree, &parts.strata, parts.fillers_per_stage);
    let _ = writeln!(out, "tuple-cap {}", parts.tuple_cap);
    for (t, map) in parts.maps.iter().enumerate() {
        let pairs: Vec<String> = map.iter().map(|(x, y)| format!("x{x}->x{y}")).collect();
        let _ = writeln!(out, "map {}: {}", names(&parts.tree, t), pairs.join(" "));
    }
    for ((n, t, xs), zs) in &parts.witnesses {
        let _ = writeln!(
            out,
            "witness {n} {} {} -> {}",
            names(&parts.tree, *t),
            elems(xs),
            elems(zs)
        );
    }
    out
}

pub fn dump(s: &Scaffold) -> String {
    match s {
        Scaffold::Ri(m) => dump_ri(m),
        Scaffold::Ho(m) => dump_ho(m),
    }
}

fn parse_elem(s: &str) -> Option<Elem> {
    s.strip_prefix('x')?.parse().ok()
}

fn parse_elems(s: &str) -> Option<Vec<Elem>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|x| parse_elem(x.trim())).collect()
}

pub fn parse_dump(text: &str) -> Result<Scaffold, DumpError> {
    let mut lines = text.lines().enumerate().peekable();
    match lines.next() {
        Some((_, l)) if l.trim() == DUMP_HEADER => {}
        _ => return Err(DumpError::Header),
    }
    let mut flavor = None;
    let mut kind = RiKind::Standard;
    let mut fillers = None;
    let mut last = None;
    let mut cap = None;
    let mut tree_text = String::new();
    let mut tree = None;
    let mut births = BTreeMap::new();
    let mut raw_maps: Vec<(String, Vec<(Elem, Elem)>)> = Vec::new();
    let mut raw_witnesses: Vec<(usize, String, Vec<Elem>, Vec<Elem>)> = Vec::new();
    while let Some((i, line)) = lines.next() {
        let l = line.trim();
        if l.is_empty() {
            continue;
        }
        let bad = || DumpError::Malformed {
            line: i + 1,
            text: line.to_string(),
        };
        if l == "tree:" {
            for (_, tl) in lines.by_ref() {
                if tl.trim() == "end-tree" {
                    break;
                }
                tree_text.push_str(tl);
                tree_text.push('\n');
            }
            tree = Some(parse_tree(&tree_text)?);
            continue;
        }
        let (key, rest) = l.split_once(' ').ok_or_else(bad)?;
        match key {
            "flavor" => flavor = Some(rest.trim().to_string()),
            "kind" => {
                kind = match rest.trim() {
                    "ri" => RiKind::Standard,
                    "embedding" => RiKind::Embedding,
                    _ => return Err(bad()),
                }
            }
            "fillers" => fillers = Some(rest.trim().parse().map_err(|_| bad())?),
            "last-stage" => last = Some(rest.trim().parse().map_err(|_| bad())?),
            "tuple-cap" => cap = Some(rest.trim().parse().map_err(|_| bad())?),
            "birth" => {
                let (x, n) = rest.split_once(' ').ok_or_else(bad)?;
                let x = parse_elem(x.trim()).ok_or_else(bad)?;
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                births.insert(x, n);
            }
            "map" => {
                let (t, pairs) = rest.split_once(':').ok_or_else(bad)?;
                let mut ps = Vec::new();
                for p in pairs.split_whitespace() {
                    let (x, y) = p.split_once("->").ok_or_else(bad)?;
                    ps.push((
                        parse_elem(x).ok_or_else(bad)?,
                        parse_elem(y).ok_or_else(bad)?,
                    ));
                }
                raw_maps.push((t.trim().to_string(), ps));
            }
            "witness" => {
                let (lhs, zs) = rest.split_once("->").ok_or_else(bad)?;
                let words: Vec<&str> = lhs.split_whitespace().collect();
                let (n, t, xs) = match words.as_slice() {
                    [n, t, xs] => (*n, *t, *xs),
                    [n, t] => (*n, *t, ""),
                    _ => return Err(bad()),
                };
                raw_witnesses.push((
                    n.parse().map_err(|_| bad())?,
                    t.to_string(),
                    parse_elems(xs).ok_or_else(bad)?,
                    parse_elems(zs.trim()).ok_or_else(bad)?,
                ));
            }
            _ => return Err(bad()),
        }
    }
    let tree = tree.ok_or(DumpError::Missing("tree"))?;
    let fillers = fillers.ok_or(DumpError::Missing("fillers"))?;
    let strata = Strata::from_births(births, last.ok_or(DumpError::Missing("last-stage"))?);
    let node = |name: &str| tree.by_name(name).map_err(DumpError::from);
    match flavor.as_deref() {
        Some("ri") => {
            let mut maps = vec![PartialMap::new(); tree.len()];
            for (t, ps) in raw_maps {
                maps[node(&t)?] = PartialMap::from_pairs(ps);
            }
            Ok(Scaffold::Ri(ScaffoldRI::from_parts(RiParts {
                tree,
                kind,
                fillers_per_stage: fillers,
                strata,
                maps,
            })))
        }
        Some("ho") => {
            let mut maps = vec![BTreeMap::new(); tree.len()];
            for (t, ps) in raw_maps {
                maps[node(&t)?] = ps.into_iter().collect();
            }
            let mut witnesses = BTreeMap::new();
            for (n, t, xs, zs) in raw_witnesses {
                witnesses.insert((n, node(&t)?, xs), zs);
            }
            Ok(Scaffold::Ho(ScaffoldHO::from_parts(HoParts {
                tree,
                tuple_cap: cap.ok_or(DumpError::Missing("tuple-cap"))?,
                fillers_per_stage: fillers,
                strata,
                maps,
                witnesses,
            })))
        }
        _ => Err(DumpError::Missing("flavor")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaffold::ho::{build_ho, HoParams};
    use crate::scaffold::ri::{build_ri, RiParams};
    use crate::tree::{chain_tree, Variant};

    #[test]
    fn ri_round_trip() {
        let m = build_ri(&chain_tree(Variant::Ri, 3, true), &RiParams::default()).unwrap();
        let text = dump_ri(&m);
        let Scaffold::Ri(back) = parse_dump(&text).unwrap() else {
            panic!("flavor")
        };
        assert_eq!(back, m);
        assert_eq!(dump_ri(&back), text);
    }

    #[test]
    fn ho_round_trip() {
        let tree = parse_tree("variant ho\nt0 - 0\nt1 t0 1\nt2 t0 1\nbranch: t0 t1\n").unwrap();
        let m = build_ho(&tree, &HoParams::default()).unwrap();
        let text = dump_ho(&m);
        let Scaffold::Ho(back) = parse_dump(&text).unwrap() else {
            panic!("flavor")
        };
        assert_eq!(back.parts(), m.parts());
    }

    #[test]
    fn rejects_bad_header() {
        assert_eq!(parse_dump("scaffold-dump v0\n").unwrap_err(), DumpError::Header);
    }
}
