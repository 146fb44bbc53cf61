//! Stratified rooted trees.
//!
//! A tree is given by its nodes (each with a parent and a birth stage) and
//! the cumulative strata `T_0 ⊆ T_1 ⊆ …` derived from the births. An
//! infinite tree is modelled by a finite truncation together with a
//! designated chain of nodes, the branch rule.
//!
//! # File format
//!
//! ```text
//! # comment
//! variant ri            # or `ho`; defaults to `ri`
//! t0 - 0                # <id> <parent-id|-> <birth-stage>
//! t1 t0 1
//! stratum 0: t0         # optional; must list the whole of T_n
//! stratum 1: t0 t1
//! branch: t0 t1         # optional designated chain, one node per depth
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Every stage adds at least one node.
    Ri,
    /// Every stage adds at least two nodes.
    Ho,
}

impl Variant {
    pub fn min_new_per_stage(self) -> usize {
        match self {
            Variant::Ri => 1,
            Variant::Ho => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Ri => "ri",
            Variant::Ho => "ho",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub name: String,
    pub parent: Option<NodeId>,
    pub birth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("line {line}: malformed line `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("more than one root: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("no root node")]
    NoRoot,
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("parent pointers of `{0}` form a cycle")]
    ParentCycle(String),
    #[error("stratum violation at node `{node}`: {reason}")]
    StratumViolation { node: String, reason: String },
    #[error("stage {0} is beyond the last stratum")]
    StageUnknown(usize),
    #[error("branch rule violation at depth {depth}: {reason}")]
    BranchViolation { depth: usize, reason: String },
    #[error("branch rule has no node at depth {0}")]
    BranchTooShort(usize),
    #[error("tree has no branch rule")]
    NoBranch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratifiedTree {
    nodes: Vec<TreeNode>,
    variant: Variant,
    branch: Option<Vec<NodeId>>,
    root: NodeId,
    levels: Vec<usize>,
    children: Vec<Vec<NodeId>>,
    strata: Vec<Vec<NodeId>>,
}

impl StratifiedTree {
    /// Builds and validates a tree from `(name, parent, birth)` triples.
    pub fn new(
        variant: Variant,
        nodes: Vec<TreeNode>,
        branch: Option<Vec<NodeId>>,
    ) -> Result<Self, TreeError> {
        let n = nodes.len();
        let mut root = None;
        let mut seen = BTreeSet::new();
        for (i, node) in nodes.iter().enumerate() {
            if !seen.insert(node.name.as_str()) {
                return Err(TreeError::DuplicateNode(node.name.clone()));
            }
            match node.parent {
                None => {
                    if let Some(r) = root {
                        let r: NodeId = r;
                        return Err(TreeError::MultipleRoots(
                            nodes[r].name.clone(),
                            node.name.clone(),
                        ));
                    }
                    root = Some(i);
                }
                Some(p) if p >= n => return Err(TreeError::UnknownNode(format!("#{p}"))),
                Some(_) => {}
            }
        }
        let root = root.ok_or(TreeError::NoRoot)?;

        let mut levels = vec![usize::MAX; n];
        levels[root] = 0;
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            while levels[cur] == usize::MAX {
                if path.len() > n {
                    return Err(TreeError::ParentCycle(nodes[start].name.clone()));
                }
                path.push(cur);
                cur = nodes[cur].parent.expect("only the root lacks a parent");
            }
            let mut lev = levels[cur];
            for &p in path.iter().rev() {
                lev += 1;
                levels[p] = lev;
            }
        }

        let mut children = vec![Vec::new(); n];
        for (i, node) in nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                children[p].push(i);
            }
        }

        if nodes[root].birth != 0 {
            return Err(TreeError::StratumViolation {
                node: nodes[root].name.clone(),
                reason: "the root must be born at stage 0".into(),
            });
        }
        for (i, node) in nodes.iter().enumerate() {
            if i != root && node.birth == 0 {
                return Err(TreeError::StratumViolation {
                    node: node.name.clone(),
                    reason: "T_0 contains only the root".into(),
                });
            }
            if levels[i] > node.birth {
                return Err(TreeError::StratumViolation {
                    node: node.name.clone(),
                    reason: format!("level {} exceeds birth stage {}", levels[i], node.birth),
                });
            }
            if let Some(p) = node.parent {
                if nodes[p].birth >= node.birth {
                    return Err(TreeError::StratumViolation {
                        node: node.name.clone(),
                        reason: format!(
                            "parent `{}` is born at stage {}, not before {}",
                            nodes[p].name, nodes[p].birth, node.birth
                        ),
                    });
                }
            }
        }

        let last = nodes.iter().map(|t| t.birth).max().unwrap_or(0);
        let mut strata = Vec::with_capacity(last + 1);
        for stage in 0..=last {
            let s: Vec<NodeId> = (0..n).filter(|&i| nodes[i].birth <= stage).collect();
            strata.push(s);
        }
        for stage in 1..=last {
            let fresh = strata[stage].len() - strata[stage - 1].len();
            if fresh < variant.min_new_per_stage() {
                let witness = strata[stage]
                    .iter()
                    .find(|&&i| nodes[i].birth == stage)
                    .map(|&i| nodes[i].name.clone())
                    .unwrap_or_else(|| format!("<stage {stage}>"));
                return Err(TreeError::StratumViolation {
                    node: witness,
                    reason: format!(
                        "stage {stage} adds {fresh} node(s); variant {} needs at least {}",
                        variant.as_str(),
                        variant.min_new_per_stage()
                    ),
                });
            }
        }

        let tree = StratifiedTree {
            nodes,
            variant,
            branch: None,
            root,
            levels,
            children,
            strata,
        };
        match branch {
            None => Ok(tree),
            Some(chain) => tree.with_branch(chain),
        }
    }

    /// Attaches a designated chain `t_0 <_T t_1 <_T …` starting at the root.
    pub fn with_branch(mut self, chain: Vec<NodeId>) -> Result<Self, TreeError> {
        for (d, &t) in chain.iter().enumerate() {
            if t >= self.nodes.len() {
                return Err(TreeError::BranchViolation {
                    depth: d,
                    reason: format!("no node #{t}"),
                });
            }
            let expected_parent = if d == 0 { None } else { Some(chain[d - 1]) };
            if self.nodes[t].parent != expected_parent {
                return Err(TreeError::BranchViolation {
                    depth: d,
                    reason: format!("`{}` does not extend the previous node", self.nodes[t].name),
                });
            }
        }
        self.branch = Some(chain);
        Ok(self)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, t: NodeId) -> Result<&TreeNode, TreeError> {
        self.nodes
            .get(t)
            .ok_or_else(|| TreeError::UnknownNode(format!("#{t}")))
    }

    pub fn name(&self, t: NodeId) -> &str {
        &self.nodes[t].name
    }

    pub fn by_name(&self, name: &str) -> Result<NodeId, TreeError> {
        self.nodes
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| TreeError::UnknownNode(name.to_string()))
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, t: NodeId) -> Option<NodeId> {
        self.nodes[t].parent
    }

    /// The stage `𝐧(t)` at which `t` enters.
    pub fn birth(&self, t: NodeId) -> usize {
        self.nodes[t].birth
    }

    pub fn children(&self, t: NodeId) -> &[NodeId] {
        &self.children[t]
    }

    pub fn level(&self, t: NodeId) -> Result<usize, TreeError> {
        self.node(t)?;
        Ok(self.levels[t])
    }

    /// Strict ancestors of `t`, nearest first.
    pub fn ancestors(&self, t: NodeId) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.levels[t]);
        let mut cur = self.nodes[t].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    /// `s ≤_T t`.
    pub fn leq(&self, s: NodeId, t: NodeId) -> bool {
        if self.levels[s] > self.levels[t] {
            return false;
        }
        let mut cur = t;
        for _ in 0..(self.levels[t] - self.levels[s]) {
            cur = self.nodes[cur].parent.expect("level > 0 has a parent");
        }
        cur == s
    }

    /// `s <_T t`.
    pub fn lt(&self, s: NodeId, t: NodeId) -> bool {
        s != t && self.leq(s, t)
    }

    pub fn meet(&self, s: NodeId, t: NodeId) -> Result<NodeId, TreeError> {
        self.node(s)?;
        self.node(t)?;
        let (mut a, mut b) = (s, t);
        while self.levels[a] > self.levels[b] {
            a = self.nodes[a].parent.expect("non-root");
        }
        while self.levels[b] > self.levels[a] {
            b = self.nodes[b].parent.expect("non-root");
        }
        while a != b {
            a = self.nodes[a].parent.expect("non-root");
            b = self.nodes[b].parent.expect("non-root");
        }
        Ok(a)
    }

    /// `{s : t ≤_T s}`, sorted.
    pub fn cone(&self, t: NodeId) -> Result<Vec<NodeId>, TreeError> {
        self.node(t)?;
        let mut out = Vec::new();
        let mut stack = vec![t];
        while let Some(s) = stack.pop() {
            out.push(s);
            stack.extend(self.children[s].iter().copied());
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Foundation rank of the finite truncation: the height of the tree.
    pub fn rank(&self) -> usize {
        fn go(tree: &StratifiedTree, t: NodeId) -> usize {
            tree.children[t]
                .iter()
                .map(|&c| 1 + go(tree, c))
                .max()
                .unwrap_or(0)
        }
        go(self, self.root)
    }

    /// Number of strata `T_0, …, T_{last}`.
    pub fn stage_count(&self) -> usize {
        self.strata.len()
    }

    pub fn stratum(&self, n: usize) -> Result<&[NodeId], TreeError> {
        self.strata
            .get(n)
            .map(Vec::as_slice)
            .ok_or(TreeError::StageUnknown(n))
    }

    /// `T_n \ T_{<n}`.
    pub fn new_at(&self, n: usize) -> Result<Vec<NodeId>, TreeError> {
        Ok(self
            .stratum(n)?
            .iter()
            .copied()
            .filter(|&t| self.nodes[t].birth == n)
            .collect())
    }

    pub fn branch(&self) -> Option<&[NodeId]> {
        self.branch.as_deref()
    }

    /// The branch node of level `d`.
    pub fn branch_node(&self, d: usize) -> Result<NodeId, TreeError> {
        let chain = self.branch.as_ref().ok_or(TreeError::NoBranch)?;
        chain.get(d).copied().ok_or(TreeError::BranchTooShort(d))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "variant {}", self.variant.as_str());
        for node in &self.nodes {
            let parent = node
                .parent
                .map(|p| self.nodes[p].name.as_str())
                .unwrap_or("-");
            let _ = writeln!(out, "{} {} {}", node.name, parent, node.birth);
        }
        for (n, s) in self.strata.iter().enumerate() {
            let names: Vec<&str> = s.iter().map(|&t| self.nodes[t].name.as_str()).collect();
            let _ = writeln!(out, "stratum {n}: {}", names.join(" "));
        }
        if let Some(chain) = &self.branch {
            let names: Vec<&str> = chain.iter().map(|&t| self.nodes[t].name.as_str()).collect();
            let _ = writeln!(out, "branch: {}", names.join(" "));
        }
        out
    }
}

/// Parses the tree file format described in the module docs.
pub fn parse_tree(text: &str) -> Result<StratifiedTree, TreeError> {
    let mut variant = Variant::Ri;
    let mut raw: Vec<(String, Option<String>, usize)> = Vec::new();
    let mut strata: BTreeMap<usize, (usize, Vec<String>)> = BTreeMap::new();
    let mut branch: Option<Vec<String>> = None;

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let malformed = || TreeError::MalformedLine {
            line: lineno,
            text: line.to_string(),
        };
        if let Some(rest) = content.strip_prefix("stratum") {
            let (num, ids) = rest.split_once(':').ok_or_else(malformed)?;
            let n: usize = num.trim().parse().map_err(|_| malformed())?;
            let ids = ids.split_whitespace().map(str::to_string).collect();
            if strata.insert(n, (lineno, ids)).is_some() {
                return Err(malformed());
            }
            continue;
        }
        if let Some(rest) = content.strip_prefix("branch:") {
            branch = Some(rest.split_whitespace().map(str::to_string).collect());
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        match words.as_slice() {
            ["variant", "ri"] => variant = Variant::Ri,
            ["variant", "ho"] => variant = Variant::Ho,
            [id, parent, birth] => {
                let birth: usize = birth.parse().map_err(|_| malformed())?;
                let parent = if *parent == "-" {
                    None
                } else {
                    Some(parent.to_string())
                };
                raw.push((id.to_string(), parent, birth));
            }
            _ => return Err(malformed()),
        }
    }

    let mut index = BTreeMap::new();
    for (i, (id, _, _)) in raw.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(TreeError::DuplicateNode(id.clone()));
        }
    }
    let mut nodes = Vec::with_capacity(raw.len());
    for (id, parent, birth) in &raw {
        let parent = match parent {
            None => None,
            Some(p) => Some(
                *index
                    .get(p)
                    .ok_or_else(|| TreeError::UnknownNode(p.clone()))?,
            ),
        };
        nodes.push(TreeNode {
            name: id.clone(),
            parent,
            birth: *birth,
        });
    }
    let tree = StratifiedTree::new(variant, nodes, None)?;

    for (&n, (_, ids)) in &strata {
        let listed: BTreeSet<NodeId> = ids
            .iter()
            .map(|id| tree.by_name(id))
            .collect::<Result<_, _>>()?;
        let expected: BTreeSet<NodeId> = match tree.stratum(n) {
            Ok(s) => s.iter().copied().collect(),
            Err(_) => {
                let node = ids.first().cloned().unwrap_or_default();
                return Err(TreeError::StratumViolation {
                    node,
                    reason: format!("stratum {n} lies beyond every birth stage"),
                });
            }
        };
        if let Some(&missing) = expected.difference(&listed).next() {
            return Err(TreeError::StratumViolation {
                node: tree.name(missing).to_string(),
                reason: format!(
                    "born at stage {} but missing from stratum {n}",
                    tree.birth(missing)
                ),
            });
        }
        if let Some(&extra) = listed.difference(&expected).next() {
            return Err(TreeError::StratumViolation {
                node: tree.name(extra).to_string(),
                reason: format!(
                    "listed in stratum {n} but born at stage {}",
                    tree.birth(extra)
                ),
            });
        }
    }

    match branch {
        None => Ok(tree),
        Some(names) => {
            let chain = names
                .iter()
                .map(|id| tree.by_name(id))
                .collect::<Result<Vec<_>, _>>()?;
            tree.with_branch(chain)
        }
    }
}

/// How parents are chosen for new nodes in [`random_tree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParentPolicy {
    /// Any node born earlier.
    Any,
    /// Only nodes born at the immediately preceding stage, so `𝐧(t) = lev(t)`.
    Synchronous,
}

#[derive(Clone, Debug)]
pub struct TreeGenParams {
    pub variant: Variant,
    /// Index of the last stratum.
    pub last_stage: usize,
    /// Inclusive range of new nodes per stage.
    pub new_per_stage: (usize, usize),
    pub max_nodes: usize,
    pub policy: ParentPolicy,
    /// Grow a designated chain with one new node per stage.
    pub branch: bool,
}

/// Pseudo-random tree; fully determined by the RNG state and the parameters.
pub fn random_tree<R: Rng>(rng: &mut R, params: &TreeGenParams) -> StratifiedTree {
    let lo = params.new_per_stage.0.max(params.variant.min_new_per_stage());
    let hi = params.new_per_stage.1.max(lo);
    let mut nodes = vec![TreeNode {
        name: "t0".into(),
        parent: None,
        birth: 0,
    }];
    let mut chain = vec![0];
    for stage in 1..=params.last_stage {
        let room = params.max_nodes.saturating_sub(nodes.len());
        let want = rng.gen_range(lo..=hi).min(room.max(lo));
        let candidates: Vec<NodeId> = match params.policy {
            ParentPolicy::Any => (0..nodes.len()).collect(),
            ParentPolicy::Synchronous => (0..nodes.len())
                .filter(|&i| nodes[i].birth + 1 == stage)
                .collect(),
        };
        for j in 0..want {
            let parent = if params.branch && j == 0 {
                *chain.last().expect("chain starts at the root")
            } else {
                candidates[rng.gen_range(0..candidates.len())]
            };
            let id = nodes.len();
            nodes.push(TreeNode {
                name: format!("t{id}"),
                parent: Some(parent),
                birth: stage,
            });
            if params.branch && j == 0 {
                chain.push(id);
            }
        }
    }
    let branch = params.branch.then_some(chain);
    StratifiedTree::new(params.variant, nodes, branch).expect("generator respects invariants")
}

/// The chain `t0 <_T t1 <_T … <_T t_len` with `t_i` born at stage `i`.
pub fn chain_tree(variant: Variant, len: usize, with_branch: bool) -> StratifiedTree {
    let nodes = (0..=len)
        .map(|i| TreeNode {
            name: format!("t{i}"),
            parent: i.checked_sub(1),
            birth: i,
        })
        .collect();
    let branch = with_branch.then(|| (0..=len).collect());
    StratifiedTree::new(variant, nodes, branch).expect("a chain is a valid tree")
}

/// Advances a non-decreasing sequence over `0..bound`; false when exhausted.
fn next_multiset(seq: &mut [usize], bound: usize) -> bool {
    for i in (0..seq.len()).rev() {
        if seq[i] + 1 < bound {
            let v = seq[i] + 1;
            for q in &mut seq[i..] {
                *q = v;
            }
            return true;
        }
    }
    false
}

/// Every tree (up to the order of siblings born at the same stage) whose last
/// stratum is at most `max_stage` and which adds at most `max_new` nodes per
/// stage. Parents of nodes born at one stage are listed in non-decreasing
/// order, which removes most relabelling duplicates.
pub fn all_trees(variant: Variant, max_stage: usize, max_new: usize) -> Vec<StratifiedTree> {
    fn extend(
        variant: Variant,
        nodes: &mut Vec<TreeNode>,
        stage: usize,
        max_stage: usize,
        max_new: usize,
        out: &mut Vec<StratifiedTree>,
    ) {
        out.push(StratifiedTree::new(variant, nodes.clone(), None).expect("valid by construction"));
        if stage > max_stage {
            return;
        }
        let earlier = nodes.len();
        for count in variant.min_new_per_stage()..=max_new {
            let mut parents = vec![0usize; count];
            loop {
                let base = nodes.len();
                for (j, &p) in parents.iter().enumerate() {
                    nodes.push(TreeNode {
                        name: format!("t{}", base + j),
                        parent: Some(p),
                        birth: stage,
                    });
                }
                extend(variant, nodes, stage + 1, max_stage, max_new, out);
                nodes.truncate(base);
                if !next_multiset(&mut parents, earlier) {
                    break;
                }
            }
        }
    }
    let mut nodes = vec![TreeNode {
        name: "t0".into(),
        parent: None,
        birth: 0,
    }];
    let mut out = Vec::new();
    extend(variant, &mut nodes, 1, max_stage, max_new, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_root() {
        let t = parse_tree("t0 - 0").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.stage_count(), 1);
        assert_eq!(t.rank(), 0);
    }

    #[test]
    fn stratum_missing_root() {
        let err = parse_tree("t0 - 0\nt1 t0 1\nstratum 1: t1\n").unwrap_err();
        assert!(matches!(err, TreeError::StratumViolation { ref node, .. } if node == "t0"));
    }

    #[test]
    fn three_chain() {
        let text = "t0 - 0\nt1 t0 1\nt2 t1 2\nstratum 0: t0\nstratum 1: t0 t1\nstratum 2: t0 t1 t2\n";
        let t = parse_tree(text).unwrap();
        assert_eq!(t.rank(), 2);
        assert_eq!(t.level(2).unwrap(), 2);
        assert_eq!(t.cone(1).unwrap(), vec![1, 2]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_tree("t0 - 0\nt1 - 1"),
            Err(TreeError::MultipleRoots(..))
        ));
        assert!(matches!(
            parse_tree("t0 - 0\nt1 t0"),
            Err(TreeError::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_tree("variant ho\nt0 - 0\nt1 t0 1"),
            Err(TreeError::StratumViolation { .. })
        ));
    }

    #[test]
    fn meet_and_levels() {
        let t = parse_tree("t0 - 0\nt1 t0 1\na t1 2\nb t1 2").unwrap();
        let (a, b) = (t.by_name("a").unwrap(), t.by_name("b").unwrap());
        assert_eq!(t.meet(a, b).unwrap(), 1);
        assert_eq!(t.meet(0, a).unwrap(), 0);
        assert_eq!(t.meet(a, a).unwrap(), a);
        assert_eq!(t.rank(), 2);
        let star = parse_tree("t0 - 0\nx t0 1\ny t0 2").unwrap();
        assert_eq!(star.rank(), 1);
    }

    #[test]
    fn five_chain_level() {
        let t = chain_tree(Variant::Ri, 4, false);
        assert_eq!(t.level(4).unwrap(), 4);
        assert!(t.stratum(5).is_err());
    }

    #[test]
    fn round_trip() {
        let t = chain_tree(Variant::Ri, 3, true);
        let u = parse_tree(&t.to_text()).unwrap();
        assert_eq!(t, u);
    }

    #[test]
    fn enumeration_counts() {
        // stage 1: 1 or 2 children of the root; stage 2 adds 1 or 2 more.
        let trees = all_trees(Variant::Ri, 1, 2);
        assert_eq!(trees.len(), 3);
        assert!(trees.iter().all(|t| t.stage_count() <= 2));
    }
}
