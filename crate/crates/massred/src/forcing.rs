//! Finite trees of strings, full-branching and fatness checks, and the
//! step-by-step construction that defeats a simulated functional.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::base::{nat, Nat, OrderFuncExpr};
use crate::error::{Error, Result};

/// A finite string over `ω`.
pub type Node = Vec<u32>;

/// Cap on the number of nodes of a materialized complete tree.
pub const MAX_TREE_NODES: usize = 1 << 20;

pub fn node_csv(v: &[u32]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_csv(s: &str) -> Result<Node> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| Error::Invalid(format!("bad node value {p:?}")))
        })
        .collect()
}

fn is_prefix(a: &[u32], b: &[u32]) -> bool {
    a.len() <= b.len() && b[..a.len()] == *a
}

/// (length, lex) order, the tie-break used throughout.
fn shortlex(a: &Node, b: &Node) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// A prefix-closed finite set of `F`-bounded strings of length at most `depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedTree {
    pub f: OrderFuncExpr,
    pub depth: usize,
    branching: Vec<u32>,
    nodes: BTreeSet<Node>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    #[serde(rename = "F")]
    f: OrderFuncExpr,
    depth: usize,
    nodes: Vec<String>,
}

impl Serialize for PrunedTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeRepr {
            f: self.f.clone(),
            depth: self.depth,
            nodes: self.sorted_nodes().iter().map(|n| node_csv(n)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PrunedTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TreeRepr::deserialize(d)?;
        let nodes = r
            .nodes
            .iter()
            .map(|s| parse_csv(s))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        PrunedTree::from_nodes(r.f, r.depth, nodes).map_err(serde::de::Error::custom)
    }
}

fn branching_table(f: &OrderFuncExpr, depth: usize) -> Result<Vec<u32>> {
    f.table(depth)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.to_u32()
                .filter(|&x| x > 0)
                .ok_or_else(|| Error::BoundViolation {
                    n: i,
                    detail: format!("branching {v} must be in 1..2^32"),
                })
        })
        .collect()
}

impl PrunedTree {
    /// Every `F`-bounded string of length at most `depth`.
    pub fn complete(f: OrderFuncExpr, depth: usize) -> Result<Self> {
        let branching = branching_table(&f, depth)?;
        let mut total = 1usize;
        let mut level = 1usize;
        for &b in &branching {
            level = level.saturating_mul(b as usize);
            total = total.saturating_add(level);
            if total > MAX_TREE_NODES {
                return Err(Error::RangeExceeded(format!(
                    "complete tree exceeds {MAX_TREE_NODES} nodes"
                )));
            }
        }
        let mut nodes = BTreeSet::new();
        let mut frontier = vec![vec![]];
        for &b in &branching {
            let mut next = Vec::with_capacity(frontier.len() * b as usize);
            for v in &frontier {
                for x in 0..b {
                    let mut c = v.clone();
                    c.push(x);
                    next.push(c);
                }
            }
            nodes.extend(frontier);
            frontier = next;
        }
        nodes.extend(frontier);
        Ok(PrunedTree {
            f,
            depth,
            branching,
            nodes,
        })
    }

    /// The prefix closure of `nodes`, validated against `F` and `depth`.
    pub fn from_nodes(
        f: OrderFuncExpr,
        depth: usize,
        nodes: impl IntoIterator<Item = Node>,
    ) -> Result<Self> {
        let branching = branching_table(&f, depth)?;
        let mut t = PrunedTree {
            f,
            depth,
            branching,
            nodes: BTreeSet::new(),
        };
        for v in nodes {
            t.check_node(&v)?;
            for i in 0..=v.len() {
                t.nodes.insert(v[..i].to_vec());
            }
        }
        Ok(t)
    }

    fn check_node(&self, v: &[u32]) -> Result<()> {
        if v.len() > self.depth {
            return Err(Error::DepthExhausted {
                required: v.len().to_string(),
                available: self.depth,
            });
        }
        for (i, &x) in v.iter().enumerate() {
            if x >= self.branching[i] {
                return Err(Error::BoundViolation {
                    n: i,
                    detail: format!("{x} >= F({i}) = {}", self.branching[i]),
                });
            }
        }
        Ok(())
    }

    /// `F(i)` for `i < depth`.
    pub fn branching(&self, i: usize) -> u32 {
        self.branching[i]
    }

    fn with_nodes(&self, nodes: BTreeSet<Node>) -> PrunedTree {
        PrunedTree {
            f: self.f.clone(),
            depth: self.depth,
            branching: self.branching.clone(),
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.nodes.contains(v)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    /// Nodes in (length, lex) order.
    pub fn sorted_nodes(&self) -> Vec<Node> {
        let mut v: Vec<Node> = self.nodes.iter().cloned().collect();
        v.sort_by(shortlex);
        v
    }

    pub fn children(&self, v: &[u32]) -> Vec<Node> {
        if v.len() >= self.depth {
            return vec![];
        }
        (0..self.branching[v.len()])
            .map(|x| {
                let mut c = v.to_vec();
                c.push(x);
                c
            })
            .filter(|c| self.nodes.contains(c))
            .collect()
    }

    pub fn is_leaf(&self, v: &[u32]) -> bool {
        self.contains(v) && self.children(v).is_empty()
    }

    /// Leaves in lex order.
    pub fn leaves(&self) -> Vec<Node> {
        self.nodes
            .iter()
            .filter(|v| self.children(v).is_empty())
            .cloned()
            .collect()
    }

    /// Leaves extending `sigma`, in lex order.
    pub fn leaves_above(&self, sigma: &[u32]) -> Vec<Node> {
        self.nodes
            .range(sigma.to_vec()..)
            .take_while(|v| is_prefix(sigma, v))
            .filter(|v| self.children(v).is_empty())
            .cloned()
            .collect()
    }

    pub fn max_len(&self) -> usize {
        self.nodes.iter().map(|v| v.len()).max().unwrap_or(0)
    }

    /// The nodes comparable with some member of `keep`.
    pub fn restrict_compatible(&self, keep: &BTreeSet<Node>) -> PrunedTree {
        let nodes = self
            .nodes
            .iter()
            .filter(|v| {
                (0..=v.len()).any(|i| keep.contains(&v[..i])) || self.has_extension_in(v, keep)
            })
            .cloned()
            .collect();
        self.with_nodes(nodes)
    }

    fn has_extension_in(&self, v: &[u32], keep: &BTreeSet<Node>) -> bool {
        keep.range(v.to_vec()..)
            .next()
            .is_some_and(|c| is_prefix(v, c))
    }

    pub fn union(&self, other: &PrunedTree) -> PrunedTree {
        self.with_nodes(self.nodes.union(&other.nodes).cloned().collect())
    }

    pub fn is_subtree_of(&self, other: &PrunedTree) -> bool {
        self.nodes.is_subset(&other.nodes)
    }

    /// One node per line, values space-separated, in (length, lex) order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in self.sorted_nodes() {
            s.push_str(
                &v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            s.push('\n');
        }
        s
    }

    pub fn parse_dump(f: OrderFuncExpr, depth: usize, text: &str) -> Result<Self> {
        let nodes = text
            .lines()
            .map(|l| parse_csv(&l.split_whitespace().collect::<Vec<_>>().join(",")))
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodes(f, depth, nodes)
    }
}

/// Every `F`-bounded extension of `sigma` of length `|sigma| + n` lies in `t`.
pub fn full_branching_check(t: &PrunedTree, sigma: &[u32], n: usize) -> Result<bool> {
    if !t.contains(sigma) {
        return Err(Error::NodeAbsent(sigma.to_vec()));
    }
    if sigma.len() + n > t.depth {
        return Err(Error::DepthExhausted {
            required: (sigma.len() + n).to_string(),
            available: t.depth,
        });
    }
    let mut level = vec![sigma.to_vec()];
    for _ in 0..n {
        let mut next = Vec::new();
        for v in &level {
            let b = t.branching[v.len()] as usize;
            let kids = t.children(v);
            if kids.len() != b {
                return Ok(false);
            }
            next.extend(kids);
        }
        level = next;
    }
    Ok(true)
}

/// Largest `n` with `t` full-branching of height `n` above `sigma`.
pub fn full_branching_height(t: &PrunedTree, sigma: &[u32]) -> Result<usize> {
    let mut n = 0;
    while sigma.len() + n < t.depth && full_branching_check(t, sigma, n + 1)? {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinResult {
    pub case: u8,
    pub tree: PrunedTree,
    #[serde(with = "csv_node")]
    pub tau: Node,
    /// Certified full-branching height above `tau`.
    pub height: usize,
}

mod csv_node {
    use super::{node_csv, parse_csv, Node};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Node, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&node_csv(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Node, D::Error> {
        parse_csv(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Split the leaves above `sigma` into `c1`, `c2` and keep one side so that a
/// full-branching part of height `n` survives, trying `c1` first.
pub fn thin_partition(
    t: &PrunedTree,
    sigma: &[u32],
    n: usize,
    c1: &BTreeSet<Node>,
    c2: &BTreeSet<Node>,
) -> Result<ThinResult> {
    if !full_branching_check(t, sigma, 2 * n)? {
        return Err(Error::NotFullBranching(format!(
            "height {} above {:?}",
            2 * n,
            node_csv(sigma)
        )));
    }
    let leaves: BTreeSet<Node> = t.leaves_above(sigma).into_iter().collect();
    if !c1.is_disjoint(c2) {
        return Err(Error::NotAPartition("sides overlap".into()));
    }
    let union: BTreeSet<Node> = c1.union(c2).cloned().collect();
    if union != leaves {
        return Err(Error::NotAPartition(format!(
            "sides cover {} nodes, {} leaves above sigma",
            union.len(),
            leaves.len()
        )));
    }
    let t1 = t.restrict_compatible(c1);
    if t1.contains(sigma) && full_branching_check(&t1, sigma, n)? {
        return Ok(ThinResult {
            case: 1,
            tree: t1,
            tau: sigma.to_vec(),
            height: n,
        });
    }
    let t2 = t.restrict_compatible(c2);
    let mut level = vec![sigma.to_vec()];
    for _ in 0..n {
        level = level.iter().flat_map(|v| t.children(v)).collect();
    }
    for tau in level {
        if t2.contains(&tau) && full_branching_check(&t2, &tau, n)? {
            return Ok(ThinResult {
                case: 2,
                tree: t2,
                tau,
                height: n,
            });
        }
    }
    Err(Error::NotFullBranching(
        "neither side keeps a full-branching part".into(),
    ))
}

/// `w_F(n) = F(0)·F(1)···F(n)`.
pub fn w_f(f: &OrderFuncExpr, n: u64) -> Result<Nat> {
    let mut p = Nat::one();
    for i in 0..=n {
        p *= f.eval_raw(i)?;
    }
    Ok(p)
}

/// `2^(w_F(len)) < G(n)`, decided symbolically.
pub fn growth_holds(f: &OrderFuncExpr, g: &OrderFuncExpr, len: u64, n: u64) -> Result<bool> {
    g.exceeds_pow2(n, &w_f(f, len)?)
}

/// `2^(n·t)`, or `None` when it exceeds any tree depth.
pub fn strict_height(n: u64, t: u64) -> Option<u64> {
    let e = n.checked_mul(t)?;
    (e < 63).then(|| 1u64 << e)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafCert {
    #[serde(with = "csv_node")]
    pub leaf: Node,
    pub ms: Vec<usize>,
}

/// Witnesses `m_1 < … < m_k` per leaf; `heights[t]` is the full-branching
/// height demanded at index `t`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FatnessCert {
    pub ns: Vec<u64>,
    pub heights: Vec<u64>,
    pub leaves: Vec<LeafCert>,
}

fn leaf_ok(
    t: &PrunedTree,
    g: &OrderFuncExpr,
    leaf: &[u32],
    m: usize,
    n: u64,
    h: u64,
) -> Result<bool> {
    let h = h as usize;
    if m >= leaf.len() || m + h > t.depth {
        return Ok(false);
    }
    Ok(full_branching_check(t, &leaf[..m], h)? && growth_holds(&t.f, g, (m + h) as u64, n)?)
}

impl FatnessCert {
    /// Re-check every recorded condition against `t`.
    pub fn verify(&self, t: &PrunedTree, g: &OrderFuncExpr) -> Result<()> {
        let k = self.ns.len();
        if self.heights.len() != k {
            return Err(Error::LengthMismatch(self.heights.len(), k));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("ns not strictly increasing".into()));
        }
        let leaves = t.leaves();
        let certified: BTreeSet<&Node> = self.leaves.iter().map(|l| &l.leaf).collect();
        if let Some(l) = leaves.iter().find(|l| !certified.contains(l)) {
            return Err(Error::NotFat {
                leaf: l.clone(),
                t: 0,
            });
        }
        for lc in &self.leaves {
            if !t.is_leaf(&lc.leaf) || lc.ms.len() != k {
                return Err(Error::NotFat {
                    leaf: lc.leaf.clone(),
                    t: 0,
                });
            }
            for i in 0..k {
                let increasing = i == 0 || lc.ms[i - 1] < lc.ms[i];
                if !increasing || !leaf_ok(t, g, &lc.leaf, lc.ms[i], self.ns[i], self.heights[i])? {
                    return Err(Error::NotFat {
                        leaf: lc.leaf.clone(),
                        t: i + 1,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Search, per leaf, for the least witnesses with the given heights.
pub fn fat_check_heights(
    t: &PrunedTree,
    g: &OrderFuncExpr,
    ns: &[u64],
    heights: &[Option<u64>],
) -> Result<FatnessCert> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("ns not strictly increasing".into()));
    }
    if heights.len() != ns.len() {
        return Err(Error::LengthMismatch(heights.len(), ns.len()));
    }
    let mut leaves = Vec::new();
    for leaf in t.leaves() {
        let mut ms = Vec::with_capacity(ns.len());
        for (i, (&n, &h)) in ns.iter().zip(heights).enumerate() {
            let start = ms.last().map_or(0, |&m: &usize| m + 1);
            let found = match h {
                None => None,
                Some(h) => {
                    let mut hit = None;
                    for m in start..leaf.len() {
                        if leaf_ok(t, g, &leaf, m, n, h)? {
                            hit = Some(m);
                            break;
                        }
                    }
                    hit
                }
            };
            match found {
                Some(m) => ms.push(m),
                None => return Err(Error::NotFat { leaf, t: i + 1 }),
            }
        }
        leaves.push(LeafCert { leaf, ms });
    }
    Ok(FatnessCert {
        ns: ns.to_vec(),
        heights: heights.iter().map(|h| h.unwrap_or(u64::MAX)).collect(),
        leaves,
    })
}

/// Fatness for `ns` with heights `2^(n_t·t)`.
pub fn fat_check(t: &PrunedTree, g: &OrderFuncExpr, ns: &[u64]) -> Result<FatnessCert> {
    let heights: Vec<Option<u64>> = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| strict_height(n, i as u64 + 1))
        .collect();
    fat_check_heights(t, g, ns, &heights)
}

/// Deterministic rules a functional may be generated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// `Φ(ρ, t) = ρ(t)`.
    Bit,
    /// `Φ(ρ, t) = c` everywhere.
    Const {
        #[serde(with = "crate::base::dec")]
        value: Nat,
    },
    /// `Φ(ρ, t) = (ρ(0) + … + ρ(t)) mod 2`.
    PrefixParity,
}

impl Rule {
    pub fn eval(&self, rho: &[u32], t: u64) -> Option<Nat> {
        let t = t as usize;
        match self {
            Rule::Bit => rho.get(t).map(|&x| nat(x as u64)),
            Rule::Const { value } => Some(value.clone()),
            Rule::PrefixParity => {
                (rho.len() > t).then(|| nat(rho[..=t].iter().map(|&x| x as u64).sum::<u64>() % 2))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TableEntry(
    String,
    #[serde(with = "crate::base::dec")] Nat,
    #[serde(with = "crate::base::dec")] Nat,
);

#[derive(Serialize, Deserialize)]
struct TableRepr {
    entries: Vec<TableEntry>,
}

/// `Φ(ρ, t)` is the value at the shortest prefix of `ρ` carrying an entry for `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncTable {
    entries: BTreeMap<(u64, Node), Nat>,
}

impl FuncTable {
    /// Rejects tables whose entries disagree along a prefix chain.
    pub fn new(entries: impl IntoIterator<Item = (Node, u64, Nat)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (s, t, v) in entries {
            if let Some(old) = map.insert((t, s.clone()), v.clone()) {
                if old != v {
                    return Err(Error::FunctionalNotMonotone(format!(
                        "two values at ({}, {t})",
                        node_csv(&s)
                    )));
                }
            }
        }
        for ((t, s), v) in &map {
            for i in 0..s.len() {
                if let Some(w) = map.get(&(*t, s[..i].to_vec())) {
                    if w != v {
                        return Err(Error::FunctionalNotMonotone(format!(
                            "({}, {t}) = {v} but prefix ({}) gives {w}",
                            node_csv(s),
                            node_csv(&s[..i])
                        )));
                    }
                }
            }
        }
        Ok(FuncTable { entries: map })
    }

    /// Minimal entries reproducing `rule` on every node of `t`, for arguments `0..args`.
    pub fn from_rule(rule: &Rule, t: &PrunedTree, args: u64) -> Result<Self> {
        let mut entries = Vec::new();
        for v in t.sorted_nodes() {
            for a in 0..args {
                if let Some(val) = rule.eval(&v, a) {
                    if v.is_empty() || rule.eval(&v[..v.len() - 1], a).is_none() {
                        entries.push((v.clone(), a, val));
                    }
                }
            }
        }
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eval(&self, rho: &[u32], t: u64) -> Option<Nat> {
        (0..=rho.len()).find_map(|i| self.entries.get(&(t, rho[..i].to_vec())).cloned())
    }

    pub fn to_json(&self) -> String {
        let entries = self
            .entries
            .iter()
            .map(|((t, s), v)| TableEntry(node_csv(s), nat(*t), v.clone()))
            .collect();
        serde_json::to_string(&TableRepr { entries }).expect("table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: TableRepr = serde_json::from_str(s).map_err(|e| Error::Invalid(e.to_string()))?;
        let entries = r
            .entries
            .into_iter()
            .map(|TableEntry(s, t, v)| {
                let t = t
                    .to_u64()
                    .ok_or_else(|| Error::Invalid("argument too large".into()))?;
                Ok((parse_csv(&s)?, t, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

/// A deterministic, monotone partial evaluator on strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Functional {
    Table(FuncTable),
    Rule(Rule),
}

impl Functional {
    /// `None` means not yet defined.
    pub fn eval(&self, rho: &[u32], t: u64) -> Option<Nat> {
        match self {
            Functional::Table(tb) => tb.eval(rho, t),
            Functional::Rule(r) => r.eval(rho, t),
        }
    }

    pub fn defined_on(&self, rho: &[u32], args: &[u64]) -> bool {
        args.iter().all(|&t| self.eval(rho, t).is_some())
    }
}

/// Least (length, lex) `τ ⊇ σ` in `t` with every argument defined.
pub fn seek_defined_extension(
    phi: &Functional,
    sigma: &[u32],
    args: &[u64],
    t: &PrunedTree,
    fuel: usize,
) -> Result<Node> {
    if !t.contains(sigma) {
        return Err(Error::NodeAbsent(sigma.to_vec()));
    }
    let mut queue = VecDeque::from([sigma.to_vec()]);
    let mut visited = 0;
    while let Some(v) = queue.pop_front() {
        if visited == fuel {
            return Err(Error::FuelExhausted(visited));
        }
        visited += 1;
        if phi.defined_on(&v, args) {
            return Ok(v);
        }
        queue.extend(t.children(&v));
    }
    Err(Error::FuelExhausted(visited))
}

/// How full-branching heights are assigned to forcing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum HeightPolicy {
    /// Start at `2^(n·(k+1))`, certify `2^(n·k)`.
    Strict,
    /// Certify `base·2^(k−1)` at step `k`; the strict requirement is only reported.
    Desk { base: u64 },
}

/// One application of the partition-thinning step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalvingRecord {
    pub step: usize,
    pub leaf: usize,
    pub t: u64,
    pub case: u8,
    pub before: u64,
    pub after: u64,
}

/// What the strict schedule would need for this step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub n: u64,
    /// `2^(n·(k+1))`, as a power-of-two exponent.
    pub height_exp: u64,
    pub fits: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefeatOutcome {
    pub tree: PrunedTree,
    pub n_next: u64,
    pub start_height: u64,
    pub final_height: u64,
    #[serde(with = "crate::base::dec_vec")]
    pub g_vals: Vec<Nat>,
    pub g_from: u64,
    pub cert: FatnessCert,
    pub ledger: Vec<HalvingRecord>,
    pub requirement: Requirement,
}

fn extensions_at(t: &PrunedTree, sigma: &[u32], len: usize) -> Vec<Node> {
    let mut level = vec![sigma.to_vec()];
    while level.first().is_some_and(|v| v.len() < len) {
        level = level.iter().flat_map(|v| t.children(v)).collect();
    }
    level
}

/// Extend `tk` inside `ambient` so that, for arguments `n_k..n_next`, one bit
/// of `Φ` per leaf is constant, and return the diagonal values `g`.
#[allow(clippy::too_many_arguments)]
pub fn defeat_step(
    ambient: &PrunedTree,
    tk: &PrunedTree,
    cert: &FatnessCert,
    phi: &Functional,
    g: &OrderFuncExpr,
    n_k: u64,
    fuel: usize,
    policy: HeightPolicy,
) -> Result<DefeatOutcome> {
    if !tk.is_subtree_of(ambient) {
        return Err(Error::Invalid("tree is not inside the ambient tree".into()));
    }
    let k = cert.ns.len() as u64 + 1;
    let leaves = tk.leaves();
    let c = leaves.len();
    if !g.exceeds_pow2(n_k, &nat(c as u64))? {
        return Err(Error::InductionViolated { leaves: c, n: n_k });
    }
    let top = leaves.iter().map(|l| l.len()).max().unwrap_or(0);
    let room = ambient.depth.saturating_sub(top) as u64;
    let mut n = n_k + 1;
    let (start, requirement) = loop {
        let w = n - n_k;
        let strict_exp = n.saturating_mul(k + 1);
        let strict = strict_height(n, k + 1);
        let fits = strict.is_some_and(|e| e <= room);
        let requirement = Requirement {
            n,
            height_exp: strict_exp,
            fits,
        };
        let start = match policy {
            HeightPolicy::Strict => strict,
            HeightPolicy::Desk { base } => {
                let h = base
                    .checked_shl((k - 1) as u32)
                    .filter(|&h| h > 0 && k <= 32);
                h.and_then(|h| h.checked_mul(1u64.checked_shl(w as u32)?))
            }
        };
        let start = match start {
            Some(e) if e <= room => e,
            other => {
                return Err(Error::DepthExhausted {
                    required: match other {
                        Some(e) => (top as u64 + e).to_string(),
                        None => format!("{top} + 2^{strict_exp}"),
                    },
                    available: ambient.depth,
                });
            }
        };
        if growth_holds(&ambient.f, g, top as u64 + start, n)? {
            break (start, requirement);
        }
        n += 1;
    };
    let args: Vec<u64> = (n_k..n).collect();
    let final_height = start >> args.len();
    let mut ledger = Vec::new();
    let mut union: Option<PrunedTree> = None;
    let mut forced: Vec<Vec<bool>> = vec![Vec::with_capacity(c); args.len()];
    let mut new_leaves = Vec::new();
    for (a, sigma) in leaves.iter().enumerate() {
        let mut tops = Vec::new();
        for nu in extensions_at(ambient, sigma, sigma.len() + start as usize) {
            tops.push(seek_defined_extension(phi, &nu, &args, ambient, fuel)?);
        }
        let mut tree = ambient.with_nodes(BTreeSet::new());
        tree = tree.union(&PrunedTree::from_nodes(
            ambient.f.clone(),
            ambient.depth,
            tops,
        )?);
        let mut anchor = sigma.clone();
        let mut height = start;
        for (i, &t) in args.iter().enumerate() {
            let (mut c1, mut c2) = (BTreeSet::new(), BTreeSet::new());
            for rho in tree.leaves_above(&anchor) {
                let v = phi.eval(&rho, t).expect("defined by construction");
                if v.bit(a as u64) {
                    c2.insert(rho);
                } else {
                    c1.insert(rho);
                }
            }
            let res = thin_partition(&tree, &anchor, (height / 2) as usize, &c1, &c2)?;
            ledger.push(HalvingRecord {
                step: k as usize,
                leaf: a,
                t,
                case: res.case,
                before: height,
                after: res.height as u64,
            });
            forced[i].push(res.case == 2);
            tree = res.tree;
            anchor = res.tau;
            height = res.height as u64;
        }
        let old = cert.leaves.iter().find(|l| &l.leaf == sigma);
        let old_ms = match old {
            Some(l) => l.ms.clone(),
            None if cert.ns.is_empty() => vec![],
            None => {
                return Err(Error::NotFat {
                    leaf: sigma.clone(),
                    t: 0,
                })
            }
        };
        for rho in tree.leaves_above(sigma) {
            let mut ms = old_ms.clone();
            ms.push(anchor.len());
            new_leaves.push(LeafCert { leaf: rho, ms });
        }
        union = Some(match union {
            None => tree,
            Some(u) => u.union(&tree),
        });
    }
    let tree = union.unwrap_or_else(|| tk.clone()).union(tk);
    let mut g_vals = Vec::with_capacity(args.len());
    for (i, &t) in args.iter().enumerate() {
        let mut v = Nat::zero();
        for (a, &bit) in forced[i].iter().enumerate() {
            if !bit {
                v.set_bit(a as u64, true);
            }
        }
        if !g.value_gt(t, &v)? {
            return Err(Error::BoundViolation {
                n: t as usize,
                detail: format!("g({t}) = {v} is not below G({t})"),
            });
        }
        g_vals.push(v);
    }
    new_leaves.sort_by(|a, b| a.leaf.cmp(&b.leaf));
    let certified = match policy {
        HeightPolicy::Strict => strict_height(n, k).expect("smaller than the start height"),
        HeightPolicy::Desk { .. } => final_height,
    };
    let mut ns = cert.ns.clone();
    ns.push(n);
    let mut heights = cert.heights.clone();
    heights.push(certified);
    let cert = FatnessCert {
        ns,
        heights,
        leaves: new_leaves,
    };
    cert.verify(&tree, g)?;
    Ok(DefeatOutcome {
        tree,
        n_next: n,
        start_height: start,
        final_height,
        g_vals,
        g_from: n_k,
        cert,
        ledger,
        requirement,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcingRun {
    pub tree: PrunedTree,
    #[serde(with = "crate::base::dec_vec")]
    pub g: Vec<Nat>,
    pub cert: FatnessCert,
    pub ledger: Vec<HalvingRecord>,
    pub steps: Vec<StepSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSummary {
    pub n: u64,
    pub args: u64,
    pub start_height: u64,
    pub final_height: u64,
    pub leaves: usize,
    pub requirement: Requirement,
}

/// Iterate `defeat_step` from the root inside the complete tree of `depth`.
#[allow(clippy::too_many_arguments)]
pub fn run_forcing(
    f: &OrderFuncExpr,
    g: &OrderFuncExpr,
    phi: &Functional,
    steps: usize,
    depth: usize,
    fuel: usize,
    policy: HeightPolicy,
) -> Result<ForcingRun> {
    let ambient = PrunedTree::complete(f.clone(), depth)?;
    if steps == 0 {
        let cert = fat_check(&ambient, g, &[])?;
        return Ok(ForcingRun {
            tree: ambient,
            g: vec![],
            cert,
            ledger: vec![],
            steps: vec![],
        });
    }
    let mut tree = PrunedTree::from_nodes(f.clone(), depth, [vec![]])?;
    let mut cert = FatnessCert::default();
    let mut n_k = 0;
    let mut gv = Vec::new();
    let mut ledger = Vec::new();
    let mut summaries = Vec::new();
    for _ in 0..steps {
        let out = defeat_step(&ambient, &tree, &cert, phi, g, n_k, fuel, policy)?;
        summaries.push(StepSummary {
            n: out.n_next,
            args: out.n_next - n_k,
            start_height: out.start_height,
            final_height: out.final_height,
            leaves: out.tree.leaves().len(),
            requirement: out.requirement.clone(),
        });
        gv.extend(out.g_vals);
        ledger.extend(out.ledger);
        tree = out.tree;
        cert = out.cert;
        n_k = out.n_next;
    }
    Ok(ForcingRun {
        tree,
        g: gv,
        cert,
        ledger,
        steps: summaries,
    })
}

/// Every failure of the run's guarantees, as readable lines.
pub fn audit_run(run: &ForcingRun, phi: &Functional, g: &OrderFuncExpr) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for rho in run.tree.leaves() {
        for (t, gt) in run.g.iter().enumerate() {
            if phi.eval(&rho, t as u64).as_ref() == Some(gt) {
                bad.push(format!("Φ({}, {t}) = g({t})", node_csv(&rho)));
            }
        }
    }
    for (t, gt) in run.g.iter().enumerate() {
        if !g.value_gt(t as u64, gt)? {
            bad.push(format!("g({t}) = {gt} is not below G({t})"));
        }
    }
    if let Err(e) = run.cert.verify(&run.tree, g) {
        bad.push(format!("certificate: {e}"));
    }
    for r in &run.ledger {
        if r.before != 2 * r.after {
            bad.push(format!(
                "step {} leaf {} t={}: {} -> {}",
                r.step, r.leaf, r.t, r.before, r.after
            ));
        }
    }
    for (i, s) in run.steps.iter().enumerate() {
        let recs: Vec<_> = run.ledger.iter().filter(|r| r.step == i + 1).collect();
        let per_leaf = s.args as usize;
        if per_leaf > 0 && recs.len() % per_leaf != 0 {
            bad.push(format!(
                "step {}: {} records for {} arguments",
                i + 1,
                recs.len(),
                per_leaf
            ));
        }
        if s.final_height != s.start_height >> s.args {
            bad.push(format!(
                "step {}: final height {} != {} / 2^{}",
                i + 1,
                s.final_height,
                s.start_height,
                s.args
            ));
        }
    }
    Ok(bad)
}

/// Restrict `t` to the nodes comparable with `τ⌢f(|τ|)` for the first node
/// `τ` with all children present.
pub fn hit_function(t: &PrunedTree, f: &[Nat]) -> Result<PrunedTree> {
    let tau = t
        .sorted_nodes()
        .into_iter()
        .find(|v| {
            v.len() < t.depth
                && v.len() < f.len()
                && t.children(v).len() == t.branching[v.len()] as usize
        })
        .ok_or(Error::NoFullBranchingNode)?;
    let m = tau.len();
    let b = t.branching[m];
    let x = f[m]
        .to_u32()
        .filter(|&x| x < b)
        .ok_or_else(|| Error::BoundViolation {
            n: m,
            detail: format!("f({m}) = {} >= F({m}) = {b}", f[m]),
        })?;
    let mut next = tau;
    next.push(x);
    Ok(t.restrict_compatible(&BTreeSet::from([next])))
}
