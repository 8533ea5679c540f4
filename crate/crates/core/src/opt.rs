//! Exact offline optima: Steiner trees by subset dynamic programming,
//! Steiner forests by enumerating partitions of the pairs, and queries on
//! how much of a solution lies inside a ball.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::graph::{distances_from, EdgeId, VertexId, WeightedGraph};
use crate::instance::{Instance, MateMap, Side};
use crate::scalar::{format_scalar, sum, Scalar};

/// Size limits for the exponential oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_pairs: usize,
    pub max_terminals: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_pairs: 8, max_terminals: 12 }
    }
}

pub const CAP_PAIRS_ENV: &str = "STEINER_CAP_PAIRS";

impl OracleCaps {
    /// Defaults, with `max_pairs` taken from `STEINER_CAP_PAIRS` when set.
    pub fn from_env() -> Result<Self> {
        let mut caps = OracleCaps::default();
        if let Ok(v) = std::env::var(CAP_PAIRS_ENV) {
            caps.max_pairs = v
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("{CAP_PAIRS_ENV}={v:?} is not a count")))?;
        }
        Ok(caps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteinerSolution<W> {
    /// Edge ids of the input graph, increasing.
    pub edges: Vec<EdgeId>,
    pub weight: W,
    /// Terminal sets of the solution's components.
    pub components: Vec<Vec<VertexId>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    weight: String,
    edges: Vec<(VertexId, VertexId)>,
}

impl<W: Scalar> SteinerSolution<W> {
    pub fn empty() -> Self {
        SteinerSolution { edges: Vec::new(), weight: W::zero(), components: Vec::new() }
    }

    pub fn to_json(&self, g: &WeightedGraph<W>) -> String {
        let f = SolutionFile {
            weight: format_scalar(&self.weight),
            edges: self.edges.iter().map(|&i| (g.edge(i).u, g.edge(i).v)).collect(),
        };
        serde_json::to_string(&f).expect("solution serializes")
    }
}

/// Weights scaled to integers by the common denominator.
struct Scaled {
    w: Vec<BigInt>,
}

impl Scaled {
    fn new<W: Scalar>(g: &WeightedGraph<W>) -> Self {
        let rs: Vec<BigRational> = g.edges().iter().map(|e| e.w.to_rational()).collect();
        let den = rs.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let w = rs.iter().map(|r| r.numer() * (&den / r.denom())).collect();
        Scaled { w }
    }
}

#[derive(Clone, Copy)]
enum Back {
    Leaf,
    Merge(usize),
    Step(VertexId, EdgeId),
}

/// Dreyfus–Wagner table over every subset of `terms`.
struct SubsetTable {
    terms: Vec<VertexId>,
    cost: Vec<Vec<Option<BigInt>>>,
    back: Vec<Vec<Back>>,
}

impl SubsetTable {
    fn build<W: Scalar>(g: &WeightedGraph<W>, terms: Vec<VertexId>) -> Self {
        let n = g.vertex_count();
        let t = terms.len();
        let full = 1usize << t;
        let sw = Scaled::new(g);
        let mut cost: Vec<Vec<Option<BigInt>>> = vec![Vec::new(); full];
        let mut back: Vec<Vec<Back>> = vec![Vec::new(); full];
        for mask in 1..full {
            let mut c: Vec<Option<BigInt>> = vec![None; n];
            let mut b = vec![Back::Leaf; n];
            if mask.is_power_of_two() {
                c[terms[mask.trailing_zeros() as usize]] = Some(BigInt::zero());
            } else {
                let low = mask & mask.wrapping_neg();
                let rest = mask ^ low;
                // submasks containing the lowest bit, proper
                let mut s = rest;
                loop {
                    let sub = s | low;
                    if sub != mask {
                        let other = mask ^ sub;
                        for v in 0..n {
                            if let (Some(a), Some(bb)) = (&cost[sub][v], &cost[other][v]) {
                                let cand = a + bb;
                                if c[v].as_ref().is_none_or(|x| cand < *x) {
                                    c[v] = Some(cand);
                                    b[v] = Back::Merge(sub);
                                }
                            }
                        }
                    }
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & rest;
                }
            }
            // relax along edges
            let mut heap: BinaryHeap<Reverse<(BigInt, VertexId)>> =
                (0..n).filter_map(|v| c[v].clone().map(|d| Reverse((d, v)))).collect();
            let mut done = vec![false; n];
            while let Some(Reverse((d, u))) = heap.pop() {
                if done[u] || c[u].as_ref() != Some(&d) {
                    continue;
                }
                done[u] = true;
                for &(x, id) in g.neighbors(u) {
                    let cand = &d + &sw.w[id];
                    if !done[x] && c[x].as_ref().is_none_or(|y| cand < *y) {
                        c[x] = Some(cand.clone());
                        b[x] = Back::Step(u, id);
                        heap.push(Reverse((cand, x)));
                    }
                }
            }
            cost[mask] = c;
            back[mask] = b;
        }
        SubsetTable { terms, cost, back }
    }

    /// Cheapest tree for `mask` and its root.
    fn best(&self, mask: usize) -> Option<(BigInt, VertexId)> {
        if mask.count_ones() <= 1 {
            let v = if mask == 0 { 0 } else { self.terms[mask.trailing_zeros() as usize] };
            return Some((BigInt::zero(), v));
        }
        let mut best: Option<(BigInt, VertexId)> = None;
        for (v, c) in self.cost[mask].iter().enumerate() {
            if let Some(c) = c {
                if best.as_ref().is_none_or(|(b, _)| c < b) {
                    best = Some((c.clone(), v));
                }
            }
        }
        best
    }

    fn collect(&self, mask: usize, v: VertexId, out: &mut BTreeSet<EdgeId>) {
        let mut stack = vec![(mask, v)];
        while let Some((m, v)) = stack.pop() {
            match self.back[m][v] {
                Back::Leaf => {}
                Back::Merge(sub) => {
                    stack.push((sub, v));
                    stack.push((m ^ sub, v));
                }
                Back::Step(u, id) => {
                    out.insert(id);
                    stack.push((m, u));
                }
            }
        }
    }

    fn tree_edges(&self, mask: usize) -> Option<BTreeSet<EdgeId>> {
        let (_, root) = self.best(mask)?;
        let mut out = BTreeSet::new();
        if mask.count_ones() > 1 {
            self.collect(mask, root, &mut out);
        }
        Some(out)
    }
}

/// Drop cycle edges (heaviest first is irrelevant: only zero-weight cycles
/// can occur in an optimal union) and prune non-terminal leaves.
fn clean_forest<W: Scalar>(g: &WeightedGraph<W>, edges: BTreeSet<EdgeId>, terminals: &BTreeSet<VertexId>) -> Vec<EdgeId> {
    let mut uf = UnionFind::new(g.vertex_count());
    let mut kept: Vec<EdgeId> = edges
        .into_iter()
        .filter(|&id| uf.union(g.edge(id).u, g.edge(id).v))
        .collect();
    loop {
        let mut deg = vec![0usize; g.vertex_count()];
        for &id in &kept {
            deg[g.edge(id).u] += 1;
            deg[g.edge(id).v] += 1;
        }
        let before = kept.len();
        kept.retain(|&id| {
            let e = g.edge(id);
            let leaf = |v: VertexId| deg[v] == 1 && !terminals.contains(&v);
            !(leaf(e.u) || leaf(e.v))
        });
        if kept.len() == before {
            break;
        }
    }
    kept.sort();
    kept
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = x;
        while self.parent[x] != r {
            let next = self.parent[x];
            self.parent[x] = r;
            x = next;
        }
        r
    }

    /// Returns false when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn component_terminals<W: Scalar>(g: &WeightedGraph<W>, edges: &[EdgeId], terminals: &BTreeSet<VertexId>) -> Vec<Vec<VertexId>> {
    let mut uf = UnionFind::new(g.vertex_count());
    for &id in edges {
        uf.union(g.edge(id).u, g.edge(id).v);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<VertexId>> = Default::default();
    for &v in terminals {
        groups.entry(uf.find(v)).or_default().push(v);
    }
    groups.into_values().collect()
}

fn dedup_terminals(terms: &[VertexId]) -> Vec<VertexId> {
    let mut out = Vec::new();
    for &v in terms {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Minimum-weight connected subgraph spanning `terminals`.
pub fn steiner_tree_exact<W: Scalar>(g: &WeightedGraph<W>, terminals: &[VertexId], caps: OracleCaps) -> Result<SteinerSolution<W>> {
    for &v in terminals {
        g.check_vertex(v)?;
    }
    let terms = dedup_terminals(terminals);
    if terms.len() > caps.max_terminals {
        return Err(Error::CapExceeded { what: "terminal count", actual: terms.len(), cap: caps.max_terminals });
    }
    if terms.len() <= 1 {
        return Ok(SteinerSolution { edges: Vec::new(), weight: W::zero(), components: vec![terms] });
    }
    let table = SubsetTable::build(g, terms.clone());
    let full = (1usize << terms.len()) - 1;
    let edges = table
        .tree_edges(full)
        .ok_or_else(|| Error::Disconnected(format!("terminals {terms:?}")))?;
    let tset: BTreeSet<VertexId> = terms.iter().copied().collect();
    let edges = clean_forest(g, edges, &tset);
    Ok(SteinerSolution {
        weight: g.weight_of(&edges),
        components: component_terminals(g, &edges, &tset),
        edges,
    })
}

/// Restricted growth strings of length `n`: every set partition of `0..n`
/// exactly once, as block labels.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut a = vec![0usize; n];
    loop {
        out.push(a.clone());
        // advance to the next restricted growth string
        let mut i = n - 1;
        loop {
            let max_prefix = a[..i].iter().copied().max().unwrap_or(0);
            if i > 0 && a[i] <= max_prefix {
                a[i] += 1;
                for x in a.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                break;
            }
            if i == 0 {
                return out;
            }
            i -= 1;
        }
    }
}

/// Exact Steiner forest over the instance graph (schedule edges are never
/// used). Enumerates all partitions of the pairs into blocks and takes the
/// cheapest union of per-block Steiner trees.
pub fn steiner_forest_exact<W: Scalar>(inst: &Instance<W>, caps: OracleCaps) -> Result<SteinerSolution<W>> {
    let k = inst.pairs.len();
    if k > caps.max_pairs {
        return Err(Error::CapExceeded { what: "pair count", actual: k, cap: caps.max_pairs });
    }
    if k == 0 {
        return Ok(SteinerSolution::empty());
    }
    let g = &inst.graph;
    for (i, p) in inst.pairs.iter().enumerate() {
        g.check_vertex(p.s)?;
        g.check_vertex(p.t)?;
        if distances_from(g, p.s)[p.t].is_none() {
            return Err(Error::Unreachable { pair: i });
        }
    }
    let terms = inst.terminals();
    if terms.len() > caps.max_terminals {
        return Err(Error::CapExceeded { what: "terminal count", actual: terms.len(), cap: caps.max_terminals });
    }
    let bit = |v: VertexId| 1usize << terms.iter().position(|&x| x == v).unwrap();
    let pair_mask: Vec<usize> = inst.pairs.iter().map(|p| bit(p.s) | bit(p.t)).collect();
    let table = SubsetTable::build(g, terms.clone());
    let mut block_cost: std::collections::HashMap<usize, Option<BigInt>> = Default::default();
    let mut best: Option<(BigInt, Vec<usize>)> = None;
    for labels in set_partitions(k) {
        let blocks = labels.iter().max().unwrap() + 1;
        let mut masks = vec![0usize; blocks];
        for (i, &l) in labels.iter().enumerate() {
            masks[l] |= pair_mask[i];
        }
        // blocks sharing terminals are covered by a coarser partition
        let mut union = 0usize;
        let mut overlap = false;
        for &m in &masks {
            overlap |= union & m != 0;
            union |= m;
        }
        if overlap {
            continue;
        }
        let mut total = BigInt::zero();
        let mut feasible = true;
        for &m in &masks {
            let c = block_cost.entry(m).or_insert_with(|| table.best(m).map(|(c, _)| c));
            match c {
                Some(c) => total += &*c,
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible && best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, masks));
        }
    }
    let (_, masks) = best.ok_or_else(|| Error::Disconnected("no feasible forest".into()))?;
    let mut edges = BTreeSet::new();
    for m in masks {
        edges.extend(table.tree_edges(m).expect("feasible block"));
    }
    let tset: BTreeSet<VertexId> = terms.into_iter().collect();
    let edges = clean_forest(g, edges, &tset);
    Ok(SteinerSolution {
        weight: g.weight_of(&edges),
        components: component_terminals(g, &edges, &tset),
        edges,
    })
}

/// Optimum restricted to a single tree over all terminals.
pub fn tree_optimum<W: Scalar>(inst: &Instance<W>, caps: OracleCaps) -> Result<SteinerSolution<W>> {
    steiner_tree_exact(&inst.graph, &inst.terminals(), caps)
}

/// Weight of solution edges lying in the closed ball of radius `r` around
/// `center`: both endpoints at distance `≤ r`, excluding edges whose two
/// endpoints both sit exactly on the sphere (their interior is outside).
/// Requires that no solution edge jumps over the sphere.
pub fn opt_weight_in_ball<W: Scalar>(edges: &[EdgeId], g: &WeightedGraph<W>, center: VertexId, r: &W) -> Result<W> {
    g.check_vertex(center)?;
    let d = distances_from(g, center);
    let mut total = W::zero();
    for &id in edges {
        let e = g.edge(id);
        let (du, dv) = (&d[e.u], &d[e.v]);
        let lt = |x: &Option<W>| x.as_ref().is_some_and(|x| x < r);
        let gt = |x: &Option<W>| x.as_ref().is_none_or(|x| x > r);
        let eq = |x: &Option<W>| x.as_ref() == Some(r);
        if (lt(du) && gt(dv)) || (lt(dv) && gt(du)) {
            return precondition(format!("solution edge {id} ({}, {}) crosses the ball border", e.u, e.v));
        }
        if !gt(du) && !gt(dv) && !(eq(du) && eq(dv)) {
            total = total + e.w.clone();
        }
    }
    Ok(total)
}

/// Exact length of the part of each edge lying strictly inside the open ball
/// of radius `r` around `center`, summed. Needs no subdivision; on a graph
/// split at the sphere it agrees with [`opt_weight_in_ball`].
pub fn opt_measure_in_ball<W: Scalar>(edges: &[EdgeId], g: &WeightedGraph<W>, center: VertexId, r: &W) -> Result<W> {
    g.check_vertex(center)?;
    let d = distances_from(g, center);
    let mut parts = Vec::with_capacity(edges.len());
    for &id in edges {
        let e = g.edge(id);
        let reach = |x: &Option<W>| -> W {
            match x {
                Some(x) if x < r => {
                    let a = r.clone() - x.clone();
                    if a < e.w {
                        a
                    } else {
                        e.w.clone()
                    }
                }
                _ => W::zero(),
            }
        };
        let both = reach(&d[e.u]) + reach(&d[e.v]);
        parts.push(if both < e.w { both } else { e.w.clone() });
    }
    Ok(sum(&parts))
}

/// A dual ball owned by one endpoint of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBall<W> {
    pub center: VertexId,
    pub radius: W,
    pub pair: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualAudit<W> {
    /// Every pair of balls satisfies `d(c₁, c₂) ≥ r₁ + r₂`.
    pub disjoint: bool,
    /// Every ball has `r < d(center, mate)`.
    pub radius_below_mate: bool,
    /// Every center is an endpoint of its owning pair.
    pub centered_at_terminal: bool,
    pub sum_radii: W,
    /// `Some(Σ r ≤ OPT)` when all premises hold, `None` when vacuous.
    pub bound_holds: Option<bool>,
    pub offending: Vec<String>,
}

impl<W> DualAudit<W> {
    pub fn premises_hold(&self) -> bool {
        self.disjoint && self.radius_below_mate && self.centered_at_terminal
    }
}

/// Checks the premises of the disjoint-ball lower bound and the bound itself.
pub fn dual_lower_bound_audit<W: Scalar>(balls: &[DualBall<W>], inst: &Instance<W>, opt_weight: &W) -> DualAudit<W> {
    let g = &inst.graph;
    let mates = MateMap::new(inst);
    let mut offending = Vec::new();
    let mut centered = true;
    let mut below = true;
    let mut dist: Vec<Vec<Option<W>>> = Vec::with_capacity(balls.len());
    for (i, b) in balls.iter().enumerate() {
        let d = if b.center < g.vertex_count() { distances_from(g, b.center) } else { vec![None; g.vertex_count()] };
        let side = match inst.pairs.get(b.pair) {
            Some(p) if p.s == b.center => Some(Side::S),
            Some(p) if p.t == b.center => Some(Side::T),
            _ => None,
        };
        match side.and_then(|s| mates.mate_vertex((b.pair, s))) {
            None => {
                centered = false;
                offending.push(format!("ball {i}: center {} is not an endpoint of pair {}", b.center, b.pair));
            }
            Some(m) => {
                if !d[m].as_ref().is_some_and(|dm| b.radius < *dm) && d[m].is_some() {
                    below = false;
                    offending.push(format!("ball {i}: radius not below mate distance"));
                }
            }
        }
        dist.push(d);
    }
    let mut disjoint = true;
    for i in 0..balls.len() {
        for j in i + 1..balls.len() {
            let need = balls[i].radius.clone() + balls[j].radius.clone();
            let ok = match dist[i].get(balls[j].center).cloned().flatten() {
                None => true,
                Some(d) => d >= need,
            };
            if !ok {
                disjoint = false;
                offending.push(format!("balls {i} and {j} overlap"));
            }
        }
    }
    let sum_radii = sum(balls.iter().map(|b| &b.radius));
    let premises = disjoint && below && centered;
    DualAudit {
        disjoint,
        radius_below_mate: below,
        centered_at_terminal: centered,
        bound_holds: premises.then(|| sum_radii <= *opt_weight),
        sum_radii,
        offending,
    }
}
