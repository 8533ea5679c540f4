//! Instance transformations: canonicity check and canonicalization, Rule 3
//! pair subdivision, ball sub-instances, and the width/potential machinery
//! with the solution augmentation that goes with the subdivision.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::balanced::min_delta;
use crate::error::{precondition, Error, Result};
use crate::graph::{distances_from, induced_zero_border, shortest_path, split_at_sphere, Edge, EdgeId, VertexId, WeightedGraph};
use crate::greedy::{metric_at, ContractionRule, Hop, RunTrace};
use crate::instance::{Instance, MateMap, TerminalPair};
use crate::opt::{SteinerSolution, UnionFind};
use crate::scalar::{floor_log2, format_fraction, pow2, Extended, Scalar};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CanonicalReport {
    /// Every cost is `m / 2^{j(δ+10)}` for the largest cost `m` and some `j ≥ 0`.
    pub well_separated: bool,
    /// Every contraction is at most `alpha`.
    pub low_contraction: bool,
    /// Each pair's schedule holds exactly one edge joining its endpoints, of
    /// weight equal to its cost.
    pub schedule_exact: bool,
    pub witnesses: Vec<String>,
}

impl CanonicalReport {
    pub fn clauses(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("a_well_separated", self.well_separated),
            ("b_low_contraction", self.low_contraction),
            ("c_schedule_exact", self.schedule_exact),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.well_separated && self.low_contraction && self.schedule_exact
    }
}

pub fn is_canonical<W: Scalar>(inst: &Instance<W>, trace: &RunTrace<W>, alpha: &W, delta: u64) -> CanonicalReport {
    let mut rep = CanonicalReport { well_separated: true, low_contraction: true, schedule_exact: true, witnesses: Vec::new() };
    let step = delta as i64 + 10;
    let costs: Vec<BigRational> = trace.steps.iter().map(|s| s.cost.to_rational()).collect();
    if let Some(m) = costs.iter().max() {
        for (i, c) in costs.iter().enumerate() {
            let ok = !c.is_zero() && {
                let ratio = m / c;
                let e = floor_log2(&ratio);
                pow2(e) == ratio && e % step == 0
            };
            if !ok {
                rep.well_separated = false;
                rep.witnesses.push(format!("pair {i}: cost {} is off the 2^(δ+10) grid", format_fraction(c)));
            }
        }
    }
    let bound = Extended::Finite(alpha.clone());
    for (i, s) in trace.steps.iter().enumerate() {
        let ok = match &s.contraction {
            Extended::Infinite => false,
            Extended::Finite(x) => x <= alpha,
        };
        if !ok {
            rep.low_contraction = false;
            rep.witnesses.push(format!("pair {i}: contraction {} above {}", s.contraction.to_text(), bound.to_text()));
        }
    }
    for (i, p) in inst.pairs.iter().enumerate() {
        let joining: Vec<&Edge<W>> = inst.schedule[i]
            .iter()
            .filter(|e| (e.u == p.s && e.v == p.t) || (e.u == p.t && e.v == p.s))
            .collect();
        let ok = joining.len() == 1 && trace.steps.get(i).is_some_and(|s| joining[0].w == s.cost);
        if !ok {
            rep.schedule_exact = false;
            rep.witnesses.push(format!("pair {i}: schedule has {} edges joining its endpoints", joining.len()));
        }
    }
    rep
}

/// Record of one transformation. Costs are exact rationals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransformReceipt {
    pub kind: String,
    pub source_digest: String,
    pub target_digest: String,
    /// For each target pair, the source pair it came from.
    pub parent: Vec<usize>,
    /// Source-side cost of each target pair's parent.
    pub source_costs: Vec<BigRational>,
    /// Cost greedy is expected to pay for each target pair.
    pub target_costs: Vec<BigRational>,
    /// Named measured quantities.
    pub metrics: BTreeMap<String, BigRational>,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct ReceiptFile<'a> {
    kind: &'a str,
    source_digest: &'a str,
    target_digest: &'a str,
    parent: &'a [usize],
    source_costs: Vec<String>,
    target_costs: Vec<String>,
    metrics: BTreeMap<&'a str, String>,
    notes: &'a [String],
}

impl TransformReceipt {
    pub fn metric(&self, name: &str) -> Option<&BigRational> {
        self.metrics.get(name)
    }

    /// Sum of target costs per source pair, in source order.
    pub fn parent_sums(&self, source_pairs: usize) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); source_pairs];
        for (c, &p) in self.target_costs.iter().zip(&self.parent) {
            out[p] += c;
        }
        out
    }

    pub fn to_json(&self) -> String {
        let f = ReceiptFile {
            kind: &self.kind,
            source_digest: &self.source_digest,
            target_digest: &self.target_digest,
            parent: &self.parent,
            source_costs: self.source_costs.iter().map(format_fraction).collect(),
            target_costs: self.target_costs.iter().map(format_fraction).collect(),
            metrics: self.metrics.iter().map(|(k, v)| (k.as_str(), format_fraction(v))).collect(),
            notes: &self.notes,
        };
        serde_json::to_string(&f).expect("receipt serializes")
    }
}

fn rat(n: u64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Keeps the pairs of contraction below `alpha`, rounds their costs down to
/// powers of two, keeps the residue class (mod `δ+10`) of class indices with
/// the largest rounded cost, and pre-announces each kept pair with a single
/// schedule edge of its rounded cost.
pub fn to_canonical<W: Scalar>(
    inst: &Instance<W>,
    trace: &RunTrace<W>,
    alpha: &W,
    delta: u64,
) -> Result<(Instance<W>, TransformReceipt)> {
    let need = min_delta(alpha, inst.pairs.len() as u64);
    if delta < need {
        return precondition(format!("delta = {delta} is below 100(lg⁺α + lg⁺lg⁺k) = {need}"));
    }
    canonicalize_mod(inst, trace, alpha, delta + 10)
}

/// [`to_canonical`] with an explicit number of residue groups and no bound on it.
pub fn canonicalize_mod<W: Scalar>(
    inst: &Instance<W>,
    trace: &RunTrace<W>,
    alpha: &W,
    groups: u64,
) -> Result<(Instance<W>, TransformReceipt)> {
    if groups == 0 {
        return Err(Error::Input("need at least one residue group".into()));
    }
    if trace.steps.len() != inst.pairs.len() {
        return Err(Error::Input("trace does not match the instance".into()));
    }
    let bound = Extended::Finite(alpha.clone());
    let low: Vec<usize> = (0..inst.pairs.len()).filter(|&i| trace.steps[i].contraction.lt(&bound)).collect();
    if low.is_empty() {
        return Err(Error::Input("nothing to canonicalize: no pair has contraction below alpha".into()));
    }
    let exps: Vec<i64> = low.iter().map(|&i| floor_log2(&trace.cost(i).to_rational())).collect();
    let top = *exps.iter().max().expect("nonempty");
    let mut group_cost: BTreeMap<u64, BigRational> = BTreeMap::new();
    let mut low_cost = BigRational::zero();
    let mut rounded_total = BigRational::zero();
    for (&i, &e) in low.iter().zip(&exps) {
        let r = ((top - e) as u64) % groups;
        *group_cost.entry(r).or_insert_with(BigRational::zero) += pow2(e);
        rounded_total += pow2(e);
        low_cost += trace.cost(i).to_rational();
    }
    let (&residue, kept_cost) = group_cost
        .iter()
        .fold(None::<(&u64, &BigRational)>, |best, (r, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((r, c)),
        })
        .expect("nonempty");
    let kept_cost = kept_cost.clone();
    let mut pairs = Vec::new();
    let mut schedule = Vec::new();
    let mut receipt = TransformReceipt { kind: "canonical".into(), source_digest: inst.digest(), ..Default::default() };
    for (&i, &e) in low.iter().zip(&exps) {
        if ((top - e) as u64) % groups != residue {
            continue;
        }
        let p = inst.pairs[i];
        pairs.push(p);
        schedule.push(vec![Edge::new(p.s, p.t, W::from_rational(&pow2(e)))]);
        receipt.parent.push(i);
        receipt.source_costs.push(trace.cost(i).to_rational());
        receipt.target_costs.push(pow2(e));
    }
    let out = Instance { graph: inst.graph.clone(), pairs, schedule };
    receipt.target_digest = out.digest();
    let m = &mut receipt.metrics;
    m.insert("groups".into(), rat(groups));
    m.insert("residue".into(), rat(residue));
    m.insert("low_contraction_cost".into(), low_cost.clone());
    m.insert("rounded_cost".into(), rounded_total.clone());
    m.insert("kept_cost".into(), kept_cost.clone());
    m.insert("ratio".into(), &kept_cost / &low_cost);
    m.insert("kept_share".into(), &kept_cost / &rounded_total);
    m.insert("alpha_out".into(), alpha.to_rational() * rat(2));
    m.insert("k_out".into(), rat(out.pairs.len() as u64));
    receipt.notes.push("costs rounded down to powers of two; contraction may double".into());
    Ok((out, receipt))
}

/// Replaces each pair, in order, by the segments of its bought path between
/// consecutive terminals (earlier terminals plus its own endpoints) whose
/// distance was still nonzero when it arrived. Schedule edges of a pair move
/// to its first emitted sub-pair, or to the next emitted one if it has none.
pub fn subdivide_pairs_rule3<W: Scalar>(inst: &Instance<W>, trace: &RunTrace<W>) -> Result<(Instance<W>, TransformReceipt)> {
    if trace.rule != ContractionRule::Rule3 {
        return Err(Error::Input(format!("trace was computed under {}, not rule3", trace.rule)));
    }
    if trace.steps.len() != inst.pairs.len() {
        return Err(Error::Input("trace does not match the instance".into()));
    }
    let mut prev = std::collections::BTreeSet::new();
    let mut pairs = Vec::new();
    let mut schedule: Vec<Vec<Edge<W>>> = Vec::new();
    let mut pending: Vec<Edge<W>> = Vec::new();
    let mut receipt = TransformReceipt { kind: "rule3_subdivision".into(), source_digest: inst.digest(), ..Default::default() };
    for (i, p) in inst.pairs.iter().enumerate() {
        pending.extend(inst.schedule[i].iter().cloned());
        let path = &trace.steps[i].path;
        if path.first() != Some(&p.s) || path.last() != Some(&p.t) {
            return Err(Error::Input(format!("path of pair {i} does not join its endpoints")));
        }
        let last = path.len() - 1;
        let stops: Vec<VertexId> = path
            .iter()
            .enumerate()
            .filter(|&(k, v)| k == 0 || k == last || prev.contains(v))
            .map(|(_, &v)| v)
            .collect();
        let metric = metric_at(inst, trace, i)?;
        for w in stops.windows(2) {
            let d = distances_from(&metric, w[0])[w[1]].clone().ok_or(Error::Unreachable { pair: i })?;
            if d.is_zero() {
                continue;
            }
            pairs.push(TerminalPair::new(w[0], w[1]));
            schedule.push(std::mem::take(&mut pending));
            receipt.parent.push(i);
            receipt.source_costs.push(trace.cost(i).to_rational());
            receipt.target_costs.push(d.to_rational());
        }
        prev.insert(p.s);
        prev.insert(p.t);
    }
    let out = Instance { graph: inst.graph.clone(), pairs, schedule };
    receipt.target_digest = out.digest();
    let k = inst.pairs.len() as u64;
    receipt.metrics.insert("k".into(), rat(k));
    receipt.metrics.insert("k_out".into(), rat(out.pairs.len() as u64));
    receipt.metrics.insert("cost_in".into(), trace.total.to_rational());
    let out_total: BigRational = receipt.target_costs.iter().sum();
    receipt.metrics.insert("cost_out".into(), out_total);
    if !pending.is_empty() {
        receipt.notes.push(format!("{} trailing schedule edges had no later sub-pair", pending.len()));
    }
    Ok((out, receipt))
}

/// Sub-instance of the ball of radius `r` at `center`: the graph split at the
/// sphere, restricted to the closed ball, with a zero-weight clique on the
/// sphere; the given pairs in order, each with its own schedule edges.
pub fn extract_sub_instance<W: Scalar>(
    inst: &Instance<W>,
    center: VertexId,
    r: &W,
    pairs: &[usize],
) -> Result<(Instance<W>, TransformReceipt)> {
    let split = split_at_sphere(&inst.graph, center, r)?;
    let (graph, kept) = induced_zero_border(&split.graph, center, r)?;
    let mut index = vec![None; split.graph.vertex_count()];
    for (new, &old) in kept.iter().enumerate() {
        index[old] = Some(new);
    }
    let map = |v: VertexId, what: &str, i: usize| -> Result<VertexId> {
        index[v].ok_or_else(|| {
            Error::Precondition(format!(
                "{what} of pair {i} has endpoint {v} outside the ball; the instance is not canonical"
            ))
        })
    };
    let mut out = Instance { graph, pairs: Vec::new(), schedule: Vec::new() };
    let mut receipt = TransformReceipt { kind: "ball_sub_instance".into(), source_digest: inst.digest(), ..Default::default() };
    let mut order = pairs.to_vec();
    order.sort();
    order.dedup();
    for i in order {
        let p = inst.pairs.get(i).ok_or_else(|| Error::Input(format!("no pair {i}")))?;
        out.pairs.push(TerminalPair::new(map(p.s, "endpoint", i)?, map(p.t, "endpoint", i)?));
        let mut edges = Vec::new();
        for e in &inst.schedule[i] {
            edges.push(Edge::new(map(e.u, "schedule edge", i)?, map(e.v, "schedule edge", i)?, e.w.clone()));
        }
        out.schedule.push(edges);
        receipt.parent.push(i);
    }
    receipt.target_digest = out.digest();
    receipt.metrics.insert("radius".into(), r.to_rational());
    receipt.metrics.insert("center".into(), rat(center as u64));
    receipt.metrics.insert("vertices".into(), rat(kept.len() as u64));
    Ok((out, receipt))
}

/// Largest input-graph distance from a terminal in the tree to its mate; 0
/// for a tree without terminals.
pub fn tree_width<W: Scalar>(tree: &[EdgeId], inst: &Instance<W>) -> W {
    let mut verts: Vec<VertexId> = tree
        .iter()
        .flat_map(|&id| {
            let e = inst.graph.edge(id);
            [e.u, e.v]
        })
        .collect();
    verts.sort();
    verts.dedup();
    width_of(&verts, inst)
}

fn width_of<W: Scalar>(verts: &[VertexId], inst: &Instance<W>) -> W {
    let mates = MateMap::new(inst);
    let mut best = W::zero();
    for &v in verts {
        let occ = mates.occurrences_at(v);
        if occ.is_empty() {
            continue;
        }
        let d = distances_from(&inst.graph, v);
        for o in occ {
            let u = mates.mate_vertex(o).expect("occurrence has a mate");
            if let Some(x) = &d[u] {
                if *x > best {
                    best = x.clone();
                }
            }
        }
    }
    best
}

/// Vertex sets of the trees of a forest given by edge ids. Vertices touched by
/// no edge are left out.
fn forest_trees<W: Scalar>(g: &WeightedGraph<W>, forest: &[EdgeId]) -> Result<Vec<Vec<VertexId>>> {
    let mut uf = UnionFind::new(g.vertex_count());
    for &id in forest {
        if id >= g.edge_count() {
            return Err(Error::Input(format!("edge {id} does not exist")));
        }
        let e = g.edge(id);
        if !uf.union(e.u, e.v) {
            return Err(Error::Input(format!("edge {id} ({}, {}) closes a cycle", e.u, e.v)));
        }
    }
    let mut touched = vec![false; g.vertex_count()];
    for &id in forest {
        touched[g.edge(id).u] = true;
        touched[g.edge(id).v] = true;
    }
    let mut by_root: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for v in (0..g.vertex_count()).filter(|&v| touched[v]) {
        by_root.entry(uf.find(v)).or_default().push(v);
    }
    Ok(by_root.into_values().collect())
}

/// `Φ(F) = w(F) + Σ_T wi(T)` over the trees of `forest`.
pub fn forest_potential<W: Scalar>(forest: &[EdgeId], inst: &Instance<W>) -> Result<W> {
    let trees = forest_trees(&inst.graph, forest)?;
    let w = inst.graph.weight_of(forest);
    Ok(trees.iter().fold(w, |acc, t| acc + width_of(t, inst)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentStep<W> {
    pub parent: usize,
    pub added: Vec<EdgeId>,
    /// Widths of the trees merged in this step, largest first.
    pub merged_widths: Vec<W>,
    pub phi: W,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentReceipt<W> {
    pub initial_phi: W,
    pub steps: Vec<AugmentStep<W>>,
    pub phi_non_increasing: bool,
    /// Every sub-pair ends up connected.
    pub feasible: bool,
    pub weight: W,
    pub opt_weight: W,
}

/// First index `i` with `seq[i+1] > seq[i]`.
fn first_increase<W: Scalar>(seq: &[W]) -> Option<usize> {
    seq.windows(2).position(|w| w[1] > w[0])
}

/// Starts from `opt` and, replaying the source pairs in order, connects every
/// sub-pair that is still split by adding the input-graph edges greedy bought
/// on that segment (a shortest input-graph path when the segment used a
/// schedule edge). Edges that would close a cycle are skipped.
pub fn augment_subdivided_solution<W: Scalar>(
    opt: &SteinerSolution<W>,
    inst: &Instance<W>,
    trace: &RunTrace<W>,
    subdivided: &Instance<W>,
    parent: &[usize],
) -> Result<(Vec<EdgeId>, AugmentReceipt<W>)> {
    let costs = trace.costs();
    if let Some(i) = first_increase(&costs) {
        let dists: Vec<W> = inst
            .pairs
            .iter()
            .enumerate()
            .map(|(k, p)| distances_from(&inst.graph, p.s)[p.t].clone().ok_or(Error::Unreachable { pair: k }))
            .collect::<Result<_>>()?;
        if first_increase(&dists).is_some() {
            return precondition(format!("pair costs increase from pair {i} to pair {}", i + 1));
        }
    }
    if parent.len() != subdivided.pairs.len() {
        return Err(Error::Input("parent map does not match the subdivided instance".into()));
    }
    let g = &inst.graph;
    let mut forest = opt.edges.clone();
    let mut uf = UnionFind::new(g.vertex_count());
    for &id in &forest {
        uf.union(g.edge(id).u, g.edge(id).v);
    }
    let initial_phi = forest_potential(&forest, inst)?;
    let mut prev_phi = initial_phi.clone();
    let mut phi_non_increasing = true;
    let mut steps = Vec::new();
    for (i, step) in trace.steps.iter().enumerate() {
        let subs: Vec<TerminalPair> = parent
            .iter()
            .zip(&subdivided.pairs)
            .filter(|(&q, _)| q == i)
            .map(|(_, p)| *p)
            .collect();
        let trees_before = forest_trees(g, &forest)?;
        let mut added = Vec::new();
        let mut touched_roots = Vec::new();
        for sp in subs {
            if uf.find(sp.s) == uf.find(sp.t) {
                continue;
            }
            touched_roots.push(sp.s);
            touched_roots.push(sp.t);
            for id in segment_edges(g, step, sp)? {
                let e = g.edge(id);
                if uf.union(e.u, e.v) {
                    forest.push(id);
                    added.push(id);
                }
            }
        }
        let mut merged_widths: Vec<W> = trees_before
            .iter()
            .filter(|t| added.iter().any(|&id| t.contains(&g.edge(id).u) || t.contains(&g.edge(id).v)))
            .map(|t| width_of(t, inst))
            .collect();
        merged_widths.sort_by(|a, b| b.partial_cmp(a).expect("comparable"));
        let phi = forest_potential(&forest, inst)?;
        if phi > prev_phi {
            phi_non_increasing = false;
        }
        prev_phi = phi.clone();
        steps.push(AugmentStep { parent: i, added, merged_widths, phi });
    }
    forest.sort();
    let feasible = subdivided.pairs.iter().all(|p| uf.find(p.s) == uf.find(p.t));
    let weight = g.weight_of(&forest);
    let receipt = AugmentReceipt { initial_phi, steps, phi_non_increasing, feasible, weight, opt_weight: opt.weight.clone() };
    Ok((forest, receipt))
}

/// Input-graph edges of the segment of `step.path` between the endpoints of `sp`.
fn segment_edges<W: Scalar>(g: &WeightedGraph<W>, step: &crate::greedy::PairStep<W>, sp: TerminalPair) -> Result<Vec<EdgeId>> {
    let a = step.path.iter().position(|&v| v == sp.s);
    let b = step.path.iter().position(|&v| v == sp.t);
    if let (Some(a), Some(b)) = (a, b) {
        let (lo, hi) = (a.min(b), a.max(b));
        let hops = step.hops.get(lo..hi);
        if let Some(hops) = hops.filter(|h| h.len() == hi - lo) {
            let ids: Vec<EdgeId> = hops
                .iter()
                .filter_map(|h| match h {
                    Hop::Graph(id) => Some(*id),
                    _ => None,
                })
                .collect();
            if ids.len() == hops.len() {
                return Ok(ids);
            }
        }
    }
    let path = shortest_path(g, sp.s, sp.t)?.ok_or_else(|| Error::Disconnected(format!("{} and {}", sp.s, sp.t)))?;
    Ok(path.edges)
}
