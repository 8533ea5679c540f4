//! The online greedy algorithm with the three metric contraction rules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{distances_from, shortest_path, Edge, EdgeId, VertexId, WeightedGraph};
use crate::instance::Instance;
use crate::scalar::{format_scalar, lg_plus, parse_scalar, ratio_or_infinite, Extended, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContractionRule {
    /// Zero edge between every pair of consecutive path vertices.
    Rule1,
    /// One zero edge between the pair's endpoints.
    Rule2,
    /// Zero edges between consecutive previously seen terminals on the path.
    Rule3,
}

impl ContractionRule {
    pub const ALL: [ContractionRule; 3] = [ContractionRule::Rule1, ContractionRule::Rule2, ContractionRule::Rule3];

    pub fn name(self) -> &'static str {
        match self {
            ContractionRule::Rule1 => "rule1",
            ContractionRule::Rule2 => "rule2",
            ContractionRule::Rule3 => "rule3",
        }
    }
}

impl fmt::Display for ContractionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContractionRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule1" | "1" => Ok(ContractionRule::Rule1),
            "rule2" | "2" => Ok(ContractionRule::Rule2),
            "rule3" | "3" => Ok(ContractionRule::Rule3),
            _ => Err(Error::Input(format!("unknown rule {s:?}"))),
        }
    }
}

/// What a hop of a bought path ran over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Graph(EdgeId),
    Schedule,
    Shortcut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairStep<W> {
    pub path: Vec<VertexId>,
    pub hops: Vec<Hop>,
    pub cost: W,
    /// Literal rule output after this pair, in order.
    pub shortcuts: Vec<(VertexId, VertexId)>,
    pub contraction: Extended<W>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<W> {
    pub rule: ContractionRule,
    pub steps: Vec<PairStep<W>>,
    pub total: W,
    /// Cost class per pair, anchored at the largest cost, uncapped
    /// (`None` for zero-cost pairs).
    pub class_index: Vec<Option<u64>>,
}

impl<W: Scalar> RunTrace<W> {
    pub fn costs(&self) -> Vec<W> {
        self.steps.iter().map(|s| s.cost.clone()).collect()
    }

    pub fn cost(&self, i: usize) -> &W {
        &self.steps[i].cost
    }

    /// Shortcut set after the first `i` pairs, tagged by creating pair.
    pub fn shortcuts_before(&self, i: usize) -> Vec<(usize, VertexId, VertexId)> {
        self.steps[..i]
            .iter()
            .enumerate()
            .flat_map(|(j, s)| s.shortcuts.iter().map(move |&(u, v)| (j, u, v)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TraceFile::from_trace(self)).expect("trace serializes")
    }

    /// Parse a trace file. Hops are not part of the file format and come back empty.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: TraceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut steps = Vec::with_capacity(f.pairs.len());
        for (i, p) in f.pairs.into_iter().enumerate() {
            let cost: W = parse_scalar(&p.cost).map_err(|e| Error::Parse(format!("pairs[{i}].cost: {e}")))?;
            let contraction =
                Extended::from_text(&p.contraction).map_err(|e| Error::Parse(format!("pairs[{i}].contraction: {e}")))?;
            steps.push(PairStep { path: p.path, hops: Vec::new(), cost, shortcuts: p.shortcuts, contraction });
        }
        let total: W = parse_scalar(&f.total)?;
        let costs: Vec<W> = steps.iter().map(|s: &PairStep<W>| s.cost.clone()).collect();
        Ok(RunTrace { rule: f.rule, class_index: uncapped_classes(&costs), steps, total })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    rule: ContractionRule,
    pairs: Vec<TracePairFile>,
    total: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TracePairFile {
    path: Vec<VertexId>,
    cost: String,
    shortcuts: Vec<(VertexId, VertexId)>,
    contraction: String,
}

impl TraceFile {
    fn from_trace<W: Scalar>(t: &RunTrace<W>) -> Self {
        TraceFile {
            rule: t.rule,
            pairs: t
                .steps
                .iter()
                .map(|s| TracePairFile {
                    path: s.path.clone(),
                    cost: format_scalar(&s.cost),
                    shortcuts: s.shortcuts.clone(),
                    contraction: s.contraction.to_text(),
                })
                .collect(),
            total: format_scalar(&t.total),
        }
    }
}

/// Zero-weight edges added by `rule` after buying `path`. For Rule 3 the
/// path's first and last vertices always belong to the subsequence.
pub fn apply_contraction_rule(
    rule: ContractionRule,
    path: &[VertexId],
    prev_terminals: &BTreeSet<VertexId>,
) -> Vec<(VertexId, VertexId)> {
    if path.len() < 2 {
        return Vec::new();
    }
    match rule {
        ContractionRule::Rule1 => path.windows(2).map(|w| (w[0], w[1])).collect(),
        ContractionRule::Rule2 => vec![(path[0], path[path.len() - 1])],
        ContractionRule::Rule3 => {
            let last = path.len() - 1;
            let keep: Vec<VertexId> = path
                .iter()
                .enumerate()
                .filter(|&(i, v)| i == 0 || i == last || prev_terminals.contains(v))
                .map(|(_, &v)| v)
                .collect();
            keep.windows(2).map(|w| (w[0], w[1])).collect()
        }
    }
}

/// Runs greedy, tracking the metric incrementally.
struct Engine<W> {
    metric: WeightedGraph<W>,
    kind: Vec<Hop>,
    zero: BTreeSet<(VertexId, VertexId)>,
}

impl<W: Scalar> Engine<W> {
    fn new(g: &WeightedGraph<W>) -> Self {
        Engine {
            metric: g.clone(),
            kind: (0..g.edge_count()).map(Hop::Graph).collect(),
            zero: BTreeSet::new(),
        }
    }

    fn reveal(&mut self, e: &Edge<W>) -> Result<()> {
        self.metric.add_edge(e.u, e.v, e.w.clone())?;
        self.kind.push(Hop::Schedule);
        Ok(())
    }

    fn shortcut(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        if u != v && self.zero.insert((u.min(v), u.max(v))) {
            self.metric.add_edge(u, v, W::zero())?;
            self.kind.push(Hop::Shortcut);
        }
        Ok(())
    }
}

pub fn run_greedy<W: Scalar>(inst: &Instance<W>, rule: ContractionRule) -> Result<RunTrace<W>> {
    if let Some(v) = inst.validate().first() {
        return Err(Error::Input(v.to_string()));
    }
    let mut eng = Engine::new(&inst.graph);
    let mut prev = BTreeSet::new();
    let mut steps = Vec::with_capacity(inst.pairs.len());
    let mut total = W::zero();
    for (i, p) in inst.pairs.iter().enumerate() {
        for e in &inst.schedule[i] {
            eng.reveal(e)?;
        }
        let found = shortest_path(&eng.metric, p.s, p.t)?.ok_or(Error::Unreachable { pair: i })?;
        let hops = found.edges.iter().map(|&id| eng.kind[id]).collect();
        let shortcuts = apply_contraction_rule(rule, &found.path, &prev);
        for &(u, v) in &shortcuts {
            eng.shortcut(u, v)?;
        }
        prev.insert(p.s);
        prev.insert(p.t);
        let d = distances_from(&inst.graph, p.s)[p.t]
            .clone()
            .ok_or(Error::Unreachable { pair: i })?;
        total = total + found.distance.clone();
        steps.push(PairStep {
            contraction: ratio_or_infinite(&d, &found.distance),
            path: found.path,
            hops,
            cost: found.distance,
            shortcuts,
        });
    }
    let costs: Vec<W> = steps.iter().map(|s| s.cost.clone()).collect();
    Ok(RunTrace { rule, steps, total, class_index: uncapped_classes(&costs) })
}

/// The metric greedy saw when pair `i` arrived: the graph, every schedule
/// edge revealed through `i`, and all shortcuts created by earlier pairs.
pub fn metric_at<W: Scalar>(inst: &Instance<W>, trace: &RunTrace<W>, i: usize) -> Result<WeightedGraph<W>> {
    let mut g = inst.graph.with_extra_edges(inst.revealed_through(i))?;
    for (_, u, v) in trace.shortcuts_before(i) {
        g.add_edge(u, v, W::zero())?;
    }
    Ok(g)
}

/// `d_G(s_i, t_i) / cost_i` over the original graph; infinite for zero cost.
pub fn contraction_of<W: Scalar>(trace: &RunTrace<W>, inst: &Instance<W>, i: usize) -> Result<Extended<W>> {
    let p = inst.pairs.get(i).ok_or_else(|| Error::Input(format!("no pair {i}")))?;
    let d = distances_from(&inst.graph, p.s)[p.t].clone().ok_or(Error::Unreachable { pair: i })?;
    Ok(ratio_or_infinite(&d, trace.cost(i)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostClassPartition<W> {
    pub anchor: W,
    pub classes: BTreeMap<u64, Vec<usize>>,
    pub residual: Vec<usize>,
}

impl<W: Scalar> CostClassPartition<W> {
    pub fn class_of(&self, pair: usize) -> Option<u64> {
        self.classes.iter().find(|(_, ps)| ps.contains(&pair)).map(|(&j, _)| j)
    }
}

/// Default class cap `⌈log₂ k⌉ + 1`.
pub fn default_class_cap(k: usize) -> u64 {
    if k <= 1 {
        1
    } else {
        lg_plus(k as u64) + 1
    }
}

/// Partition pairs by `⌊log₂(C_max / cost)⌋`. Pairs of cost zero, and pairs
/// with `cost < C_max / 2^cap` when a cap is given, form the residual.
pub fn partition_cost_classes<W: Scalar>(trace: &RunTrace<W>, class_cap: Option<u64>) -> Result<CostClassPartition<W>> {
    partition_costs(&trace.costs(), class_cap)
}

pub fn partition_costs<W: Scalar>(costs: &[W], class_cap: Option<u64>) -> Result<CostClassPartition<W>> {
    let anchor = costs
        .iter()
        .filter(|c| !c.is_zero())
        .fold(None::<W>, |m, c| match m {
            Some(m) if m >= *c => Some(m),
            _ => Some(c.clone()),
        })
        .ok_or_else(|| Error::Input("all pair costs are zero".into()))?;
    let mut classes: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut residual = Vec::new();
    let a = anchor.to_rational();
    for (i, c) in costs.iter().enumerate() {
        if c.is_zero() {
            residual.push(i);
            continue;
        }
        let ratio = &a / c.to_rational();
        let j = crate::scalar::floor_log2(&ratio) as u64;
        let over_cap = class_cap.is_some_and(|cap| ratio > crate::scalar::pow2(cap as i64));
        if over_cap {
            residual.push(i);
        } else {
            classes.entry(j).or_default().push(i);
        }
    }
    Ok(CostClassPartition { anchor, classes, residual })
}

fn uncapped_classes<W: Scalar>(costs: &[W]) -> Vec<Option<u64>> {
    match partition_costs(costs, None) {
        Ok(part) => (0..costs.len()).map(|i| part.class_of(i)).collect(),
        Err(_) => vec![None; costs.len()],
    }
}

/// `{i : α(p_i) < alpha}`.
pub fn pairs_below_contraction<W: Scalar>(trace: &RunTrace<W>, alpha: &W) -> BTreeSet<usize> {
    let bound = Extended::Finite(alpha.clone());
    trace
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.contraction.lt(&bound))
        .map(|(i, _)| i)
        .collect()
}

/// Checks, for one step with a fixed path and terminal history, that the
/// distances induced by the Rule 2 zero edges dominate those of Rule 3,
/// which dominate those of Rule 1, on every vertex pair of `metric`.
pub fn step_richness_holds<W: Scalar>(
    metric: &WeightedGraph<W>,
    path: &[VertexId],
    prev_terminals: &BTreeSet<VertexId>,
) -> Result<bool> {
    let mut dist = Vec::new();
    for rule in [ContractionRule::Rule2, ContractionRule::Rule3, ContractionRule::Rule1] {
        let extra: Vec<Edge<W>> = apply_contraction_rule(rule, path, prev_terminals)
            .into_iter()
            .map(|(u, v)| Edge::new(u, v, W::zero()))
            .collect();
        let g = metric.with_extra_edges(&extra)?;
        dist.push(crate::graph::all_pairs(&g));
    }
    let ge = |a: &Option<W>, b: &Option<W>| match (a, b) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x >= y,
    };
    let n = metric.vertex_count();
    Ok((0..n).all(|u| {
        (0..n).all(|v| ge(&dist[0][u][v], &dist[1][u][v]) && ge(&dist[1][u][v], &dist[2][u][v]))
    }))
}

/// Whole-run totals under each rule, for the empirical dominance log.
#[derive(Debug, Clone)]
pub struct RuleComparison<W> {
    pub totals: BTreeMap<ContractionRule, W>,
    /// Rule 2 total ≥ Rule 1 total.
    pub rule2_dominates_rule1: bool,
    /// All three traces identical step by step (path, cost, shortcuts).
    pub identical: bool,
}

pub fn compare_rules<W: Scalar>(inst: &Instance<W>) -> Result<RuleComparison<W>> {
    let traces: Vec<RunTrace<W>> = ContractionRule::ALL
        .iter()
        .map(|&r| run_greedy(inst, r))
        .collect::<Result<_>>()?;
    let totals: BTreeMap<_, _> = traces.iter().map(|t| (t.rule, t.total.clone())).collect();
    let same = |a: &RunTrace<W>, b: &RunTrace<W>| {
        a.steps.len() == b.steps.len()
            && a.steps
                .iter()
                .zip(&b.steps)
                .all(|(x, y)| x.path == y.path && x.cost == y.cost && x.shortcuts == y.shortcuts)
    };
    Ok(RuleComparison {
        rule2_dominates_rule1: totals[&ContractionRule::Rule2] >= totals[&ContractionRule::Rule1],
        identical: same(&traces[0], &traces[1]) && same(&traces[1], &traces[2]),
        totals,
    })
}

/// `format_scalar` for costs, re-exported for report code.
pub fn cost_text<W: Scalar>(w: &W) -> String {
    format_scalar(w)
}
