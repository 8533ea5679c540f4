//! Dual balls for one cost class, the auxiliary blocking graph, and the
//! girth and Moore-bound audits on it.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{distances_from, girth, VertexId, WeightedGraph};
use crate::greedy::{partition_cost_classes, RunTrace};
use crate::instance::Instance;
use crate::opt::DualBall;
use crate::scalar::{format_scalar, lg_plus, parse_scalar, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacedBall {
    pub center: VertexId,
    pub pair: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDualCollection<W> {
    pub class_cost: W,
    pub radius: W,
    pub balls: Vec<PlacedBall>,
    /// Pairs of the subset that received no ball.
    pub skipped: Vec<usize>,
}

/// Unweighted graph on ball indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuxiliaryGraph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl AuxiliaryGraph {
    /// Hop-count girth; a loop counts as a cycle of length 1.
    pub fn girth(&self) -> Option<usize> {
        if self.edges.iter().any(|&(a, b)| a == b) {
            return Some(1);
        }
        let g = WeightedGraph::<num_rational::Rational64>::from_edges(
            self.vertex_count,
            self.edges.iter().map(|&(a, b)| (a, b, num_rational::Rational64::one())),
        )
        .expect("ball indices are in range");
        girth(&g)
    }
}

impl<W: Scalar> ClassDualCollection<W> {
    pub fn dual_balls(&self) -> Vec<DualBall<W>> {
        self.balls
            .iter()
            .map(|b| DualBall { center: b.center, radius: self.radius.clone(), pair: b.pair })
            .collect()
    }

    pub fn to_json(&self, aux: &AuxiliaryGraph) -> String {
        let f = ClassDualFile {
            class_cost: format_scalar(&self.class_cost),
            radius: format_scalar(&self.radius),
            balls: self.balls.iter().map(|b| BallFile { center: b.center, pair: b.pair }).collect(),
            aux_edges: aux.edges.clone(),
        };
        serde_json::to_string(&f).expect("certificate serializes")
    }

    /// Parse a certificate. `skipped` is not stored in the file and comes back empty.
    pub fn from_json(text: &str) -> Result<(Self, AuxiliaryGraph)> {
        let f: ClassDualFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let coll = ClassDualCollection {
            class_cost: parse_scalar(&f.class_cost)?,
            radius: parse_scalar(&f.radius)?,
            balls: f.balls.iter().map(|b| PlacedBall { center: b.center, pair: b.pair }).collect(),
            skipped: Vec::new(),
        };
        let aux = AuxiliaryGraph { vertex_count: coll.balls.len(), edges: f.aux_edges };
        if aux.edges.iter().any(|&(a, b)| a >= aux.vertex_count || b >= aux.vertex_count) {
            return Err(Error::Parse("aux_edges reference a missing ball".into()));
        }
        Ok((coll, aux))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDualFile {
    class_cost: String,
    radius: String,
    balls: Vec<BallFile>,
    aux_edges: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BallFile {
    center: VertexId,
    pair: usize,
}

/// Smallest traced cost over `pairs`.
pub fn min_cost<W: Scalar>(trace: &RunTrace<W>, pairs: &[usize]) -> Option<W> {
    pairs.iter().map(|&i| trace.cost(i).clone()).fold(None, |m, c| match m {
        Some(m) if m <= c => Some(m),
        _ => Some(c),
    })
}

/// `c / (8 lg⁺ size)`.
pub fn class_radius<W: Scalar>(c: &W, size: usize) -> W {
    c.clone() / W::from_u64(8 * lg_plus(size as u64))
}

/// Place balls of radius `r` for the pairs of `subset`, in arrival order,
/// at `s` when possible and otherwise at `t`. Two open balls of radius `r`
/// are disjoint iff their centers are at distance `≥ 2r`. A pair with both
/// endpoints blocked adds an auxiliary edge between the smallest-index ball
/// blocking `s` and the smallest-index ball blocking `t`.
///
/// `class_cost` is the smallest traced cost in `class_pairs`; every pair of
/// the class costs at least that much.
pub fn build_class_duals<W: Scalar>(
    trace: &RunTrace<W>,
    inst: &Instance<W>,
    class_pairs: &[usize],
    subset: &[usize],
    r: &W,
) -> Result<(ClassDualCollection<W>, AuxiliaryGraph)> {
    if *r <= W::zero() {
        return Err(Error::Input("radius must be positive".into()));
    }
    for &p in class_pairs {
        if p >= inst.pairs.len() || p >= trace.steps.len() {
            return Err(Error::Input(format!("pair {p} does not exist")));
        }
    }
    if let Some(p) = subset.iter().find(|p| !class_pairs.contains(p)) {
        return Err(Error::Input(format!("pair {p} is not in the class")));
    }
    let class_cost = min_cost(trace, class_pairs).ok_or_else(|| Error::Input("empty class".into()))?;
    if class_cost.is_zero() {
        return Err(Error::Input("class contains a zero-cost pair".into()));
    }
    let mut order = subset.to_vec();
    order.sort();
    order.dedup();
    let two_r = r.clone() + r.clone();
    let mut balls: Vec<PlacedBall> = Vec::new();
    let mut skipped = Vec::new();
    let mut aux = AuxiliaryGraph::default();
    for p in order {
        let pair = inst.pairs[p];
        let blocker = |v: VertexId| -> Option<usize> {
            let d = distances_from(&inst.graph, v);
            balls
                .iter()
                .position(|b| d[b.center].as_ref().is_some_and(|x| *x < two_r))
        };
        let bs = blocker(pair.s);
        if bs.is_none() {
            balls.push(PlacedBall { center: pair.s, pair: p });
            continue;
        }
        let bt = blocker(pair.t);
        match bt {
            None => balls.push(PlacedBall { center: pair.t, pair: p }),
            Some(bt) => {
                aux.edges.push((bs.unwrap(), bt));
                skipped.push(p);
            }
        }
    }
    aux.vertex_count = balls.len();
    Ok((ClassDualCollection { class_cost, radius: r.clone(), balls, skipped }, aux))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDualReport {
    /// Radius positive and at most `c / (8 lg⁺|P̃|)`.
    pub uniform_radius: bool,
    /// `|P′| ≤ 5 |𝓑|`.
    pub count_bound: bool,
    pub one_ball_per_pair: bool,
    pub centers_at_endpoints: bool,
    pub disjoint: bool,
    pub radius_below_mate: bool,
    /// `|P′| = |𝓑| + |aux edges|`.
    pub counting_identity: bool,
    /// `|E′| < 4 |V′|` (vacuous for an empty auxiliary graph).
    pub aux_sparse: bool,
    pub offending: Vec<String>,
}

impl ClassDualReport {
    pub fn all_hold(&self) -> bool {
        self.uniform_radius
            && self.count_bound
            && self.one_ball_per_pair
            && self.centers_at_endpoints
            && self.disjoint
            && self.radius_below_mate
            && self.counting_identity
            && self.aux_sparse
    }

    pub fn clauses(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("uniform_radius", self.uniform_radius),
            ("count_bound", self.count_bound),
            ("one_ball_per_pair", self.one_ball_per_pair),
            ("centers_at_endpoints", self.centers_at_endpoints),
            ("disjoint", self.disjoint),
            ("radius_below_mate", self.radius_below_mate),
            ("counting_identity", self.counting_identity),
            ("aux_sparse", self.aux_sparse),
        ]
    }
}

pub fn verify_class_duals<W: Scalar>(
    coll: &ClassDualCollection<W>,
    aux: &AuxiliaryGraph,
    trace: &RunTrace<W>,
    inst: &Instance<W>,
    class_pairs: &[usize],
    subset: &[usize],
) -> ClassDualReport {
    let mut offending = Vec::new();
    let c = min_cost(trace, class_pairs);
    let uniform_radius = coll.radius > W::zero()
        && c.as_ref()
            .is_some_and(|c| coll.radius <= class_radius(c, class_pairs.len()));
    if !uniform_radius {
        offending.push(format!("radius {} exceeds the class bound", format_scalar(&coll.radius)));
    }
    let count_bound = subset.len() <= 5 * coll.balls.len();
    let mut owners: Vec<usize> = coll.balls.iter().map(|b| b.pair).collect();
    owners.sort();
    let one_ball_per_pair = owners.windows(2).all(|w| w[0] != w[1]);
    if !one_ball_per_pair {
        offending.push("a pair owns two balls".into());
    }
    let mut centers_at_endpoints = true;
    let mut radius_below_mate = true;
    let mut dist = Vec::with_capacity(coll.balls.len());
    for (i, b) in coll.balls.iter().enumerate() {
        let pair = inst.pairs.get(b.pair);
        let ok = subset.contains(&b.pair) && pair.is_some_and(|p| p.contains(b.center));
        let d = if b.center < inst.graph.vertex_count() {
            distances_from(&inst.graph, b.center)
        } else {
            vec![None; inst.graph.vertex_count()]
        };
        if !ok {
            centers_at_endpoints = false;
            offending.push(format!("ball {i} is not centered at an endpoint of a pair in P'"));
        } else {
            let p = pair.unwrap();
            let mate = if p.s == b.center { p.t } else { p.s };
            if d[mate].as_ref().is_some_and(|dm| coll.radius >= *dm) {
                radius_below_mate = false;
                offending.push(format!("ball {i}: radius reaches the mate"));
            }
        }
        dist.push(d);
    }
    let two_r = coll.radius.clone() + coll.radius.clone();
    let mut disjoint = true;
    for i in 0..coll.balls.len() {
        for j in i + 1..coll.balls.len() {
            if dist[i].get(coll.balls[j].center).cloned().flatten().is_some_and(|d| d < two_r) {
                disjoint = false;
                offending.push(format!("balls {i} and {j} overlap"));
            }
        }
    }
    let counting_identity = subset.len() == coll.balls.len() + aux.edges.len();
    let aux_sparse = aux.edges.is_empty() || aux.edges.len() < 4 * aux.vertex_count;
    ClassDualReport {
        uniform_radius,
        count_bound,
        one_ball_per_pair,
        centers_at_endpoints,
        disjoint,
        radius_below_mate,
        counting_identity,
        aux_sparse,
        offending,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirthAudit {
    pub girth: Option<usize>,
    pub required: u64,
    pub holds: bool,
}

/// `girth ≥ 2 lg⁺(p_count)`, or acyclic.
pub fn girth_audit(aux: &AuxiliaryGraph, p_count: usize) -> GirthAudit {
    let g = aux.girth();
    let required = 2 * lg_plus(p_count as u64);
    GirthAudit { girth: g, required, holds: g.is_none_or(|g| g as u64 >= required) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MooreAudit {
    pub girth: Option<usize>,
    /// First `p` whose density premise fires while the girth exceeds `2p`.
    pub first_violation: Option<u32>,
}

impl MooreAudit {
    pub fn consistent(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Moore's bound on the hop skeleton: whenever `|E|^p ≥ 2^p n^{p+1}` the
/// girth must be at most `2p`. Checked for `p = 1..⌈log₂ n⌉`.
pub fn moore_bound_audit<W: Scalar>(g: &WeightedGraph<W>) -> MooreAudit {
    moore_counts(g.vertex_count(), g.edge_count(), girth(g))
}

pub fn moore_bound_audit_aux(aux: &AuxiliaryGraph) -> MooreAudit {
    moore_counts(aux.vertex_count, aux.edges.len(), aux.girth())
}

fn moore_counts(n: usize, m: usize, g: Option<usize>) -> MooreAudit {
    let top = lg_plus(n as u64) as u32;
    let n_big = BigUint::from(n);
    let m_big = BigUint::from(m);
    let two = BigUint::from(2u32);
    let first_violation = (1..=top).find(|&p| {
        let fires = m_big.pow(p) >= two.pow(p) * n_big.pow(p + 1) && n > 0;
        fires && g.is_none_or(|g| g > 2 * p as usize)
    });
    MooreAudit { girth: g, first_violation }
}

/// Class-dual certificate for every cost class of a run, taking
/// `P′ = P̃` and `r = c / (8 lg⁺|P̃|)` with `c` the smallest cost in the class.
pub struct ClassCertificate<W> {
    pub class_index: u64,
    pub class_pairs: Vec<usize>,
    pub collection: ClassDualCollection<W>,
    pub aux: AuxiliaryGraph,
}

pub fn certify_all_classes<W: Scalar>(trace: &RunTrace<W>, inst: &Instance<W>) -> Result<Vec<ClassCertificate<W>>> {
    if trace.steps.iter().all(|s| s.cost.is_zero()) {
        return Ok(Vec::new());
    }
    let part = partition_cost_classes(trace, None)?;
    let mut out = Vec::new();
    for (&j, pairs) in &part.classes {
        let c = min_cost(trace, pairs).expect("nonempty class");
        let r = class_radius(&c, pairs.len());
        let (collection, aux) = build_class_duals(trace, inst, pairs, pairs, &r)?;
        out.push(ClassCertificate { class_index: j, class_pairs: pairs.clone(), collection, aux });
    }
    Ok(out)
}
