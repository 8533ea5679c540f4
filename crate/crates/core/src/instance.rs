//! Instances: a graph, an ordered sequence of terminal pairs, and the
//! per-pair schedule of edges revealed to the online algorithm only.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphFile, VertexId, WeightedGraph};
use crate::scalar::{format_scalar, parse_scalar, Scalar};

/// A terminal pair. Its arrival index is its position in [`Instance::pairs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TerminalPair {
    pub s: VertexId,
    pub t: VertexId,
}

impl TerminalPair {
    pub fn new(s: VertexId, t: VertexId) -> Self {
        TerminalPair { s, t }
    }

    pub fn endpoints(&self) -> [VertexId; 2] {
        [self.s, self.t]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.s == v || self.t == v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<W> {
    pub graph: WeightedGraph<W>,
    pub pairs: Vec<TerminalPair>,
    /// `schedule[i]` is revealed to the online algorithm right before pair `i`.
    /// The offline optimum never sees these edges.
    pub schedule: Vec<Vec<Edge<W>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]: {}", self.field, i, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

impl<W: Scalar> Instance<W> {
    /// Instance with an empty schedule for every pair.
    pub fn new(graph: WeightedGraph<W>, pairs: Vec<TerminalPair>) -> Self {
        let schedule = vec![Vec::new(); pairs.len()];
        Instance { graph, pairs, schedule }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Distinct terminals in first-appearance order.
    pub fn terminals(&self) -> Vec<VertexId> {
        let mut seen = Vec::new();
        for p in &self.pairs {
            for v in p.endpoints() {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
        }
        seen
    }

    /// Schedule edges revealed up to and including pair `i`.
    pub fn revealed_through(&self, i: usize) -> impl Iterator<Item = &Edge<W>> {
        self.schedule[..=i].iter().flatten()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_instance(self)
    }

    pub fn to_json(&self) -> String {
        serialize_instance(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_instance(text)
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

pub fn validate_instance<W: Scalar>(inst: &Instance<W>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.graph.vertex_count();
    let mut push = |field: &str, index: Option<usize>, message: String| {
        out.push(Violation { field: field.to_string(), index, message })
    };
    for (i, p) in inst.pairs.iter().enumerate() {
        if p.s >= n || p.t >= n {
            push("pairs", Some(i), format!("vertex out of range 0..{n}"));
        } else if p.s == p.t {
            push("pairs", Some(i), "endpoints coincide".to_string());
        }
    }
    if inst.schedule.len() != inst.pairs.len() {
        push(
            "schedule",
            None,
            format!("length {} differs from pair count {}", inst.schedule.len(), inst.pairs.len()),
        );
    }
    for (i, edges) in inst.schedule.iter().enumerate() {
        for e in edges {
            if e.u >= n || e.v >= n {
                push("schedule", Some(i), format!("edge ({}, {}) references a missing vertex", e.u, e.v));
            } else if e.u == e.v {
                push("schedule", Some(i), format!("self-loop at {}", e.u));
            }
            if e.w < W::zero() {
                push("schedule", Some(i), format!("negative weight {}", format_scalar(&e.w)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    graph: GraphFile,
    pairs: Vec<(VertexId, VertexId)>,
    schedule: Vec<Vec<(VertexId, VertexId, String)>>,
}

pub fn serialize_instance<W: Scalar>(inst: &Instance<W>) -> String {
    let file = InstanceFile {
        graph: GraphFile::from_graph(&inst.graph),
        pairs: inst.pairs.iter().map(|p| (p.s, p.t)).collect(),
        schedule: inst
            .schedule
            .iter()
            .map(|es| es.iter().map(|e| (e.u, e.v, format_scalar(&e.w))).collect())
            .collect(),
    };
    serde_json::to_string(&file).expect("instance serializes")
}

pub fn parse_instance<W: Scalar>(text: &str) -> Result<Instance<W>> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let graph = file
        .graph
        .to_graph()
        .map_err(|e| Error::Parse(format!("graph.{e}")))?;
    let pairs = file.pairs.iter().map(|&(s, t)| TerminalPair { s, t }).collect();
    let mut schedule = Vec::with_capacity(file.schedule.len());
    for (i, es) in file.schedule.iter().enumerate() {
        let mut row = Vec::with_capacity(es.len());
        for (u, v, w) in es {
            let w: W = parse_scalar(w).map_err(|e| Error::Parse(format!("schedule[{i}]: {e}")))?;
            row.push(Edge::new(*u, *v, w));
        }
        schedule.push(row);
    }
    Ok(Instance { graph, pairs, schedule })
}

/// Which endpoint of a pair a terminal occurrence is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    S,
    T,
}

/// A terminal occurrence: pair index and side.
pub type Occurrence = (usize, Side);

/// Mate relation on terminal occurrences. Occurrences (not vertices) are the
/// domain, so the relation is an involution even when a vertex belongs to
/// several pairs; [`duplicate_shared_terminals`] produces an instance where
/// occurrences and vertices coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct MateMap {
    vertex: BTreeMap<Occurrence, VertexId>,
}

impl MateMap {
    pub fn new<W: Scalar>(inst: &Instance<W>) -> Self {
        let mut vertex = BTreeMap::new();
        for (i, p) in inst.pairs.iter().enumerate() {
            vertex.insert((i, Side::S), p.s);
            vertex.insert((i, Side::T), p.t);
        }
        MateMap { vertex }
    }

    pub fn mate(&self, occ: Occurrence) -> Occurrence {
        let side = match occ.1 {
            Side::S => Side::T,
            Side::T => Side::S,
        };
        (occ.0, side)
    }

    pub fn vertex(&self, occ: Occurrence) -> Option<VertexId> {
        self.vertex.get(&occ).copied()
    }

    pub fn mate_vertex(&self, occ: Occurrence) -> Option<VertexId> {
        self.vertex(self.mate(occ))
    }

    /// All occurrences at vertex `v`.
    pub fn occurrences_at(&self, v: VertexId) -> Vec<Occurrence> {
        self.vertex.iter().filter(|(_, &x)| x == v).map(|(o, _)| *o).collect()
    }

    /// Vertex-level mate function, defined when every terminal occurs once.
    pub fn vertex_mates(&self) -> Option<BTreeMap<VertexId, VertexId>> {
        let mut out = BTreeMap::new();
        for (&occ, &v) in &self.vertex {
            if out.insert(v, self.mate_vertex(occ)?).is_some() {
                return None;
            }
        }
        Some(out)
    }

    pub fn is_involution(&self) -> bool {
        self.vertex.keys().all(|&o| self.mate(self.mate(o)) == o && self.mate(o) != o)
    }
}

/// Split every vertex that occurs in more than one pair: the second and
/// later occurrences move to fresh copies joined to the original by
/// zero-weight edges. Distances between original vertices are unchanged.
/// Returns the new instance and, for each of its vertices, the original id.
pub fn duplicate_shared_terminals<W: Scalar>(inst: &Instance<W>) -> Result<(Instance<W>, Vec<VertexId>)> {
    let mut graph = inst.graph.clone();
    let mut origin: Vec<VertexId> = (0..graph.vertex_count()).collect();
    let mut used = vec![false; graph.vertex_count()];
    let mut pairs = Vec::with_capacity(inst.pairs.len());
    for p in &inst.pairs {
        let mut ends = [p.s, p.t];
        for v in ends.iter_mut() {
            graph.check_vertex(*v)?;
            if used[*v] {
                let c = graph.add_vertex();
                graph.add_edge(*v, c, W::zero())?;
                origin.push(*v);
                *v = c;
            } else {
                used[*v] = true;
            }
        }
        pairs.push(TerminalPair::new(ends[0], ends[1]));
    }
    Ok((
        Instance { graph, pairs, schedule: inst.schedule.clone() },
        origin,
    ))
}
