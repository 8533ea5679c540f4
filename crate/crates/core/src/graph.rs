//! Undirected graphs with exact nonnegative weights.

use std::collections::{BTreeSet, VecDeque};

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::scalar::{format_scalar, parse_scalar, Scalar};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<W> {
    pub u: VertexId,
    pub v: VertexId,
    pub w: W,
}

impl<W> Edge<W> {
    pub fn new(u: VertexId, v: VertexId, w: W) -> Self {
        Edge { u, v, w }
    }

    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    /// Endpoints as `(min, max)`.
    pub fn key(&self) -> (VertexId, VertexId) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// Undirected multigraph on vertices `0..n`. Self-loops are rejected;
/// parallel edges are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<W> {
    n: usize,
    edges: Vec<Edge<W>>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
}

impl<W: Scalar> WeightedGraph<W> {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId, W)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge<W> {
        &self.edges[id]
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::InvalidVertex { vertex: v, n: self.n })
        }
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.adj.push(Vec::new());
        self.n += 1;
        self.n - 1
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, w: W) -> Result<EdgeId> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if w < W::zero() {
            return Err(Error::NegativeWeight(format_scalar(&w)));
        }
        let id = self.edges.len();
        self.edges.push(Edge { u, v, w });
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
        Ok(id)
    }

    /// Copy of `self` with `extra` appended (edge ids of `self` are preserved).
    pub fn with_extra_edges<'a>(&self, extra: impl IntoIterator<Item = &'a Edge<W>>) -> Result<Self> {
        let mut g = self.clone();
        for e in extra {
            g.add_edge(e.u, e.v, e.w.clone())?;
        }
        Ok(g)
    }

    pub fn total_weight(&self) -> W {
        self.edges.iter().fold(W::zero(), |acc, e| acc + e.w.clone())
    }

    pub fn weight_of(&self, edge_ids: &[EdgeId]) -> W {
        edge_ids
            .iter()
            .fold(W::zero(), |acc, &i| acc + self.edges[i].w.clone())
    }

    /// First edge joining `u` and `v` with the smallest weight, if any.
    pub fn lightest_edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        let mut best: Option<EdgeId> = None;
        for &(x, id) in &self.adj[u] {
            if x == v && best.is_none_or(|b| self.edges[id].w < self.edges[b].w) {
                best = Some(id);
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphFile::from_graph(self)).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.to_graph()
    }
}

/// Serialized form `{"n": int, "edges": [[u, v, "num/den"], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(VertexId, VertexId, String)>,
}

impl GraphFile {
    pub fn from_graph<W: Scalar>(g: &WeightedGraph<W>) -> Self {
        GraphFile {
            n: g.vertex_count(),
            edges: g.edges().iter().map(|e| (e.u, e.v, format_scalar(&e.w))).collect(),
        }
    }

    pub fn to_graph<W: Scalar>(&self) -> Result<WeightedGraph<W>> {
        let mut g = WeightedGraph::new(self.n);
        for (i, (u, v, w)) in self.edges.iter().enumerate() {
            let w: W = parse_scalar(w).map_err(|e| Error::Parse(format!("edges[{i}]: {e}")))?;
            g.add_edge(*u, *v, w).map_err(|e| Error::Parse(format!("edges[{i}]: {e}")))?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult<W> {
    pub distance: W,
    /// Vertex sequence from source to target.
    pub path: Vec<VertexId>,
    /// Edge ids along `path`, one fewer than vertices.
    pub edges: Vec<EdgeId>,
}

/// Single-source distances (`None` = unreachable). Quadratic Dijkstra; only
/// `PartialOrd` is needed on the weights.
pub fn distances_from<W: Scalar>(g: &WeightedGraph<W>, s: VertexId) -> Vec<Option<W>> {
    let n = g.vertex_count();
    let mut dist: Vec<Option<W>> = vec![None; n];
    let mut done = vec![false; n];
    dist[s] = Some(W::zero());
    loop {
        let mut best: Option<VertexId> = None;
        for v in 0..n {
            if done[v] {
                continue;
            }
            if let Some(d) = &dist[v] {
                if best.is_none_or(|b| d < dist[b].as_ref().unwrap()) {
                    best = Some(v);
                }
            }
        }
        let Some(u) = best else { break };
        done[u] = true;
        let du = dist[u].clone().unwrap();
        for &(x, id) in g.neighbors(u) {
            if done[x] {
                continue;
            }
            let cand = du.clone() + g.edge(id).w.clone();
            if dist[x].as_ref().is_none_or(|d| cand < *d) {
                dist[x] = Some(cand);
            }
        }
    }
    dist
}

pub fn distance<W: Scalar>(g: &WeightedGraph<W>, s: VertexId, t: VertexId) -> Result<Option<W>> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    Ok(distances_from(g, s).swap_remove(t))
}

/// All-pairs distances by repeated Dijkstra.
pub fn all_pairs<W: Scalar>(g: &WeightedGraph<W>) -> Vec<Vec<Option<W>>> {
    (0..g.vertex_count()).map(|s| distances_from(g, s)).collect()
}

/// Deterministic exact shortest path.
///
/// Among paths of equal length the one whose vertex set has the smallest
/// value of `Σ 2^v` wins; remaining ties (same vertex set) go to the path
/// found first. The rule is consistent on subpaths, and a direct edge beats
/// any longer path of the same length because its vertex set is a subset.
/// Returns `Ok(None)` when `t` is unreachable.
pub fn shortest_path<W: Scalar>(g: &WeightedGraph<W>, s: VertexId, t: VertexId) -> Result<Option<PathResult<W>>> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    let n = g.vertex_count();
    let bit = |v: VertexId| -> BigUint { BigUint::one() << v };
    let mut key: Vec<Option<(W, BigUint)>> = vec![None; n];
    let mut pred: Vec<Option<(VertexId, EdgeId)>> = vec![None; n];
    let mut done = vec![false; n];
    key[s] = Some((W::zero(), bit(s)));
    let less = |a: &(W, BigUint), b: &(W, BigUint)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    loop {
        let mut best: Option<VertexId> = None;
        for v in 0..n {
            if done[v] {
                continue;
            }
            if let Some(k) = &key[v] {
                if best.is_none_or(|b| less(k, key[b].as_ref().unwrap())) {
                    best = Some(v);
                }
            }
        }
        let Some(u) = best else { break };
        done[u] = true;
        if u == t {
            break;
        }
        let (du, mu) = key[u].clone().unwrap();
        for &(x, id) in g.neighbors(u) {
            if done[x] {
                continue;
            }
            let cand = (du.clone() + g.edge(id).w.clone(), &mu + bit(x));
            if key[x].as_ref().is_none_or(|k| less(&cand, k)) {
                key[x] = Some(cand);
                pred[x] = Some((u, id));
            }
        }
    }
    let Some((distance, _)) = key[t].clone() else {
        return Ok(None);
    };
    let mut path = vec![t];
    let mut edges = Vec::new();
    let mut cur = t;
    while let Some((p, id)) = pred[cur] {
        path.push(p);
        edges.push(id);
        cur = p;
    }
    path.reverse();
    edges.reverse();
    Ok(Some(PathResult { distance, path, edges }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball<W> {
    pub center: VertexId,
    pub radius: W,
    pub members: BTreeSet<VertexId>,
}

/// `{u : d(v, u) < r}`.
pub fn open_ball<W: Scalar>(g: &WeightedGraph<W>, v: VertexId, r: &W) -> Result<Ball<W>> {
    g.check_vertex(v)?;
    if *r < W::zero() {
        return precondition("ball radius must be nonnegative");
    }
    let members = distances_from(g, v)
        .into_iter()
        .enumerate()
        .filter_map(|(u, d)| d.filter(|d| d < r).map(|_| u))
        .collect();
    Ok(Ball { center: v, radius: r.clone(), members })
}

/// Replace every positive edge by a chain of `w / eta` edges of weight `eta`.
/// Original vertices keep their ids; the returned map sends them to themselves.
pub fn subdivide_edges<W: Scalar>(g: &WeightedGraph<W>, eta: &W) -> Result<(WeightedGraph<W>, Vec<VertexId>)> {
    if *eta <= W::zero() {
        return precondition("eta must be positive");
    }
    let eta_q = eta.to_rational();
    let mut out = WeightedGraph::new(g.vertex_count());
    for (i, e) in g.edges().iter().enumerate() {
        if e.w.is_zero() {
            out.add_edge(e.u, e.v, e.w.clone())?;
            continue;
        }
        let q = e.w.to_rational() / &eta_q;
        if !q.is_integer() {
            return precondition(format!("edge {i} weight {} is not a multiple of eta", format_scalar(&e.w)));
        }
        let steps: usize = num_traits::ToPrimitive::to_usize(&q.to_integer())
            .ok_or_else(|| Error::Precondition(format!("edge {i} needs too many subdivisions")))?;
        let mut prev = e.u;
        for _ in 1..steps {
            let x = out.add_vertex();
            out.add_edge(prev, x, eta.clone())?;
            prev = x;
        }
        out.add_edge(prev, e.v, eta.clone())?;
    }
    Ok((out, (0..g.vertex_count()).collect()))
}

/// Result of [`split_at_sphere`].
#[derive(Debug, Clone)]
pub struct SphereSplit<W> {
    pub graph: WeightedGraph<W>,
    /// For each edge of `graph`, the edge of the input graph it lies on.
    pub edge_origin: Vec<EdgeId>,
    /// Distances from the center in `graph`.
    pub dist: Vec<Option<W>>,
}

/// Insert a vertex at every interior point of an edge lying at distance
/// exactly `r` from `center`. Afterwards no edge jumps over the sphere, and
/// all distances between input vertices are unchanged.
pub fn split_at_sphere<W: Scalar>(g: &WeightedGraph<W>, center: VertexId, r: &W) -> Result<SphereSplit<W>> {
    g.check_vertex(center)?;
    let d = distances_from(g, center);
    let mut out = WeightedGraph::new(g.vertex_count());
    let mut edge_origin = Vec::new();
    let mut dist = d.clone();
    for (i, e) in g.edges().iter().enumerate() {
        let (Some(dx), Some(dy)) = (&d[e.u], &d[e.v]) else {
            out.add_edge(e.u, e.v, e.w.clone())?;
            edge_origin.push(i);
            continue;
        };
        // Offsets from e.u of interior points at distance r.
        let mut cuts: Vec<W> = Vec::new();
        let t1 = r.clone() - dx.clone();
        if t1 > W::zero() && t1 < e.w && dx.clone() + t1.clone() <= dy.clone() + e.w.clone() - t1.clone() {
            cuts.push(t1);
        }
        let t2 = e.w.clone() - (r.clone() - dy.clone());
        if t2 > W::zero()
            && t2 < e.w
            && dy.clone() + e.w.clone() - t2.clone() <= dx.clone() + t2.clone()
            && cuts.first() != Some(&t2)
        {
            cuts.push(t2);
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prev = e.u;
        let mut at = W::zero();
        for t in cuts {
            let x = out.add_vertex();
            dist.push(Some(r.clone()));
            out.add_edge(prev, x, t.clone() - at)?;
            edge_origin.push(i);
            prev = x;
            at = t;
        }
        out.add_edge(prev, e.v, e.w.clone() - at)?;
        edge_origin.push(i);
    }
    Ok(SphereSplit { graph: out, edge_origin, dist })
}

/// Induced subgraph on the closed ball `{u : d(center, u) ≤ r}` plus a
/// zero-weight clique on the sphere `{u : d(center, u) = r}`.
///
/// Returns the new graph and, for each of its vertices, the original id.
pub fn induced_zero_border<W: Scalar>(
    g: &WeightedGraph<W>,
    center: VertexId,
    r: &W,
) -> Result<(WeightedGraph<W>, Vec<VertexId>)> {
    g.check_vertex(center)?;
    let d = distances_from(g, center);
    let inside = |v: VertexId| d[v].as_ref().is_some_and(|x| x <= r);
    for (i, e) in g.edges().iter().enumerate() {
        let strictly_in = |v: VertexId| d[v].as_ref().is_some_and(|x| x < r);
        let strictly_out = |v: VertexId| d[v].as_ref().is_none_or(|x| x > r);
        if (strictly_in(e.u) && strictly_out(e.v)) || (strictly_in(e.v) && strictly_out(e.u)) {
            return precondition(format!("edge {i} ({}, {}) crosses the sphere", e.u, e.v));
        }
    }
    let kept: Vec<VertexId> = (0..g.vertex_count()).filter(|&v| inside(v)).collect();
    let mut index = vec![usize::MAX; g.vertex_count()];
    for (i, &v) in kept.iter().enumerate() {
        index[v] = i;
    }
    let mut out = WeightedGraph::new(kept.len());
    for e in g.edges() {
        if inside(e.u) && inside(e.v) {
            out.add_edge(index[e.u], index[e.v], e.w.clone())?;
        }
    }
    let sphere: Vec<VertexId> = kept.iter().copied().filter(|&v| d[v].as_ref() == Some(r)).collect();
    for (a, &x) in sphere.iter().enumerate() {
        for &y in &sphere[a + 1..] {
            out.add_edge(index[x], index[y], W::zero())?;
        }
    }
    Ok((out, kept))
}

/// Girth of the hop-count skeleton (`None` for forests). A pair of parallel
/// edges counts as a cycle of length 2.
pub fn girth<W: Scalar>(g: &WeightedGraph<W>) -> Option<usize> {
    let n = g.vertex_count();
    let mut best: Option<usize> = None;
    for root in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut via = vec![usize::MAX; n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            if best.is_some_and(|b| 2 * dist[u] + 1 >= b) {
                break;
            }
            for &(x, id) in g.neighbors(u) {
                if id == via[u] {
                    continue;
                }
                if dist[x] == usize::MAX {
                    dist[x] = dist[u] + 1;
                    via[x] = id;
                    queue.push_back(x);
                } else {
                    let len = dist[u] + dist[x] + 1;
                    if best.is_none_or(|b| len < b) {
                        best = Some(len);
                    }
                }
            }
        }
    }
    best
}

/// Connected components as a label per vertex (labels are the smallest
/// vertex id of each component).
pub fn components<W: Scalar>(g: &WeightedGraph<W>) -> Vec<VertexId> {
    let n = g.vertex_count();
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(x, _) in g.neighbors(u) {
                if label[x] == usize::MAX {
                    label[x] = s;
                    stack.push(x);
                }
            }
        }
    }
    label
}
