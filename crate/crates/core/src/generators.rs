//! Instance generators: the girth-based lower-bound family on catalog cages,
//! seeded random instances, and nested instances with well-separated classes.

use std::collections::{BTreeSet, VecDeque};

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{girth, Edge, EdgeId, VertexId, WeightedGraph};
use crate::instance::{Instance, TerminalPair};
use crate::scalar::{lg_plus, pow2, Scalar};

/// Greedy maximal matching over edges sorted by `(min endpoint, max endpoint)`.
/// Returns edge ids of `g`.
pub fn maximal_matching<W: Scalar>(g: &WeightedGraph<W>) -> Vec<EdgeId> {
    let mut order: Vec<EdgeId> = (0..g.edge_count()).collect();
    order.sort_by_key(|&i| (g.edge(i).key(), i));
    let mut matched = vec![false; g.vertex_count()];
    let mut out = Vec::new();
    for i in order {
        let e = g.edge(i);
        if !matched[e.u] && !matched[e.v] {
            matched[e.u] = true;
            matched[e.v] = true;
            out.push(i);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cage {
    Petersen,
    Heawood,
    McGee,
    TutteCoxeter,
}

impl Cage {
    pub const ALL: [Cage; 4] = [Cage::Petersen, Cage::Heawood, Cage::McGee, Cage::TutteCoxeter];

    pub fn name(self) -> &'static str {
        match self {
            Cage::Petersen => "petersen",
            Cage::Heawood => "heawood",
            Cage::McGee => "mcgee",
            Cage::TutteCoxeter => "tutte_coxeter",
        }
    }

    pub fn from_name(name: &str) -> Result<Cage> {
        Cage::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Input(format!("unknown cage {name:?}")))
    }

    pub fn girth(self) -> usize {
        match self {
            Cage::Petersen => 5,
            Cage::Heawood => 6,
            Cage::McGee => 7,
            Cage::TutteCoxeter => 8,
        }
    }

    /// Edge list of the cubic cage.
    pub fn edges(self) -> (usize, Vec<(VertexId, VertexId)>) {
        match self {
            Cage::Petersen => {
                let mut e = Vec::new();
                for i in 0..5 {
                    e.push((i, (i + 1) % 5));
                    e.push((i, i + 5));
                    e.push((5 + i, 5 + (i + 2) % 5));
                }
                (10, e)
            }
            Cage::Heawood => lcf(14, &[5, -5]),
            Cage::McGee => lcf(24, &[12, 7, -7]),
            Cage::TutteCoxeter => lcf(30, &[-13, -9, 7, -7, 9, 13]),
        }
    }
}

/// Hamiltonian cycle plus LCF chords.
fn lcf(n: usize, pattern: &[i64]) -> (usize, Vec<(VertexId, VertexId)>) {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut add = |a: usize, b: usize| {
        if seen.insert((a.min(b), a.max(b))) {
            out.push((a, b));
        }
    };
    for i in 0..n {
        add(i, (i + 1) % n);
    }
    for i in 0..n {
        let j = (i as i64 + pattern[i % pattern.len()]).rem_euclid(n as i64) as usize;
        add(i, j);
    }
    (n, out)
}

/// BFS spanning tree from vertex 0, neighbors visited in increasing id order.
/// Returns a flag per edge of `g`.
pub fn bfs_tree_edges<W: Scalar>(g: &WeightedGraph<W>) -> Vec<bool> {
    let mut in_tree = vec![false; g.edge_count()];
    if g.vertex_count() == 0 {
        return in_tree;
    }
    let mut seen = vec![false; g.vertex_count()];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        let mut nbrs = g.neighbors(u).to_vec();
        nbrs.sort();
        for (x, id) in nbrs {
            if !seen[x] {
                seen[x] = true;
                in_tree[id] = true;
                queue.push_back(x);
            }
        }
    }
    in_tree
}

/// Lower-bound instance on a cage of girth `g`: BFS-tree edges get weight 1,
/// every other edge `g/2`; the pairs are a maximal matching of the non-tree
/// edges. The schedule is empty.
pub fn gen_girth_lower_bound<W: Scalar>(cage: Cage) -> Instance<W> {
    let (n, list) = cage.edges();
    let skeleton = WeightedGraph::from_edges(n, list.iter().map(|&(u, v)| (u, v, W::one()))).unwrap();
    let g = girth(&skeleton).expect("cages have cycles");
    debug_assert_eq!(g, cage.girth());
    let in_tree = bfs_tree_edges(&skeleton);
    let long = W::from_frac(g as i64, 2);
    let graph = WeightedGraph::from_edges(
        n,
        list.iter()
            .enumerate()
            .map(|(i, &(u, v))| (u, v, if in_tree[i] { W::one() } else { long.clone() })),
    )
    .unwrap();
    let non_tree = WeightedGraph::from_edges(
        n,
        list.iter()
            .enumerate()
            .filter(|(i, _)| !in_tree[*i])
            .map(|(_, &(u, v))| (u, v, W::one())),
    )
    .unwrap();
    let pairs = maximal_matching(&non_tree)
        .into_iter()
        .map(|i| {
            let (a, b) = non_tree.edge(i).key();
            TerminalPair::new(a, b)
        })
        .collect();
    Instance::new(graph, pairs)
}

/// Connected random graph on `n` vertices with `m` distinct edges of integer
/// weight in `[1, 100]`, and `k` distinct unordered pairs. Deterministic in `seed`.
pub fn gen_random_instance<W: Scalar>(n: usize, m: usize, k: usize, seed: u64) -> Result<Instance<W>> {
    let max_edges = n * n.saturating_sub(1) / 2;
    if n < 2 {
        return Err(Error::Input("need at least 2 vertices".into()));
    }
    if m + 1 < n || m > max_edges {
        return Err(Error::Input(format!("edge count {m} infeasible for {n} vertices")));
    }
    if k == 0 || k > max_edges {
        return Err(Error::Input(format!("pair count {k} infeasible for {n} vertices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<VertexId> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut present = BTreeSet::new();
    let mut edges = Vec::with_capacity(m);
    for i in 1..n {
        let (a, b) = (order[i], order[rng.gen_range(0..i)]);
        present.insert((a.min(b), a.max(b)));
        edges.push((a, b));
    }
    while edges.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && present.insert((a.min(b), a.max(b))) {
            edges.push((a, b));
        }
    }
    let graph = WeightedGraph::from_edges(
        n,
        edges
            .into_iter()
            .map(|(a, b)| (a, b, W::from_u64(rng.gen_range(1..=100)))),
    )?;
    let mut chosen = BTreeSet::new();
    let mut pairs = Vec::with_capacity(k);
    while pairs.len() < k {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && chosen.insert((a.min(b), a.max(b))) {
            pairs.push(TerminalPair::new(a, b));
        }
    }
    Ok(Instance::new(graph, pairs))
}

/// Geometry of a nested instance with well-separated cost classes.
///
/// Class 1 pairs are disjoint edges of cost `c_1` whose `t` endpoints hang off
/// a hub at distance `2 c_1`. Every class `j+1` pair is planted below the `s`
/// endpoint of a random class-`j` host: a fresh edge of length `f · r_j`
/// leads to its `s`, and its `t` is a leaf at distance `c_{j+1}` from there.
/// Here `c_j = m / 2^{j·gap}` with `m = 2^{M·gap+1}` and `gap = δ+10` unless
/// overridden, and
/// `r_j = c_j / (8 lg⁺ k_j)`. Each pair's schedule is one edge joining its
/// endpoints with weight equal to its class cost.
#[derive(Debug, Clone)]
pub struct NestedLayout {
    pub per_class: Vec<usize>,
    pub delta: u64,
    /// Exponent step between consecutive classes; `None` means `δ + 10`.
    pub gap: Option<u64>,
    /// Planting offsets `f` as fractions of `r_j`, used cyclically per class.
    pub offsets: Vec<BigRational>,
    pub seed: u64,
}

pub const NESTED_VERTEX_BUDGET: usize = 100_000;

impl NestedLayout {
    pub fn uniform(classes: usize, per_class: usize, delta: u64, seed: u64) -> Self {
        NestedLayout {
            per_class: vec![per_class; classes],
            delta,
            gap: None,
            offsets: vec![BigRational::new(1.into(), 4.into())],
            seed,
        }
    }

    pub fn classes(&self) -> usize {
        self.per_class.len()
    }

    /// `c_j` for 1-based `j`.
    pub fn class_cost(&self, j: usize) -> BigRational {
        let step = self.gap.unwrap_or(self.delta + 10) as i64;
        pow2(self.classes() as i64 * step + 1 - j as i64 * step)
    }

    /// `r_j = c_j / (8 lg⁺ k_j)` for 1-based `j`.
    pub fn class_radius(&self, j: usize) -> BigRational {
        let k = self.per_class[j - 1] as u64;
        self.class_cost(j) / BigRational::from_integer((8 * lg_plus(k)).into())
    }

    pub fn build<W: Scalar>(&self) -> Result<Instance<W>> {
        let m = self.classes();
        if m == 0 || self.per_class.contains(&0) {
            return Err(Error::Input("need at least one class and one pair per class".into()));
        }
        if self.delta == 0 || self.gap == Some(0) {
            return Err(Error::Input("delta and gap must be at least 1".into()));
        }
        if self.offsets.is_empty() {
            return Err(Error::Input("at least one planting offset is required".into()));
        }
        let total: usize = self.per_class.iter().sum();
        if 2 * total + 1 > NESTED_VERTEX_BUDGET {
            return Err(Error::Input(format!(
                "{} vertices exceed the budget of {NESTED_VERTEX_BUDGET}",
                2 * total + 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut g = WeightedGraph::<W>::new(1);
        let hub = 0;
        let mut pairs = Vec::new();
        let mut schedule = Vec::new();
        let mut prev: Vec<TerminalPair> = Vec::new();
        for j in 1..=m {
            let c = W::from_rational(&self.class_cost(j));
            let mut cur = Vec::new();
            for i in 0..self.per_class[j - 1] {
                let s = g.add_vertex();
                let t = g.add_vertex();
                if j == 1 {
                    g.add_edge(t, hub, c.clone() + c.clone())?;
                } else {
                    let host = prev[rng.gen_range(0..prev.len())];
                    let f = &self.offsets[i % self.offsets.len()];
                    let off = self.class_radius(j - 1) * f;
                    g.add_edge(host.s, s, W::from_rational(&off))?;
                }
                g.add_edge(s, t, c.clone())?;
                let p = TerminalPair::new(s, t);
                cur.push(p);
                pairs.push(p);
                schedule.push(vec![Edge::new(s, t, c.clone())]);
            }
            prev = cur;
        }
        Ok(Instance { graph: g, pairs, schedule })
    }
}

/// Nested instance with `per_class` pairs in each of `classes` classes,
/// planted at a quarter of the host class radius.
pub fn gen_canonical_nested<W: Scalar>(classes: usize, per_class: usize, delta: u64, seed: u64) -> Result<Instance<W>> {
    NestedLayout::uniform(classes, per_class, delta, seed).build()
}
