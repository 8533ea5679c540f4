use std::collections::BTreeSet;

use num_traits::{One, Zero};
use osf::dual::certify_all_classes;
use osf::generators::gen_random_instance;
use osf::graph::{all_pairs, subdivide_edges, Edge, WeightedGraph};
use osf::greedy::{metric_at, run_greedy, ContractionRule};
use osf::instance::{Instance, TerminalPair};
use osf::opt::{dual_lower_bound_audit, steiner_forest_exact, OracleCaps};
use osf::scalar::Extended;
use osf::transforms::{augment_subdivided_solution, forest_potential, subdivide_pairs_rule3};
use osf::{ExactInstance, Graph, Weight};
use proptest::prelude::*;

fn q(n: i64) -> Weight {
    Weight::from_integer(n.into())
}

/// Plain Floyd–Warshall over the edge list.
fn floyd(g: &Graph) -> Vec<Vec<Option<Weight>>> {
    let n = g.vertex_count();
    let mut d: Vec<Vec<Option<Weight>>> = vec![vec![None; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = Some(Weight::zero());
    }
    for e in g.edges() {
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            if d[a][b].as_ref().is_none_or(|x| e.w < *x) {
                d[a][b] = Some(e.w.clone());
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (&d[i][k], &d[k][j]) {
                    let via = a + b;
                    if d[i][j].as_ref().is_none_or(|x| via < *x) {
                        d[i][j] = Some(via);
                    }
                }
            }
        }
    }
    d
}

/// Cheapest edge subset connecting every pair, by enumeration.
fn brute_forest(inst: &ExactInstance) -> Weight {
    let g = &inst.graph;
    let m = g.edge_count();
    assert!(m <= 14);
    let mut best: Option<Weight> = None;
    for mask in 0u32..(1 << m) {
        let mut root: Vec<usize> = (0..g.vertex_count()).collect();
        fn find(r: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while r[x] != x {
                r[x] = r[r[x]];
                x = r[x];
            }
            x
        }
        let mut w = Weight::zero();
        for (i, e) in g.edges().iter().enumerate() {
            if mask >> i & 1 == 1 {
                w += &e.w;
                let (a, b) = (find(&mut root, e.u), find(&mut root, e.v));
                root[a] = b;
            }
        }
        if best.as_ref().is_some_and(|b| w >= *b) {
            continue;
        }
        if inst.pairs.iter().all(|p| find(&mut root, p.s) == find(&mut root, p.t)) {
            best = Some(w);
        }
    }
    best.expect("connected instance")
}

fn random_graph() -> impl Strategy<Value = Graph> {
    (2usize..8).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 0i64..12), 1..16).prop_map(move |es| {
            let mut g = WeightedGraph::new(n);
            for (u, v, w) in es {
                if u != v {
                    g.add_edge(u, v, q(w)).unwrap();
                }
            }
            g
        })
    })
}

/// `(n, m, k, seed)` accepted by the random generator.
fn random_instance(max_edges: usize) -> impl Strategy<Value = ExactInstance> {
    (4usize..8)
        .prop_flat_map(move |n| {
            let hi = (n * (n - 1) / 2).min(max_edges);
            (Just(n), (n - 1)..=hi, 1usize..5, any::<u64>())
        })
        .prop_map(|(n, m, k, seed)| gen_random_instance(n, m, k, seed).unwrap())
}

fn any_rule() -> impl Strategy<Value = ContractionRule> {
    prop::sample::select(ContractionRule::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dijkstra_matches_floyd(g in random_graph()) {
        prop_assert_eq!(all_pairs(&g), floyd(&g));
    }

    #[test]
    fn distances_satisfy_triangle_inequality(g in random_graph()) {
        let d = all_pairs(&g);
        let n = g.vertex_count();
        for i in 0..n {
            prop_assert_eq!(&d[i][i], &Some(Weight::zero()));
            for j in 0..n {
                prop_assert_eq!(&d[i][j], &d[j][i]);
                for k in 0..n {
                    if let (Some(a), Some(b)) = (&d[i][k], &d[k][j]) {
                        prop_assert!(d[i][j].as_ref().is_some_and(|x| *x <= a + b));
                    }
                }
            }
        }
    }

    #[test]
    fn subdivision_keeps_original_distances(g in random_graph()) {
        let (h, map) = subdivide_edges(&g, &Weight::one()).unwrap();
        let (dg, dh) = (all_pairs(&g), all_pairs(&h));
        for u in 0..g.vertex_count() {
            for v in 0..g.vertex_count() {
                prop_assert_eq!(&dg[u][v], &dh[map[u]][map[v]]);
            }
        }
    }

    #[test]
    fn greedy_pays_current_distance(inst in random_instance(12), rule in any_rule()) {
        let trace = run_greedy(&inst, rule).unwrap();
        let mut total = Weight::zero();
        for (i, step) in trace.steps.iter().enumerate() {
            let p = inst.pairs[i];
            let d = floyd(&metric_at(&inst, &trace, i).unwrap());
            prop_assert_eq!(d[p.s][p.t].as_ref(), Some(&step.cost));
            prop_assert_eq!(step.path.first(), Some(&p.s));
            prop_assert_eq!(step.path.last(), Some(&p.t));
            let dg = floyd(&inst.graph)[p.s][p.t].clone().unwrap();
            let expect = if step.cost.is_zero() { Extended::Infinite } else { Extended::Finite(&dg / &step.cost) };
            prop_assert_eq!(&step.contraction, &expect);
            total += &step.cost;
        }
        prop_assert_eq!(total, trace.total);
    }

    #[test]
    fn shortcuts_only_shrink_the_metric(inst in random_instance(12), rule in any_rule()) {
        let trace = run_greedy(&inst, rule).unwrap();
        for i in 1..trace.steps.len() {
            let (before, after) = (floyd(&metric_at(&inst, &trace, i - 1).unwrap()), floyd(&metric_at(&inst, &trace, i).unwrap()));
            for (rb, ra) in before.iter().zip(&after) {
                for (b, a) in rb.iter().zip(ra) {
                    let shrank = match (b, a) {
                        (Some(b), Some(a)) => a <= b,
                        (None, _) => true,
                        (Some(_), None) => false,
                    };
                    prop_assert!(shrank);
                }
            }
        }
    }

    #[test]
    fn forest_oracle_matches_enumeration(inst in random_instance(11)) {
        let opt = steiner_forest_exact(&inst, OracleCaps::default()).unwrap();
        prop_assert_eq!(&opt.weight, &brute_forest(&inst));
        prop_assert_eq!(inst.graph.weight_of(&opt.edges), opt.weight.clone());
    }

    #[test]
    fn potential_is_sandwiched(inst in random_instance(14)) {
        let opt = steiner_forest_exact(&inst, OracleCaps::default()).unwrap();
        let phi = forest_potential(&opt.edges, &inst).unwrap();
        prop_assert!(opt.weight <= phi);
        prop_assert!(phi <= q(2) * &opt.weight);
    }

    #[test]
    fn rule3_subdivision_is_exact(inst in random_instance(14)) {
        let trace = run_greedy(&inst, ContractionRule::Rule3).unwrap();
        let (sub, receipt) = subdivide_pairs_rule3(&inst, &trace).unwrap();
        let sub_trace = run_greedy(&sub, ContractionRule::Rule3).unwrap();
        prop_assert_eq!(&sub_trace.total, &trace.total);
        for s in &sub_trace.steps {
            prop_assert!(s.cost.is_zero() || s.contraction == Extended::Finite(Weight::one()));
        }
        let k = inst.pair_count();
        prop_assert!(sub.pair_count() <= 2 * k * k);
        let terms = |i: &ExactInstance| i.terminals().into_iter().collect::<BTreeSet<_>>();
        prop_assert_eq!(terms(&sub), terms(&inst));
        prop_assert_eq!(receipt.parent_sums(k), trace.costs());
    }

    #[test]
    fn class_duals_bound_opt(inst in random_instance(14), rule in any_rule()) {
        let trace = run_greedy(&inst, rule).unwrap();
        let opt = steiner_forest_exact(&inst, OracleCaps::default()).unwrap();
        for cert in certify_all_classes(&trace, &inst).unwrap() {
            let audit = dual_lower_bound_audit(&cert.collection.dual_balls(), &inst, &opt.weight);
            prop_assert!(audit.premises_hold(), "{:?}", audit.offending);
            prop_assert_eq!(audit.bound_holds, Some(true));
        }
    }
}

/// The second pair reaches the first pair's tree over a schedule edge the
/// optimum cannot use, so the optimum keeps the two pairs apart and the
/// augmentation has to join them.
#[test]
fn augmentation_joins_split_subpairs() {
    let (a, b, c, d) = (0, 1, 2, 3);
    let g = WeightedGraph::from_edges(4, [(a, b, q(19)), (c, a, q(10)), (b, d, q(10)), (c, d, q(18))]).unwrap();
    let mut inst = Instance::new(g, vec![TerminalPair::new(a, b), TerminalPair::new(c, d)]);
    inst.schedule[1].push(Edge::new(c, a, q(5)));
    let trace = run_greedy(&inst, ContractionRule::Rule3).unwrap();
    assert_eq!(trace.costs(), vec![q(19), q(15)]);
    assert_eq!(trace.steps[1].path, vec![c, a, b, d]);
    let (sub, receipt) = subdivide_pairs_rule3(&inst, &trace).unwrap();
    assert_eq!(sub.pairs, vec![TerminalPair::new(a, b), TerminalPair::new(c, a), TerminalPair::new(b, d)]);
    let opt = steiner_forest_exact(&inst, OracleCaps::default()).unwrap();
    assert_eq!(opt.weight, q(37));
    assert_eq!(opt.components.len(), 2);
    let (forest, ar) = augment_subdivided_solution(&opt, &inst, &trace, &sub, &receipt.parent).unwrap();
    assert!(ar.feasible && ar.phi_non_increasing);
    assert_eq!(ar.steps.iter().map(|s| s.added.len()).sum::<usize>(), 1);
    assert_eq!(inst.graph.weight_of(&forest), q(47));
    assert!(inst.graph.weight_of(&forest) <= q(2) * &opt.weight);
}
