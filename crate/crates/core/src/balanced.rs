//! Balanced dual solutions: the class-by-class construction with ball
//! deletion, halving and growth, its verifier, and the induction audit.
//!
//! Cost classes are the distinct nonzero traced costs, ranked from the most
//! expensive (`j = 1`) down. Zero-cost pairs sit outside every class and are
//! charged from the start. Every logarithm is [`lg_plus`].

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dual::{build_class_duals, class_radius};
use crate::error::{precondition, Error, Result};
use crate::graph::{distances_from, VertexId};
use crate::greedy::RunTrace;
use crate::instance::Instance;
use crate::opt::{opt_measure_in_ball, SteinerSolution};
use crate::scalar::{exp_bounds, format_scalar, lg_plus, lg_plus_rational, parse_scalar, Scalar};
use crate::transforms::is_canonical;

/// Fixed-point precision for the certified exponential bounds.
const EXP_PRECISION: u32 = 96;

/// `100 (lg⁺α + lg⁺lg⁺K)`.
pub fn min_delta<W: Scalar>(alpha: &W, k_bound: u64) -> u64 {
    100 * (lg_plus_rational(&alpha.to_rational()) + lg_plus(lg_plus(k_bound)))
}

/// Distinct nonzero costs, most expensive first.
#[derive(Debug, Clone, PartialEq)]
pub struct CostClasses<W> {
    pub costs: Vec<W>,
    pub members: Vec<Vec<usize>>,
    /// 1-based class rank of each pair; `None` for zero-cost pairs.
    pub rank: Vec<Option<usize>>,
}

impl<W: Scalar> CostClasses<W> {
    pub fn from_trace(trace: &RunTrace<W>) -> Self {
        let mut costs: Vec<W> = Vec::new();
        for s in &trace.steps {
            if !s.cost.is_zero() && !costs.contains(&s.cost) {
                costs.push(s.cost.clone());
            }
        }
        costs.sort_by(|a, b| b.partial_cmp(a).expect("costs are comparable"));
        let rank: Vec<Option<usize>> = trace
            .steps
            .iter()
            .map(|s| costs.iter().position(|c| *c == s.cost).map(|i| i + 1))
            .collect();
        let mut members = vec![Vec::new(); costs.len()];
        for (i, r) in rank.iter().enumerate() {
            if let Some(r) = r {
                members[r - 1].push(i);
            }
        }
        CostClasses { costs, members, rank }
    }

    pub fn count(&self) -> usize {
        self.costs.len()
    }

    /// `c_j` for 1-based `j`.
    pub fn cost(&self, j: usize) -> &W {
        &self.costs[j - 1]
    }

    /// `r_j = c_j / (8 lg⁺ k_j)` with `k_j = |P⁽ʲ⁾|`.
    pub fn radius(&self, j: usize) -> W {
        class_radius(self.cost(j), self.members[j - 1].len())
    }
}

/// Threshold constants of the construction, all derived from `L = lg⁺K`
/// by [`Thresholds::standard`].
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds<W> {
    pub l: u64,
    /// A ball is deleted when its interior charged cost exceeds `case1 · ch(p) · c_j`.
    pub case1: W,
    /// The halved ball absorbs its pairs when their charged cost is at most `case2a · ch(p) · c_j`.
    pub case2a: W,
    /// Growth stops once `cost(∂B) ≤ stop · cost(B̊)`.
    pub stop: W,
    /// Membership slack `ε`: `B_P` reaches `r(1 + ε)`, the border starts at `r(1 − ε)`.
    pub slack: W,
    /// Growth increment as a fraction of `r_j`.
    pub growth: W,
    /// Growth must stop strictly before this many increments.
    pub max_steps: u64,
}

impl<W: Scalar> Thresholds<W> {
    /// `case1 = 10 L¹⁰`, `case2a = 10`, `stop = 10/L`,
    /// `slack = growth = 1/(200 L²)`, `max_steps = 60 L lg⁺L`.
    pub fn standard(k_bound: u64) -> Self {
        let l = lg_plus(k_bound);
        let lw = W::from_u64(l);
        let mut l10 = W::one();
        for _ in 0..10 {
            l10 = l10 * lw.clone();
        }
        let eps = W::one() / W::from_u64(200 * l * l);
        Thresholds {
            l,
            case1: W::from_u64(10) * l10,
            case2a: W::from_u64(10),
            stop: W::from_u64(10) / lw,
            slack: eps.clone(),
            growth: eps,
            max_steps: 60 * l * lg_plus(l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStatus {
    Unclassified,
    Surviving,
    Charged,
    Dangerous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallOutcome {
    /// Halved and absorbed its neighborhood.
    Absorbed,
    /// Grown from half radius; its neighborhood became dangerous.
    Grown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedBall<W> {
    /// 1-based class rank.
    pub class: usize,
    pub center: VertexId,
    pub radius: W,
    pub pair: usize,
    pub outcome: BallOutcome,
    /// Number of growth increments for a grown ball.
    pub growth_steps: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    /// Zero-cost pairs set aside.
    Residual,
    /// Ball-less pairs of a class handing their charge to the balled ones.
    Redistribute,
    /// Ball deleted, its owner's charge spread over the interior.
    Delete,
    /// Halved ball absorbing its neighborhood.
    Absorb,
    /// Grown ball marking its neighborhood dangerous.
    Grow,
}

/// One entry of the charge log: the new charge of every pair touched.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeStep<W> {
    pub class: usize,
    pub kind: StepKind,
    pub owner: Option<usize>,
    pub changes: Vec<(usize, W)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedDual<W> {
    pub k_bound: u64,
    pub thresholds: Thresholds<W>,
    pub balls: Vec<BalancedBall<W>>,
    /// `(class, pair, center)` of every deleted ball.
    pub deleted: Vec<(usize, usize, VertexId)>,
    pub charges: Vec<W>,
    pub statuses: Vec<PairStatus>,
    pub dangerous: BTreeSet<usize>,
    pub log: Vec<ChargeStep<W>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BallNeighborhood {
    /// `B_P`: pairs of later classes with an endpoint within `r(1 + ε)`.
    pub members: Vec<usize>,
    /// `∂B_P`: members with an endpoint at distance `≥ r(1 − ε)`.
    pub border: Vec<usize>,
    /// `B̊_P = B_P ∖ ∂B_P`.
    pub interior: Vec<usize>,
}

/// Neighborhood of the ball of class `class` and radius `radius` at
/// `center`, with distances in the input graph.
pub fn ball_neighborhood<W: Scalar>(
    inst: &Instance<W>,
    classes: &CostClasses<W>,
    center: VertexId,
    radius: &W,
    class: usize,
    slack: &W,
) -> Result<BallNeighborhood> {
    inst.graph.check_vertex(center)?;
    let dist = distances_from(&inst.graph, center);
    Ok(neighborhood_from(&dist, inst, classes, radius, class, slack))
}

fn neighborhood_from<W: Scalar>(
    dist: &[Option<W>],
    inst: &Instance<W>,
    classes: &CostClasses<W>,
    radius: &W,
    class: usize,
    slack: &W,
) -> BallNeighborhood {
    let outer = radius.clone() * (W::one() + slack.clone());
    let inner = radius.clone() * (W::one() - slack.clone());
    let mut nb = BallNeighborhood::default();
    for (i, p) in inst.pairs.iter().enumerate() {
        if !classes.rank[i].is_some_and(|r| r > class) {
            continue;
        }
        let (ds, dt) = (&dist[p.s], &dist[p.t]);
        let near = |d: &Option<W>| d.as_ref().is_some_and(|d| *d <= outer);
        if !(near(ds) || near(dt)) {
            continue;
        }
        nb.members.push(i);
        let far = |d: &Option<W>| d.as_ref().is_none_or(|d| *d >= inner);
        if far(ds) || far(dt) {
            nb.border.push(i);
        } else {
            nb.interior.push(i);
        }
    }
    nb
}

/// `Σ_{p ∈ S} ch(p) · cost(p)`.
pub fn charged_cost<W: Scalar>(trace: &RunTrace<W>, set: &[usize], ch: &[W]) -> W {
    set.iter()
        .fold(W::zero(), |acc, &i| acc + ch[i].clone() * trace.cost(i).clone())
}

#[derive(Debug, Clone)]
pub struct BuildOptions<W> {
    /// `None` selects [`Thresholds::standard`].
    pub thresholds: Option<Thresholds<W>>,
    /// Check canonicity, the lower bound on `delta` and `M ≤ lg⁺K`.
    pub check_preconditions: bool,
}

impl<W> Default for BuildOptions<W> {
    fn default() -> Self {
        BuildOptions { thresholds: None, check_preconditions: true }
    }
}

struct Builder<'a, W> {
    trace: &'a RunTrace<W>,
    ch: Vec<W>,
    status: Vec<PairStatus>,
    log: Vec<ChargeStep<W>>,
}

impl<W: Scalar> Builder<'_, W> {
    fn set(&mut self, changes: &mut Vec<(usize, W)>, i: usize, v: W) {
        self.ch[i] = v.clone();
        changes.push((i, v));
    }

    fn live(&self, set: &[usize]) -> Vec<usize> {
        set.iter()
            .copied()
            .filter(|&q| self.status[q] == PairStatus::Unclassified && !self.ch[q].is_zero())
            .collect()
    }

    fn charged(&self, set: &[usize]) -> W {
        charged_cost(self.trace, set, &self.ch)
    }
}

pub fn build_balanced<W: Scalar>(
    trace: &RunTrace<W>,
    inst: &Instance<W>,
    k_bound: u64,
    delta: u64,
    alpha: &W,
    opts: &BuildOptions<W>,
) -> Result<BalancedDual<W>> {
    let k = inst.pairs.len();
    if trace.steps.len() != k {
        return Err(Error::Input(format!("trace has {} steps for {k} pairs", trace.steps.len())));
    }
    if k as u64 > k_bound {
        return precondition(format!("k = {k} exceeds K = {k_bound}"));
    }
    let classes = CostClasses::from_trace(trace);
    let th = opts.thresholds.clone().unwrap_or_else(|| Thresholds::standard(k_bound));
    if opts.check_preconditions {
        let rep = is_canonical(inst, trace, alpha, delta);
        if let Some((name, _)) = rep.clauses().into_iter().find(|(_, ok)| !ok) {
            return precondition(format!("instance is not canonical: clause {name} fails ({})", rep.witnesses.join("; ")));
        }
        let need = min_delta(alpha, k_bound);
        if delta < need {
            return precondition(format!("delta = {delta} is below 100(lg⁺α + lg⁺lg⁺K) = {need}"));
        }
        if classes.count() as u64 > lg_plus(k_bound) {
            return precondition(format!("{} cost classes exceed lg⁺K = {}", classes.count(), lg_plus(k_bound)));
        }
    }

    let mut b = Builder { trace, ch: vec![W::one(); k], status: vec![PairStatus::Unclassified; k], log: Vec::new() };
    let mut balls = Vec::new();
    let mut deleted = Vec::new();
    let mut dangerous = BTreeSet::new();

    let zero_cost: Vec<usize> = (0..k).filter(|&i| classes.rank[i].is_none()).collect();
    if !zero_cost.is_empty() {
        let mut changes = Vec::new();
        for &i in &zero_cost {
            b.status[i] = PairStatus::Charged;
            b.set(&mut changes, i, W::zero());
        }
        b.log.push(ChargeStep { class: 0, kind: StepKind::Residual, owner: None, changes });
    }

    for j in 1..=classes.count() {
        let cj = classes.cost(j).clone();
        let class_pairs = &classes.members[j - 1];
        let open: Vec<usize> = class_pairs
            .iter()
            .copied()
            .filter(|&i| b.status[i] == PairStatus::Unclassified)
            .collect();
        if open.is_empty() {
            continue;
        }
        let rj = classes.radius(j);
        let (coll, _) = build_class_duals(trace, inst, class_pairs, &open, &rj)?;

        if !coll.skipped.is_empty() {
            let moved = coll.skipped.iter().fold(W::zero(), |a, &q| a + b.ch[q].clone());
            let share = moved / W::from_u64(coll.balls.len() as u64);
            let mut changes = Vec::new();
            for &q in &coll.skipped {
                b.status[q] = PairStatus::Charged;
                b.set(&mut changes, q, W::zero());
            }
            for ball in &coll.balls {
                let v = b.ch[ball.pair].clone() + share.clone();
                b.set(&mut changes, ball.pair, v);
            }
            b.log.push(ChargeStep { class: j, kind: StepKind::Redistribute, owner: None, changes });
        }

        for ball in &coll.balls {
            let p = ball.pair;
            let dist = distances_from(&inst.graph, ball.center);
            let nb = neighborhood_from(&dist, inst, &classes, &rj, j, &th.slack);
            let own = b.ch[p].clone() * cj.clone();
            let sigma = b.charged(&nb.interior);
            if sigma > th.case1.clone() * own.clone() {
                let targets = b.live(&nb.interior);
                let base = b.charged(&targets);
                if base.is_zero() {
                    return Err(Error::Internal(format!(
                        "ball of pair {p} is deleted but its interior carries no unclassified charge"
                    )));
                }
                let factor = W::one() + own / base;
                let mut changes = Vec::new();
                for q in targets {
                    let v = b.ch[q].clone() * factor.clone();
                    b.set(&mut changes, q, v);
                }
                b.set(&mut changes, p, W::zero());
                b.status[p] = PairStatus::Charged;
                b.log.push(ChargeStep { class: j, kind: StepKind::Delete, owner: Some(p), changes });
                deleted.push((j, p, ball.center));
                continue;
            }
            let half = rj.clone() / W::from_u64(2);
            let nb0 = neighborhood_from(&dist, inst, &classes, &half, j, &th.slack);
            let sigma0 = b.charged(&nb0.members);
            b.status[p] = PairStatus::Surviving;
            if sigma0 <= th.case2a.clone() * own {
                let targets = b.live(&nb0.members);
                let gained = b.charged(&targets) / cj.clone();
                let mut changes = Vec::new();
                for &q in &targets {
                    b.status[q] = PairStatus::Charged;
                    b.set(&mut changes, q, W::zero());
                }
                let v = b.ch[p].clone() + gained;
                b.set(&mut changes, p, v);
                b.log.push(ChargeStep { class: j, kind: StepKind::Absorb, owner: Some(p), changes });
                balls.push(BalancedBall {
                    class: j,
                    center: ball.center,
                    radius: half,
                    pair: p,
                    outcome: BallOutcome::Absorbed,
                    growth_steps: None,
                });
                continue;
            }
            let step = rj.clone() * th.growth.clone();
            let mut t = 0u64;
            let mut r = half;
            let nb_t = loop {
                if r >= rj {
                    return Err(Error::Internal(format!(
                        "growth around pair {p} (class {j}) reached r_j after {t} increments without meeting the stopping rule"
                    )));
                }
                let nb_t = neighborhood_from(&dist, inst, &classes, &r, j, &th.slack);
                if b.charged(&nb_t.border) <= th.stop.clone() * b.charged(&nb_t.interior) {
                    break nb_t;
                }
                t += 1;
                r = r + step.clone();
            };
            for q in b.live(&nb_t.members) {
                b.status[q] = PairStatus::Dangerous;
                dangerous.insert(q);
            }
            b.log.push(ChargeStep { class: j, kind: StepKind::Grow, owner: Some(p), changes: Vec::new() });
            balls.push(BalancedBall {
                class: j,
                center: ball.center,
                radius: r,
                pair: p,
                outcome: BallOutcome::Grown,
                growth_steps: Some(t),
            });
        }
    }

    if let Some(i) = b.status.iter().position(|s| *s == PairStatus::Unclassified) {
        return Err(Error::Internal(format!("pair {i} left unclassified")));
    }
    Ok(BalancedDual { k_bound, thresholds: th, balls, deleted, charges: b.ch, statuses: b.status, dangerous, log: b.log })
}

/// Pairs of `B̊_P ∩ D` for ball `index`, in arrival order.
pub fn interior_dangerous<W: Scalar>(
    bd: &BalancedDual<W>,
    trace: &RunTrace<W>,
    inst: &Instance<W>,
    index: usize,
) -> Result<Vec<usize>> {
    let ball = bd.balls.get(index).ok_or_else(|| Error::Input(format!("no ball {index}")))?;
    let classes = CostClasses::from_trace(trace);
    let nb = ball_neighborhood(inst, &classes, ball.center, &ball.radius, ball.class, &bd.thresholds.slack)?;
    Ok(nb.interior.into_iter().filter(|q| bd.dangerous.contains(q)).collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BalancedReport {
    /// (a) balls pairwise disjoint.
    pub disjoint: bool,
    /// (a) `D ⊆ ∪ B_P`.
    pub dangerous_covered: bool,
    /// (b) `r_j/2 ≤ r ≤ r_j`.
    pub radii: bool,
    /// (c) interior dangerous cost at most `case1 · ch(p(B)) · c_j`.
    pub interior_cap: bool,
    /// (d) border dangerous cost at most `stop` times the interior one.
    pub border_ratio: bool,
    /// (e) charge caps.
    pub charge_caps: bool,
    /// Every pair classified, statuses consistent with balls and `D`.
    pub complete: bool,
    /// Replaying the log keeps the total charged cost equal to the traced total
    /// and ends at the recorded charges.
    pub conservation: bool,
    /// Every grown ball stopped before `max_steps` increments.
    pub growth_bound: bool,
    /// Deletions raise each pair's charge at most once per class.
    pub single_recharge: bool,
    /// Surviving pairs whose charge fell between the certified bounds on `55e⁵`.
    pub inconclusive: Vec<usize>,
    pub offending: Vec<String>,
}

impl BalancedReport {
    pub fn clauses(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("a_disjoint", self.disjoint),
            ("a_dangerous_covered", self.dangerous_covered),
            ("b_radii", self.radii),
            ("c_interior_cap", self.interior_cap),
            ("d_border_ratio", self.border_ratio),
            ("e_charge_caps", self.charge_caps),
            ("complete", self.complete),
            ("conservation", self.conservation),
            ("growth_bound", self.growth_bound),
            ("single_recharge", self.single_recharge),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.clauses().iter().all(|(_, ok)| *ok)
    }
}

/// Re-derives every clause from the trace and the instance, trusting only
/// the balls, charges, statuses, dangerous set, thresholds and log of `bd`.
pub fn verify_balanced<W: Scalar>(bd: &BalancedDual<W>, trace: &RunTrace<W>, inst: &Instance<W>) -> BalancedReport {
    let mut rep = BalancedReport::default();
    let k = inst.pairs.len();
    let n = inst.graph.vertex_count();
    let th = &bd.thresholds;
    let classes = CostClasses::from_trace(trace);
    if bd.charges.len() != k || bd.statuses.len() != k || trace.steps.len() != k {
        rep.offending.push("charge or status vector length differs from the pair count".into());
        return rep;
    }
    if let Some(b) = bd.balls.iter().find(|b| b.center >= n || b.class == 0 || b.class > classes.count()) {
        rep.offending.push(format!("ball of pair {} has an invalid center or class", b.pair));
        return rep;
    }
    let ch: Vec<BigRational> = bd.charges.iter().map(|c| c.to_rational()).collect();
    let dist: Vec<Vec<Option<W>>> = bd.balls.iter().map(|b| distances_from(&inst.graph, b.center)).collect();
    let hoods: Vec<BallNeighborhood> = bd
        .balls
        .iter()
        .zip(&dist)
        .map(|(b, d)| neighborhood_from(d, inst, &classes, &b.radius, b.class, &th.slack))
        .collect();

    rep.disjoint = true;
    for a in 0..bd.balls.len() {
        for c in a + 1..bd.balls.len() {
            let gap = bd.balls[a].radius.clone() + bd.balls[c].radius.clone();
            if dist[a][bd.balls[c].center].as_ref().is_some_and(|d| *d < gap) {
                rep.disjoint = false;
                rep.offending.push(format!("balls of pairs {} and {} overlap", bd.balls[a].pair, bd.balls[c].pair));
            }
        }
    }

    rep.dangerous_covered = true;
    for &q in &bd.dangerous {
        if !hoods.iter().any(|h| h.members.contains(&q)) {
            rep.dangerous_covered = false;
            rep.offending.push(format!("dangerous pair {q} lies in no ball neighborhood"));
        }
    }

    rep.radii = true;
    for b in &bd.balls {
        let rj = classes.radius(b.class);
        if b.radius > rj || b.radius.clone() + b.radius.clone() < rj {
            rep.radii = false;
            rep.offending.push(format!("ball of pair {}: radius {} outside [r_j/2, r_j]", b.pair, format_scalar(&b.radius)));
        }
    }

    rep.interior_cap = true;
    rep.border_ratio = true;
    for (b, h) in bd.balls.iter().zip(&hoods) {
        let inner: Vec<usize> = h.interior.iter().copied().filter(|q| bd.dangerous.contains(q)).collect();
        let edge: Vec<usize> = h.border.iter().copied().filter(|q| bd.dangerous.contains(q)).collect();
        let inner_cost = charged_cost(trace, &inner, &bd.charges);
        let cap = th.case1.clone() * bd.charges[b.pair].clone() * classes.cost(b.class).clone();
        if inner_cost > cap {
            rep.interior_cap = false;
            rep.offending.push(format!("ball of pair {}: interior dangerous cost over the cap", b.pair));
        }
        if charged_cost(trace, &edge, &bd.charges) > th.stop.clone() * inner_cost {
            rep.border_ratio = false;
            rep.offending.push(format!("ball of pair {}: border dangerous cost too large", b.pair));
        }
    }

    rep.charge_caps = true;
    let (e5_lo, e5_hi) = exp_bounds(&BigRational::from_integer(5.into()), EXP_PRECISION);
    let k55 = BigRational::from_integer(55.into());
    let (cap_lo, cap_hi) = (&k55 * e5_lo, &k55 * e5_hi);
    let one = BigRational::one();
    let growth_base = one.clone() + BigRational::new(5.into(), BigInt::from(th.l));
    for i in 0..k {
        let c = &ch[i];
        let bad = match bd.statuses[i] {
            PairStatus::Surviving => {
                if *c > cap_hi {
                    true
                } else {
                    if *c > cap_lo {
                        rep.inconclusive.push(i);
                    }
                    *c < one
                }
            }
            PairStatus::Charged => !c.is_zero(),
            PairStatus::Dangerous => {
                let j = bd
                    .balls
                    .iter()
                    .zip(&hoods)
                    .filter(|(_, h)| h.members.contains(&i))
                    .map(|(b, _)| b.class)
                    .min();
                let cap = j.map(|j| num_traits::pow(growth_base.clone(), j - 1));
                *c < one || cap.is_some_and(|cap| *c > cap)
            }
            PairStatus::Unclassified => false,
        };
        if bad {
            rep.charge_caps = false;
            rep.offending.push(format!("pair {i} ({:?}) has charge {} outside its cap", bd.statuses[i], c));
        }
    }

    rep.complete = true;
    for i in 0..k {
        let owned: Vec<&BalancedBall<W>> = bd.balls.iter().filter(|b| b.pair == i).collect();
        let ok = match bd.statuses[i] {
            PairStatus::Unclassified => false,
            PairStatus::Surviving => owned.len() == 1 && inst.pairs[i].contains(owned[0].center),
            PairStatus::Dangerous => owned.is_empty() && bd.dangerous.contains(&i),
            PairStatus::Charged => owned.is_empty(),
        };
        let class_ok = owned.iter().all(|b| classes.rank[i] == Some(b.class));
        if !ok || !class_ok || (bd.statuses[i] != PairStatus::Dangerous && bd.dangerous.contains(&i)) {
            rep.complete = false;
            rep.offending.push(format!("pair {i}: status {:?} inconsistent with balls or D", bd.statuses[i]));
        }
    }

    rep.conservation = true;
    let costs: Vec<BigRational> = trace.steps.iter().map(|s| s.cost.to_rational()).collect();
    let mut replay = vec![one.clone(); k];
    let total = |r: &[BigRational]| -> BigRational { r.iter().zip(&costs).map(|(a, b)| a * b).sum() };
    let start = total(&replay);
    if start != trace.total.to_rational() {
        rep.conservation = false;
        rep.offending.push("initial charged cost differs from the traced total".into());
    }
    let mut recharged: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    rep.single_recharge = true;
    for (s, step) in bd.log.iter().enumerate() {
        for (i, v) in &step.changes {
            if *i >= k {
                rep.conservation = false;
                rep.offending.push(format!("log step {s} touches pair {i}"));
                continue;
            }
            let v = v.to_rational();
            if step.kind == StepKind::Delete && Some(*i) != step.owner && v > replay[*i]
                && !recharged.entry(step.class).or_default().insert(*i) {
                    rep.single_recharge = false;
                    rep.offending.push(format!("pair {i} recharged twice in class {}", step.class));
                }
            replay[*i] = v;
        }
        if total(&replay) != start {
            rep.conservation = false;
            rep.offending.push(format!("log step {s} ({:?}) changes the total charged cost", step.kind));
        }
    }
    if replay != ch {
        rep.conservation = false;
        rep.offending.push("replayed charges differ from the recorded ones".into());
    }

    rep.growth_bound = true;
    for b in &bd.balls {
        if let Some(t) = b.growth_steps {
            if t >= th.max_steps {
                rep.growth_bound = false;
                rep.offending.push(format!("ball of pair {} grew {t} times", b.pair));
            }
        }
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditVerdict {
    Holds,
    Fails,
    /// Neither certified bound decides; counted as holding.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InductionAudit {
    pub lhs: BigRational,
    /// `(j, k_j, w(OPT ∩ 𝓑⁽ʲ⁾))` per class.
    pub per_class: Vec<(usize, usize, BigRational)>,
    /// Certified bounds on the right-hand side.
    pub rhs_lower: BigRational,
    pub rhs_upper: BigRational,
    pub verdict: AuditVerdict,
}

impl InductionAudit {
    pub fn holds(&self) -> bool {
        self.verdict != AuditVerdict::Fails
    }
}

/// Checks `cost ≤ 880 e⁵ Σ_j lg⁺(k_j) w_j + e^{200 + 20M/L} Σ_j δ (M − j) w_j`
/// with `w_j` the length of `opt` inside the balls of class `j`.
pub fn induction_bound_audit<W: Scalar>(
    bd: &BalancedDual<W>,
    opt: &SteinerSolution<W>,
    inst: &Instance<W>,
    trace: &RunTrace<W>,
    delta: u64,
) -> Result<InductionAudit> {
    let classes = CostClasses::from_trace(trace);
    let m = classes.count();
    let mut per_class = Vec::with_capacity(m);
    let mut first = BigRational::zero();
    let mut second = BigRational::zero();
    for j in 1..=m {
        let mut w = BigRational::zero();
        for b in bd.balls.iter().filter(|b| b.class == j) {
            w += opt_measure_in_ball(&opt.edges, &inst.graph, b.center, &b.radius)?.to_rational();
        }
        let kj = classes.members[j - 1].len();
        first += BigRational::from_integer(lg_plus(kj as u64).into()) * &w;
        second += BigRational::from_integer((delta * (m - j) as u64).into()) * &w;
        per_class.push((j, kj, w));
    }
    let l = lg_plus(bd.k_bound);
    let (e5_lo, e5_hi) = exp_bounds(&BigRational::from_integer(5.into()), EXP_PRECISION);
    let x = BigRational::from_integer(200.into()) + BigRational::new((20 * m).into(), l.into());
    let (big_lo, big_hi) = exp_bounds(&x, EXP_PRECISION);
    let k880 = BigRational::from_integer(880.into());
    let rhs_lower = &k880 * e5_lo * &first + big_lo * &second;
    let rhs_upper = &k880 * e5_hi * &first + big_hi * &second;
    let lhs = trace.total.to_rational();
    let verdict = if lhs <= rhs_lower {
        AuditVerdict::Holds
    } else if lhs > rhs_upper {
        AuditVerdict::Fails
    } else {
        AuditVerdict::Inconclusive
    };
    Ok(InductionAudit { lhs, per_class, rhs_lower, rhs_upper, verdict })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BalancedFile {
    k_bound: u64,
    thresholds: ThresholdFile,
    balls: Vec<BallRecord>,
    deleted: Vec<(usize, usize, VertexId)>,
    charges: Vec<String>,
    statuses: Vec<PairStatus>,
    dangerous: Vec<usize>,
    log: Vec<StepRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdFile {
    l: u64,
    case1: String,
    case2a: String,
    stop: String,
    slack: String,
    growth: String,
    max_steps: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BallRecord {
    class: usize,
    center: VertexId,
    radius: String,
    pair: usize,
    outcome: BallOutcome,
    growth_steps: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepRecord {
    class: usize,
    kind: StepKind,
    owner: Option<usize>,
    changes: Vec<(usize, String)>,
}

impl<W: Scalar> BalancedDual<W> {
    pub fn to_json(&self) -> String {
        let th = &self.thresholds;
        let f = BalancedFile {
            k_bound: self.k_bound,
            thresholds: ThresholdFile {
                l: th.l,
                case1: format_scalar(&th.case1),
                case2a: format_scalar(&th.case2a),
                stop: format_scalar(&th.stop),
                slack: format_scalar(&th.slack),
                growth: format_scalar(&th.growth),
                max_steps: th.max_steps,
            },
            balls: self
                .balls
                .iter()
                .map(|b| BallRecord {
                    class: b.class,
                    center: b.center,
                    radius: format_scalar(&b.radius),
                    pair: b.pair,
                    outcome: b.outcome,
                    growth_steps: b.growth_steps,
                })
                .collect(),
            deleted: self.deleted.clone(),
            charges: self.charges.iter().map(format_scalar).collect(),
            statuses: self.statuses.clone(),
            dangerous: self.dangerous.iter().copied().collect(),
            log: self
                .log
                .iter()
                .map(|s| StepRecord {
                    class: s.class,
                    kind: s.kind,
                    owner: s.owner,
                    changes: s.changes.iter().map(|(i, v)| (*i, format_scalar(v))).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&f).expect("balanced dual serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: BalancedFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let t = &f.thresholds;
        let thresholds = Thresholds {
            l: t.l,
            case1: parse_scalar(&t.case1)?,
            case2a: parse_scalar(&t.case2a)?,
            stop: parse_scalar(&t.stop)?,
            slack: parse_scalar(&t.slack)?,
            growth: parse_scalar(&t.growth)?,
            max_steps: t.max_steps,
        };
        let balls = f
            .balls
            .iter()
            .map(|b| {
                Ok(BalancedBall {
                    class: b.class,
                    center: b.center,
                    radius: parse_scalar(&b.radius)?,
                    pair: b.pair,
                    outcome: b.outcome,
                    growth_steps: b.growth_steps,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let charges = f.charges.iter().map(|c| parse_scalar(c)).collect::<Result<Vec<W>>>()?;
        let log = f
            .log
            .iter()
            .map(|s| {
                Ok(ChargeStep {
                    class: s.class,
                    kind: s.kind,
                    owner: s.owner,
                    changes: s.changes.iter().map(|(i, v)| Ok((*i, parse_scalar(v)?))).collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BalancedDual {
            k_bound: f.k_bound,
            thresholds,
            balls,
            deleted: f.deleted,
            charges,
            statuses: f.statuses,
            dangerous: f.dangerous.into_iter().collect(),
            log,
        })
    }
}
