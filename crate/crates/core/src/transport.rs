//! Bounded transport on windows: does a degree-0 chain bound an edge chain
//! of sup-norm at most `C` and propagation at most `r`?
//!
//! A 1-chain `b` with `|b(x,y)| <= C` on pairs at distance `<= r` is a flow
//! on an undirected network; `d(x,y) = (y) - (x)` makes `(db)_x` the net
//! inflow at `x`. Interior points must receive exactly their demand, frontier
//! points exchange flow freely with the outside (`FrontierPolicy::Free`) or up
//! to a bound per point (`FrontierPolicy::Bounded`).
//!
//! Feasibility is decided by max-flow; infeasibility yields a set `F` with
//! `|sum_F c| > C * #{r-edges leaving F}` (Gale/Hoffman). Capacity searches
//! are parametric: each violated cut fixes the next candidate value exactly,
//! so optima are exact rationals.

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};

use crate::chain::{fmt_simplex, Ring, UFChain};
use crate::error::{Error, Result};
use crate::maxflow::Dinic;
use crate::space::Window;
use crate::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrontierPolicy {
    /// Frontier points absorb or emit any amount.
    Free,
    /// Each frontier point's net exchange with the outside lies in `[-k, k]`.
    Bounded(Rat),
}

#[derive(Clone, Debug)]
pub struct DivergenceProblem<'w> {
    pub window: &'w Window,
    pub r: u64,
    pub capacity: Rat,
    /// Indexed like `window.points()`; frontier entries must be zero.
    pub demands: Vec<Rat>,
    pub frontier: FrontierPolicy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeFlow {
    pub from: usize,
    pub to: usize,
    /// Flow along `from -> to`, i.e. the coefficient of `(from, to)` in `b`.
    pub flow: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FlowAssignment {
    /// One entry per window `r`-edge carrying nonzero flow, `from < to`.
    pub edges: Vec<EdgeFlow>,
    /// Net amount each frontier point sends to the outside (bounded policy
    /// only; nonzero entries).
    pub frontier_exchange: Vec<(usize, Rat)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutWitness {
    /// Window indices of `F`, sorted.
    pub set: Vec<usize>,
    pub demand_sum: Rat,
    /// Window `r`-edges with exactly one endpoint in `F`.
    pub crossing_edges: usize,
    /// Capacity of everything leaving `F` at the capacity it was found at.
    pub cut_capacity: Rat,
}

impl CutWitness {
    /// `|sum_F c| / crossing`, or `None` when nothing crosses.
    pub fn ratio(&self) -> Option<Rat> {
        (self.crossing_edges > 0)
            .then(|| self.demand_sum.abs() / Rat::from_integer((self.crossing_edges as i64).into()))
    }

    pub fn to_tsv(&self, w: &Window) -> String {
        let in_f: HashSet<usize> = self.set.iter().copied().collect();
        let mut s = String::from("point\tin_F\n");
        for i in 0..w.len() {
            if w.is_interior(i) {
                s.push_str(&format!(
                    "{}\t{}\n",
                    w.point(i),
                    u8::from(in_f.contains(&i))
                ));
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlowCertificate {
    Flow(FlowAssignment),
    Cut(CutWitness),
}

impl FlowAssignment {
    /// The 1-chain `b = sum flow * (from, to)`.
    pub fn as_chain(&self, w: &Window, ring: Ring) -> UFChain {
        let mut b = UFChain::zero(1, ring);
        for e in &self.edges {
            b.add_term(
                vec![w.point(e.from).clone(), w.point(e.to).clone()],
                e.flow.clone(),
            )
            .expect("degree 1");
        }
        b
    }

    pub fn is_integral(&self) -> bool {
        self.edges.iter().all(|e| e.flow.is_integer())
            && self.frontier_exchange.iter().all(|(_, v)| v.is_integer())
    }

    pub fn max_abs(&self) -> Rat {
        self.edges
            .iter()
            .map(|e| e.flow.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    pub fn to_tsv(&self, w: &Window) -> String {
        let mut s = String::from("edge\tflow\n");
        for e in &self.edges {
            s.push_str(&format!(
                "{}\t{}\n",
                fmt_simplex(&[w.point(e.from).clone(), w.point(e.to).clone()]),
                e.flow
            ));
        }
        s
    }
}

/// Verify a flow against a problem using the chain boundary operator:
/// `(db)_x = demand_x` on the interior and `|b| <= C` on every edge.
pub fn check_flow(p: &DivergenceProblem<'_>, flow: &FlowAssignment) -> Result<()> {
    for e in &flow.edges {
        if e.flow.abs() > p.capacity {
            return Err(Error::Contract(format!(
                "edge flow {} exceeds capacity {}",
                e.flow, p.capacity
            )));
        }
        if p.window.distance(e.from, e.to) > p.r {
            return Err(Error::Contract(
                "flow on a pair farther apart than r".into(),
            ));
        }
    }
    let db = flow.as_chain(p.window, Ring::Rat).boundary()?;
    for i in p.window.interior_indices() {
        let got = db.coefficient(std::slice::from_ref(p.window.point(i)));
        if got != p.demands[i] {
            return Err(Error::Contract(format!(
                "divergence at {} is {got}, demand {}",
                p.window.point(i),
                p.demands[i]
            )));
        }
    }
    if let FrontierPolicy::Bounded(k) = &p.frontier {
        for i in p.window.frontier_indices() {
            let got = db.coefficient(std::slice::from_ref(p.window.point(i)));
            if got.abs() > *k {
                return Err(Error::Contract(format!(
                    "frontier point {} exchanges {got} > {k}",
                    p.window.point(i)
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// parametric networks

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Affine {
    pub c0: Rat,
    pub c1: Rat,
}

impl Affine {
    pub(crate) fn constant(c0: Rat) -> Self {
        Affine {
            c0,
            c1: Rat::zero(),
        }
    }

    pub(crate) fn linear(c1: Rat) -> Self {
        Affine {
            c0: Rat::zero(),
            c1,
        }
    }

    pub(crate) fn at(&self, lambda: &Rat) -> Rat {
        &self.c0 + &self.c1 * lambda
    }

    fn add(&mut self, other: &Affine) {
        self.c0 += &other.c0;
        self.c1 += &other.c1;
    }

    fn sub(&mut self, other: &Affine) {
        self.c0 -= &other.c0;
        self.c1 -= &other.c1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LinkKind {
    /// Window `r`-edge between window points `a < b`.
    WindowEdge(usize, usize),
    /// Frontier point to the outside.
    Exchange(usize),
    /// Interval slack of an interior point.
    Slack(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct Link {
    pub u: usize,
    pub v: usize,
    pub cap: Affine,
    pub undirected: bool,
    pub kind: LinkKind,
}

/// Nodes carry affine demands (required net inflow); links carry affine
/// capacities. Demands always sum to zero.
#[derive(Clone, Debug)]
pub(crate) struct Network {
    pub demand: Vec<Affine>,
    pub links: Vec<Link>,
}

pub(crate) enum Solve {
    Feasible(Vec<Rat>),
    /// Node set violating Gale's condition.
    Infeasible(Vec<bool>),
}

pub(crate) enum Parametric {
    Finite {
        lambda: Rat,
        flows: Vec<Rat>,
        /// Last violated set before reaching `lambda` (tight at `lambda`).
        tight: Option<Vec<bool>>,
    },
    /// The returned set stays violated for every parameter value.
    Unbounded(Vec<bool>),
}

impl Network {
    pub(crate) fn solve(&self, lambda: &Rat) -> Result<Solve> {
        let n = self.demand.len();
        let (s, t) = (n, n + 1);
        let demands: Vec<Rat> = self.demand.iter().map(|d| d.at(lambda)).collect();
        let supply: Rat = demands
            .iter()
            .filter(|d| d.is_negative())
            .map(|d| -d.clone())
            .sum();
        let infinity = &supply + Rat::one();
        let mut dinic = Dinic::new(n + 2);
        let mut ids = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let cap = l.cap.at(lambda);
            if cap.is_negative() {
                return Err(Error::Contract(format!(
                    "negative capacity {cap} at parameter {lambda}"
                )));
            }
            let back = if l.undirected {
                cap.clone()
            } else {
                Rat::zero()
            };
            ids.push(dinic.add(l.u, l.v, cap, back));
        }
        let mut need = Rat::zero();
        for (v, d) in demands.iter().enumerate() {
            if d.is_positive() {
                dinic.add(v, t, d.clone(), Rat::zero());
                need += d;
            } else if d.is_negative() {
                dinic.add(s, v, -d.clone(), Rat::zero());
            }
        }
        if need != supply {
            return Err(Error::Contract(format!(
                "demands do not balance: {need} in, {supply} out"
            )));
        }
        let pushed = dinic.max_flow(s, t, &infinity);
        if pushed == need {
            Ok(Solve::Feasible(
                ids.iter().map(|&id| dinic.flow(id)).collect(),
            ))
        } else {
            let reach = dinic.reachable(s);
            Ok(Solve::Infeasible((0..n).map(|v| !reach[v]).collect()))
        }
    }

    /// `sum_F d - cap_in(F)` as an affine function of the parameter.
    pub(crate) fn violation(&self, set: &[bool]) -> Affine {
        let mut v = Affine::constant(Rat::zero());
        for (i, d) in self.demand.iter().enumerate() {
            if set[i] {
                v.add(d);
            }
        }
        for l in &self.links {
            let enters = (!set[l.u] && set[l.v]) || (l.undirected && set[l.u] && !set[l.v]);
            if enters {
                v.sub(&l.cap);
            }
        }
        v
    }

    /// Smallest parameter `>= start` at which the network is feasible,
    /// assuming feasibility is monotone in the parameter.
    pub(crate) fn minimize(&self, start: Rat) -> Result<Parametric> {
        let mut lambda = start;
        let mut tight = None;
        loop {
            match self.solve(&lambda)? {
                Solve::Feasible(flows) => {
                    return Ok(Parametric::Finite {
                        lambda,
                        flows,
                        tight,
                    })
                }
                Solve::Infeasible(set) => {
                    let v = self.violation(&set);
                    if !v.at(&lambda).is_positive() {
                        return Err(Error::Contract(
                            "min cut does not violate the demand condition".into(),
                        ));
                    }
                    if !v.c1.is_negative() {
                        return Ok(Parametric::Unbounded(set));
                    }
                    let next = -&v.c0 / &v.c1;
                    debug_assert!(next > lambda);
                    lambda = next;
                    tight = Some(set);
                }
            }
        }
    }
}

fn check_margin(w: &Window, r: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::Contract(
            "propagation radius r must be positive".into(),
        ));
    }
    if w.is_torus() {
        if let crate::space::Geometry::Torus { periods } = w.geometry() {
            if periods.iter().any(|&l| (l as u64) <= 2 * r) {
                return Err(Error::Precision(format!(
                    "torus periods {periods:?} too short for r = {r}"
                )));
            }
        }
        return Ok(());
    }
    if w.margin() < r {
        return Err(Error::Precision(format!(
            "window margin {} is smaller than r = {r}",
            w.margin()
        )));
    }
    Ok(())
}

/// Node layout shared by all window networks.
struct Layout {
    node_of: Vec<usize>,
    outside: usize,
    n_nodes: usize,
}

fn layout(w: &Window, frontier: &FrontierPolicy) -> Layout {
    let mut node_of = vec![usize::MAX; w.len()];
    let mut next = 0;
    for (i, slot) in node_of.iter_mut().enumerate() {
        if w.is_interior(i) || matches!(frontier, FrontierPolicy::Bounded(_)) {
            *slot = next;
            next += 1;
        }
    }
    let outside = next;
    for slot in node_of.iter_mut() {
        if *slot == usize::MAX {
            *slot = outside;
        }
    }
    Layout {
        node_of,
        outside,
        n_nodes: next + 1,
    }
}

fn window_network(
    w: &Window,
    r: u64,
    edge_cap: Affine,
    demands: &[Affine],
    frontier: &FrontierPolicy,
) -> (Network, Layout) {
    let lay = layout(w, frontier);
    let mut demand = vec![Affine::constant(Rat::zero()); lay.n_nodes];
    let mut total = Affine::constant(Rat::zero());
    for i in w.interior_indices() {
        demand[lay.node_of[i]] = demands[i].clone();
        total.add(&demands[i]);
    }
    demand[lay.outside] = Affine {
        c0: -total.c0,
        c1: -total.c1,
    };
    let mut links = Vec::new();
    for (a, b) in w.edges(r) {
        let (u, v) = (lay.node_of[a], lay.node_of[b]);
        if u == v {
            continue;
        }
        links.push(Link {
            u,
            v,
            cap: edge_cap.clone(),
            undirected: true,
            kind: LinkKind::WindowEdge(a, b),
        });
    }
    if let FrontierPolicy::Bounded(k) = frontier {
        for i in w.frontier_indices() {
            links.push(Link {
                u: lay.node_of[i],
                v: lay.outside,
                cap: Affine::constant(k.clone()),
                undirected: true,
                kind: LinkKind::Exchange(i),
            });
        }
    }
    (Network { demand, links }, lay)
}

fn assignment(net: &Network, flows: &[Rat]) -> FlowAssignment {
    let mut out = FlowAssignment::default();
    for (l, f) in net.links.iter().zip(flows) {
        if f.is_zero() {
            continue;
        }
        match l.kind {
            LinkKind::WindowEdge(a, b) => out.edges.push(EdgeFlow {
                from: a,
                to: b,
                flow: f.clone(),
            }),
            LinkKind::Exchange(i) => out.frontier_exchange.push((i, f.clone())),
            LinkKind::Slack(_) => {}
        }
    }
    out.edges.sort_by_key(|e| (e.from, e.to));
    out
}

fn witness(
    w: &Window,
    net: &Network,
    lay: &Layout,
    set: &[bool],
    demands: &[Rat],
    capacity: &Rat,
    frontier: &FrontierPolicy,
) -> CutWitness {
    let flip = set[lay.outside];
    let chosen: Vec<usize> = (0..w.len())
        .filter(|&i| lay.node_of[i] != lay.outside && set[lay.node_of[i]] != flip)
        .collect();
    let in_f: HashSet<usize> = chosen.iter().copied().collect();
    let demand_sum: Rat = chosen
        .iter()
        .filter(|&&i| w.is_interior(i))
        .map(|&i| demands[i].clone())
        .sum();
    let mut crossing = 0usize;
    let mut cut_capacity = Rat::zero();
    for l in &net.links {
        match l.kind {
            LinkKind::WindowEdge(a, b) if in_f.contains(&a) != in_f.contains(&b) => {
                crossing += 1;
                cut_capacity += capacity;
            }
            LinkKind::Exchange(i) if in_f.contains(&i) => {
                if let FrontierPolicy::Bounded(k) = frontier {
                    cut_capacity += k;
                }
            }
            _ => {}
        }
    }
    CutWitness {
        set: chosen,
        demand_sum,
        crossing_edges: crossing,
        cut_capacity,
    }
}

fn check_demands(w: &Window, demands: &[Rat]) -> Result<()> {
    if demands.len() != w.len() {
        return Err(Error::Contract(format!(
            "{} demands for a window of {} points",
            demands.len(),
            w.len()
        )));
    }
    for i in w.frontier_indices() {
        if !demands[i].is_zero() {
            return Err(Error::Contract(format!(
                "nonzero demand on frontier point {}",
                w.point(i)
            )));
        }
    }
    Ok(())
}

/// Demand vector of a degree-0 chain: its coefficients on interior points.
pub fn demands_from_chain(w: &Window, c: &UFChain) -> Result<Vec<Rat>> {
    if c.degree() != 0 {
        return Err(Error::Contract("demands come from degree-0 chains".into()));
    }
    let mut d = vec![Rat::zero(); w.len()];
    for (s, v) in c.terms() {
        if let Some(i) = w.index_of(&s[0]) {
            if w.is_interior(i) {
                d[i] = v.clone();
            }
        }
    }
    Ok(d)
}

/// A flow meeting the demands within capacity, or a violating cut.
pub fn feasible_divergence_flow(p: &DivergenceProblem<'_>) -> Result<FlowCertificate> {
    check_margin(p.window, p.r)?;
    check_demands(p.window, &p.demands)?;
    if p.capacity.is_negative() {
        return Err(Error::Contract("negative capacity".into()));
    }
    let demands: Vec<Affine> = p
        .demands
        .iter()
        .map(|d| Affine::constant(d.clone()))
        .collect();
    let (net, lay) = window_network(
        p.window,
        p.r,
        Affine::constant(p.capacity.clone()),
        &demands,
        &p.frontier,
    );
    match net.solve(&Rat::zero())? {
        Solve::Feasible(flows) => {
            let a = assignment(&net, &flows);
            debug_assert!(check_flow(p, &a).is_ok());
            Ok(FlowCertificate::Flow(a))
        }
        Solve::Infeasible(set) => Ok(FlowCertificate::Cut(witness(
            p.window,
            &net,
            &lay,
            &set,
            &p.demands,
            &p.capacity,
            &p.frontier,
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinCapacity {
    Finite {
        capacity: Rat,
        flow: FlowAssignment,
        /// A cut attaining `capacity` as its ratio (absent when zero works).
        witness: Option<CutWitness>,
    },
    /// No capacity suffices (some demand cannot reach the frontier).
    Infinite { witness: CutWitness },
}

impl MinCapacity {
    pub fn capacity(&self) -> Option<&Rat> {
        match self {
            MinCapacity::Finite { capacity, .. } => Some(capacity),
            MinCapacity::Infinite { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&CutWitness> {
        match self {
            MinCapacity::Finite { witness, .. } => witness.as_ref(),
            MinCapacity::Infinite { witness } => Some(witness),
        }
    }
}

/// Least edge capacity `C*` making the demands transportable with
/// propagation `r`. Exact: `C*` is the largest cut ratio `|sum_F c| / cross(F)`.
pub fn min_feasible_capacity(
    w: &Window,
    r: u64,
    demands: &[Rat],
    frontier: &FrontierPolicy,
) -> Result<MinCapacity> {
    check_margin(w, r)?;
    check_demands(w, demands)?;
    if w.interior_indices().is_empty() {
        return Err(Error::Contract("window has an empty interior".into()));
    }
    let affine: Vec<Affine> = demands
        .iter()
        .map(|d| Affine::constant(d.clone()))
        .collect();
    let (net, lay) = window_network(w, r, Affine::linear(Rat::one()), &affine, frontier);
    match net.minimize(Rat::zero())? {
        Parametric::Finite {
            lambda,
            flows,
            tight,
        } => {
            let witness = tight.map(|set| witness(w, &net, &lay, &set, demands, &lambda, frontier));
            Ok(MinCapacity::Finite {
                flow: assignment(&net, &flows),
                capacity: lambda,
                witness,
            })
        }
        Parametric::Unbounded(set) => Ok(MinCapacity::Infinite {
            witness: witness(w, &net, &lay, &set, demands, &Rat::zero(), frontier),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlackOptimum {
    /// Least `t` with `|c_x + (db)_x| <= t` on the interior.
    pub t: Rat,
    pub flow: FlowAssignment,
}

/// Least uniform slack `t` such that some `b` with `|b| <= bound` and
/// propagation `r` brings every interior coefficient of `c` into `[-t, t]`.
pub fn min_uniform_slack(w: &Window, r: u64, bound: &Rat, c: &[Rat]) -> Result<SlackOptimum> {
    check_margin(w, r)?;
    check_demands(w, c)?;
    if bound.is_negative() {
        return Err(Error::Contract("negative correction bound".into()));
    }
    let minus_one = -Rat::one();
    let demands: Vec<Affine> = c
        .iter()
        .map(|v| Affine {
            c0: -v.clone(),
            c1: minus_one.clone(),
        })
        .collect();
    let (mut net, lay) = window_network(
        w,
        r,
        Affine::constant(bound.clone()),
        &demands,
        &FrontierPolicy::Free,
    );
    for i in w.interior_indices() {
        net.links.push(Link {
            u: lay.node_of[i],
            v: lay.outside,
            cap: Affine::linear(Rat::from_integer(2.into())),
            undirected: false,
            kind: LinkKind::Slack(i),
        });
    }
    match net.minimize(Rat::zero())? {
        Parametric::Finite { lambda, flows, .. } => Ok(SlackOptimum {
            t: lambda,
            flow: assignment(&net, &flows),
        }),
        Parametric::Unbounded(_) => Err(Error::Contract("slack search did not terminate".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutMeasure {
    /// `|d_r F|`, the two-sided collar.
    Collar,
    /// Number of `r`-edges leaving `F`.
    CrossingEdges,
}

/// Maximum interior size accepted by the exhaustive oracle.
pub const BRUTE_FORCE_LIMIT: usize = 16;

/// Exhaustively maximize `|sum_F c| - C * measure(F)` over subsets `F` of the
/// interior. Returns the first maximizer in subset-bitmask order.
pub fn brute_force_cut_oracle(
    w: &Window,
    r: u64,
    demands: &[Rat],
    capacity: &Rat,
    measure: CutMeasure,
) -> Result<(Vec<usize>, Rat)> {
    check_margin(w, r)?;
    let interior = w.interior_indices();
    if interior.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::Resource {
            what: "interior size for exhaustive cut enumeration".into(),
            needed: interior.len() as u64,
            budget: BRUTE_FORCE_LIMIT as u64,
        });
    }
    let nbrs: Vec<Vec<usize>> = (0..w.len()).map(|i| w.neighbors(i, r)).collect();
    let mut best: Option<(Vec<usize>, Rat)> = None;
    for mask in 0u32..(1u32 << interior.len()) {
        let f: Vec<usize> = interior
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &i)| i)
            .collect();
        let in_f: HashSet<usize> = f.iter().copied().collect();
        let sum: Rat = f.iter().map(|&i| demands[i].clone()).sum();
        let m = match measure {
            CutMeasure::CrossingEdges => f
                .iter()
                .map(|&x| nbrs[x].iter().filter(|y| !in_f.contains(y)).count())
                .sum::<usize>(),
            CutMeasure::Collar => {
                let mut collar = HashSet::new();
                for &x in &f {
                    for &y in &nbrs[x] {
                        if !in_f.contains(&y) {
                            collar.insert(x);
                            collar.insert(y);
                        }
                    }
                }
                collar.len()
            }
        };
        let value = sum.abs() - capacity * Rat::from_integer((m as i64).into());
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((f, value));
        }
    }
    Ok(best.expect("at least the empty set"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{int, rat};
    use crate::space::{build_window, Point, Presentation};

    fn z_window(center: i64, radius: u64, margin: u64) -> Window {
        build_window(
            &Presentation::lattice(1),
            &Point::int(center),
            radius,
            margin,
        )
        .unwrap()
    }

    fn demands(w: &Window, f: impl Fn(i64) -> i64) -> Vec<Rat> {
        (0..w.len())
            .map(|i| {
                if w.is_interior(i) {
                    int(f(w.point(i).0[0]))
                } else {
                    int(0)
                }
            })
            .collect()
    }

    #[test]
    fn single_edge_flow() {
        // window {-1,0,1,2} with interior {0,1}: demand +1 at 0, -1 at 1
        let w = z_window(0, 2, 1);
        let d = demands(&w, |x| match x {
            0 => 1,
            1 => -1,
            _ => 0,
        });
        let p = DivergenceProblem {
            window: &w,
            r: 1,
            capacity: int(1),
            demands: d,
            frontier: FrontierPolicy::Free,
        };
        match feasible_divergence_flow(&p).unwrap() {
            FlowCertificate::Flow(f) => {
                check_flow(&p, &f).unwrap();
                assert!(f.is_integral());
            }
            FlowCertificate::Cut(_) => panic!("expected a flow"),
        }
    }

    #[test]
    fn alternating_demands_are_feasible() {
        let w = z_window(0, 20, 1);
        let d = demands(&w, |x| if x.rem_euclid(2) == 0 { 1 } else { -1 });
        let p = DivergenceProblem {
            window: &w,
            r: 1,
            capacity: int(1),
            demands: d,
            frontier: FrontierPolicy::Free,
        };
        let FlowCertificate::Flow(f) = feasible_divergence_flow(&p).unwrap() else {
            panic!("expected a flow")
        };
        check_flow(&p, &f).unwrap();
        // explicit certificate: b = -sum_{z even} (z, z+1) restricted suitably
        let mut b = UFChain::zero(1, Ring::Int);
        for z in (-20..20).filter(|z: &i64| z.rem_euclid(2) == 1) {
            b.add_term(vec![Point::int(z), Point::int(z + 1)], int(1))
                .unwrap();
        }
        let db = b.boundary().unwrap();
        for i in w.interior_indices() {
            assert_eq!(
                db.coefficient(std::slice::from_ref(w.point(i))),
                p.demands[i]
            );
        }
    }

    #[test]
    fn all_ones_is_infeasible_at_small_capacity() {
        let n = 10;
        let w = z_window(0, n, 1);
        let d = demands(&w, |_| 1);
        let p = DivergenceProblem {
            window: &w,
            r: 1,
            capacity: rat(2 * n as i64 - 3, 2),
            demands: d,
            frontier: FrontierPolicy::Free,
        };
        let FlowCertificate::Cut(cut) = feasible_divergence_flow(&p).unwrap() else {
            panic!("expected a cut")
        };
        assert_eq!(cut.set, w.interior_indices());
        assert_eq!(cut.demand_sum, int(2 * n as i64 - 1));
        assert_eq!(cut.crossing_edges, 2);
        assert!(cut.demand_sum.abs() > cut.cut_capacity);
    }

    #[test]
    fn min_capacity_of_zero_demands() {
        let w = z_window(0, 5, 1);
        let m =
            min_feasible_capacity(&w, 1, &vec![int(0); w.len()], &FrontierPolicy::Free).unwrap();
        assert_eq!(m.capacity(), Some(&int(0)));
    }

    #[test]
    fn min_capacity_matches_cut_ratio_on_z() {
        let w = z_window(0, 30, 1);
        let d = demands(&w, |_| 1);
        let m = min_feasible_capacity(&w, 1, &d, &FrontierPolicy::Free).unwrap();
        assert_eq!(m.capacity(), Some(&rat(59, 2)));
        assert_eq!(m.witness().unwrap().ratio(), Some(rat(59, 2)));
    }

    #[test]
    fn squares_capacity_grows() {
        let mut prev = int(0);
        for n in [100i64, 400, 900] {
            let w = z_window(n / 2, (n / 2) as u64, 1);
            let d = demands(&w, |x| i64::from(crate::space::is_square(x)));
            let m = min_feasible_capacity(&w, 1, &d, &FrontierPolicy::Free).unwrap();
            let c = m.capacity().unwrap().clone();
            let floor_sqrt = (n as f64).sqrt().floor() as i64;
            assert!(c >= rat(floor_sqrt - 1, 4));
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn tree_fundamental_class_needs_capacity_at_most_one() {
        let t = Presentation::regular_tree(3).unwrap();
        let w = build_window(&t, &Point(vec![]), 6, 1).unwrap();
        let d: Vec<Rat> = (0..w.len())
            .map(|i| if w.is_interior(i) { int(1) } else { int(0) })
            .collect();
        let m = min_feasible_capacity(&w, 1, &d, &FrontierPolicy::Free).unwrap();
        assert!(m.capacity().unwrap() <= &int(1));
    }

    #[test]
    fn empty_interior_is_rejected() {
        let w = z_window(0, 0, 0);
        let w1 = z_window(0, 1, 1);
        assert!(min_feasible_capacity(&w, 1, &[int(0)], &FrontierPolicy::Free).is_err());
        assert!(matches!(
            min_feasible_capacity(&w1, 2, &vec![int(0); 3], &FrontierPolicy::Free),
            Err(Error::Precision(_))
        ));
    }

    #[test]
    fn torus_without_frontier_is_infinite_for_nonzero_total() {
        let w = crate::space::build_torus(&Presentation::lattice(1), &[6]).unwrap();
        let m = min_feasible_capacity(&w, 1, &vec![int(1); 6], &FrontierPolicy::Free).unwrap();
        assert!(matches!(m, MinCapacity::Infinite { .. }));
        let alt: Vec<Rat> = (0..6)
            .map(|i| int(if i % 2 == 0 { 1 } else { -1 }))
            .collect();
        let m = min_feasible_capacity(&w, 1, &alt, &FrontierPolicy::Free).unwrap();
        assert_eq!(m.capacity(), Some(&rat(1, 2)));
    }

    #[test]
    fn brute_force_all_ones_interval() {
        // demand supported on the eight points -3..=4
        let w = z_window(0, 5, 1);
        let d = demands(&w, |x| i64::from(x >= -3));
        let (f, v) = brute_force_cut_oracle(&w, 1, &d, &int(1), CutMeasure::Collar).unwrap();
        let pts: Vec<i64> = f.iter().map(|&i| w.point(i).0[0]).collect();
        assert_eq!(pts, (-3..=4).collect::<Vec<_>>());
        assert_eq!(v, int(4));

        let alt = demands(&w, |x| if x.rem_euclid(2) == 0 { 1 } else { -1 });
        let (_, v) = brute_force_cut_oracle(&w, 1, &alt, &int(1), CutMeasure::Collar).unwrap();
        assert!(v <= int(0));

        let zero = vec![int(0); w.len()];
        let (f, v) = brute_force_cut_oracle(&w, 1, &zero, &int(0), CutMeasure::Collar).unwrap();
        assert!(f.is_empty());
        assert_eq!(v, int(0));
    }

    #[test]
    fn brute_force_refuses_large_interiors() {
        let w = z_window(0, 20, 1);
        let d = vec![int(0); w.len()];
        assert!(matches!(
            brute_force_cut_oracle(&w, 1, &d, &int(1), CutMeasure::Collar),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn uniform_slack_on_a_window() {
        let w = z_window(0, 10, 1);
        let zero = vec![int(0); w.len()];
        assert_eq!(min_uniform_slack(&w, 1, &int(1), &zero).unwrap().t, int(0));
        let d = demands(&w, |_| 1);
        let s = min_uniform_slack(&w, 1, &int(0), &d).unwrap();
        assert_eq!(s.t, int(1));
        // with corrections the frontier can absorb 2 units in total
        let s = min_uniform_slack(&w, 1, &int(1), &d).unwrap();
        assert_eq!(s.t, rat(17, 19));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn window_demands() -> impl Strategy<Value = (Window, Vec<Rat>)> {
            let w = z_window(0, 6, 1);
            let n = w.interior_indices().len();
            prop::collection::vec(-3i64..=3, n).prop_map(move |vals| {
                let mut d = vec![int(0); w.len()];
                for (k, i) in w.interior_indices().into_iter().enumerate() {
                    d[i] = int(vals[k]);
                }
                (w.clone(), d)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn min_capacity_is_the_largest_cut_ratio((w, d) in window_demands()) {
                let m = min_feasible_capacity(&w, 1, &d, &FrontierPolicy::Free).unwrap();
                let c = m.capacity().unwrap().clone();
                let (_, excess) = brute_force_cut_oracle(&w, 1, &d, &c, CutMeasure::CrossingEdges).unwrap();
                prop_assert_eq!(excess, int(0));
                if let Some(wit) = m.witness() {
                    prop_assert_eq!(wit.ratio(), Some(c.clone()));
                }
                if c.is_positive() {
                    let below = &c - rat(1, 1000);
                    let (_, excess) = brute_force_cut_oracle(&w, 1, &d, &below, CutMeasure::CrossingEdges).unwrap();
                    prop_assert!(excess.is_positive());
                }
            }

            #[test]
            fn feasibility_is_monotone_and_integral((w, d) in window_demands(), cap in 0i64..4) {
                let solve = |c: i64| {
                    feasible_divergence_flow(&DivergenceProblem {
                        window: &w,
                        r: 1,
                        capacity: int(c),
                        demands: d.clone(),
                        frontier: FrontierPolicy::Free,
                    })
                    .unwrap()
                };
                if let FlowCertificate::Flow(f) = solve(cap) {
                    prop_assert!(f.is_integral());
                    prop_assert!(f.max_abs() <= int(cap));
                    prop_assert!(matches!(solve(cap + 1), FlowCertificate::Flow(_)));
                } else if let FlowCertificate::Cut(cut) = solve(cap) {
                    prop_assert!(cut.demand_sum.abs() > cut.cut_capacity);
                }
            }

            #[test]
            fn returned_flows_check_out((w, d) in window_demands()) {
                let m = min_feasible_capacity(&w, 1, &d, &FrontierPolicy::Free).unwrap();
                if let MinCapacity::Finite { capacity, flow, .. } = m {
                    let p = DivergenceProblem { window: &w, r: 1, capacity, demands: d, frontier: FrontierPolicy::Free };
                    prop_assert!(check_flow(&p, &flow).is_ok());
                }
            }
        }
    }
}
