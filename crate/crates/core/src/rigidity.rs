//! Quasi-isometries, pushforwards of fundamental classes, bilipschitz
//! verdicts with extracted matchings, homomorphism indices, and the
//! averaging chain map for the squares retraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{int, ChainPattern, Ring, UFChain};
use crate::degree0::{
    global_certificate, periodic_average, verdict_from_windows, ClassVerdict, Verdict,
    VerdictWindow, WindowSpec,
};
use crate::error::{Error, Result};
use crate::space::{
    adjugate, build_window, determinant, is_square, Point, Presentation, SubsetRule, Window,
};
use crate::transport::FlowAssignment;
use crate::Rat;

/// Symbolic point maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapRule {
    Identity,
    /// Inclusion of a lattice subset into a lattice (or a subset).
    Inclusion,
    /// `x -> k x` on Z.
    Scale(i64),
    /// `x -> floor(x / k)` on Z.
    FloorDiv(i64),
    /// Translation of a lattice.
    Shift(Vec<i64>),
    /// `(sheet, x) -> x` from the double of a space to the space.
    DoublingProjection,
    /// `x -> M x` on Z^d.
    Linear(Vec<Vec<i64>>),
    /// `f_j : Z -> Z \ A` for `A` the perfect squares: `x` off `A`,
    /// `x + j` on `A` at or above `n^2`, `-n x - j` on `A` below `n^2`.
    SquaresRetraction {
        n: i64,
        j: i64,
    },
}

/// A point map with quasi-isometry constants `(C, D)`:
/// `d(x,y)/C - D <= d(fx,fy) <= C d(x,y) + D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QIMap {
    pub source: Presentation,
    pub target: Presentation,
    pub rule: MapRule,
    /// Declared constants; `None` when they are only measured.
    pub constants: Option<(Rat, Rat)>,
}

/// `l1 -> l1` operator norm: largest absolute column sum.
fn l1_norm(m: &[Vec<Rat>]) -> Rat {
    (0..m.len())
        .map(|j| m.iter().map(|row| row[j].abs()).sum::<Rat>())
        .max()
        .unwrap_or_else(Rat::zero)
}

fn as_rat(m: &[Vec<i64>]) -> Vec<Vec<Rat>> {
    m.iter()
        .map(|row| row.iter().map(|&a| int(a)).collect())
        .collect()
}

fn lattice_dim(p: &Presentation) -> Option<usize> {
    p.lattice_dim()
}

impl QIMap {
    pub fn new(source: Presentation, target: Presentation, rule: MapRule) -> Result<Self> {
        source.validate()?;
        target.validate()?;
        let one = Rat::one();
        let zero = Rat::zero();
        let bad = |msg: &str| Err(Error::Presentation(msg.to_string()));
        let constants = match &rule {
            MapRule::Identity => {
                if source != target {
                    return bad("identity needs equal source and target");
                }
                Some((one, zero))
            }
            MapRule::Inclusion => {
                if lattice_dim(&source).is_none() || lattice_dim(&source) != lattice_dim(&target) {
                    return bad(
                        "inclusion needs lattice-based source and target of equal dimension",
                    );
                }
                Some((one, zero))
            }
            MapRule::Scale(k) => {
                if *k == 0 {
                    return Err(Error::Domain("x -> 0 x has infinite kernel".into()));
                }
                if source != Presentation::lattice(1) || target != Presentation::lattice(1) {
                    return bad("scaling maps Z to Z");
                }
                Some((int(k.abs()), zero))
            }
            MapRule::FloorDiv(k) => {
                if *k < 1 {
                    return bad("floor division needs a positive divisor");
                }
                if source != Presentation::lattice(1) || target != Presentation::lattice(1) {
                    return bad("floor division maps Z to Z");
                }
                Some((int(*k), one))
            }
            MapRule::Shift(v) => {
                if source != target
                    || !matches!(source, Presentation::Lattice { dim } if dim == v.len())
                {
                    return bad("shifts act on a lattice of matching dimension");
                }
                Some((one, zero))
            }
            MapRule::DoublingProjection => {
                if source != Presentation::doubling(target.clone()) {
                    return bad("projection needs the double of the target as source");
                }
                Some((one.clone(), one))
            }
            MapRule::Linear(m) => {
                let d = m.len();
                if source != Presentation::lattice(d)
                    || target != Presentation::lattice(d)
                    || m.iter().any(|r| r.len() != d)
                {
                    return bad("linear maps need a square matrix on a lattice");
                }
                let det = determinant(m);
                if det == 0 {
                    return Err(Error::Domain(
                        "singular matrix: infinite kernel and cokernel".into(),
                    ));
                }
                let inv: Vec<Vec<Rat>> = adjugate(m)
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|&a| Rat::new(a.into(), det.into()))
                            .collect()
                    })
                    .collect();
                Some((l1_norm(&as_rat(m)).max(l1_norm(&inv)), zero))
            }
            MapRule::SquaresRetraction { n, j } => {
                if *n < 1 || *j < 1 || j > n {
                    return bad("retraction index must satisfy 1 <= j <= n");
                }
                let nonsquares = Presentation::subset(1, SubsetRule::NonSquares)?;
                if source != Presentation::lattice(1) || target != nonsquares {
                    return bad("retraction maps Z to Z minus the squares");
                }
                None
            }
        };
        Ok(QIMap {
            source,
            target,
            rule,
            constants,
        })
    }

    /// Image of a point; domain error if the result misses the target.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        let y = match &self.rule {
            MapRule::Identity | MapRule::Inclusion => x.clone(),
            MapRule::Scale(k) => Point::int(k * x.0[0]),
            MapRule::FloorDiv(k) => Point::int(x.0[0].div_euclid(*k)),
            MapRule::Shift(v) => Point(x.0.iter().zip(v).map(|(a, b)| a + b).collect()),
            MapRule::DoublingProjection => Point(x.0[1..].to_vec()),
            MapRule::Linear(m) => Point(
                m.iter()
                    .map(|row| row.iter().zip(&x.0).map(|(a, b)| a * b).sum())
                    .collect(),
            ),
            MapRule::SquaresRetraction { n, j } => {
                let v = x.0[0];
                if !is_square(v) {
                    x.clone()
                } else if v >= n * n {
                    Point::int(v + j)
                } else {
                    Point::int(-n * v - j)
                }
            }
        };
        if !self.target.contains(&y) {
            return Err(Error::Domain(format!(
                "image {y} of {x} is not a target point"
            )));
        }
        Ok(y)
    }

    /// A source point mapping close to `y`, used to center source windows.
    pub fn preimage_hint(&self, y: &Point) -> Point {
        match &self.rule {
            MapRule::Identity | MapRule::Inclusion => y.clone(),
            MapRule::Shift(v) => Point(y.0.iter().zip(v).map(|(a, b)| a - b).collect()),
            MapRule::DoublingProjection => {
                let mut v = vec![0];
                v.extend(&y.0);
                Point(v)
            }
            MapRule::FloorDiv(k) => Point::int(y.0[0] * k),
            _ => self.source.base_point(),
        }
    }

    fn declared(&self) -> Result<(Rat, Rat)> {
        self.constants
            .clone()
            .ok_or_else(|| Error::Contract("map has no declared quasi-isometry constants".into()))
    }

    /// Pattern of the pushforward of the source fundamental class, when the
    /// map is regular enough to describe it symbolically.
    pub fn pushforward_pattern(&self) -> Option<ChainPattern> {
        let one = Rat::one();
        match &self.rule {
            MapRule::Identity | MapRule::Shift(_) => Some(ChainPattern::fundamental()),
            MapRule::Inclusion => match &self.source {
                Presentation::Lattice { .. } => Some(ChainPattern::fundamental()),
                Presentation::Subset { rule, .. } => Some(ChainPattern::Indicator {
                    rule: rule.clone(),
                    value: one,
                }),
                _ => None,
            },
            MapRule::Scale(k) => Some(ChainPattern::Indicator {
                rule: SubsetRule::LatticeImage(vec![vec![*k]]),
                value: one,
            }),
            MapRule::FloorDiv(k) => Some(ChainPattern::Constant { value: int(*k) }),
            MapRule::DoublingProjection => Some(ChainPattern::Constant { value: int(2) }),
            MapRule::Linear(m) => Some(ChainPattern::Indicator {
                rule: SubsetRule::LatticeImage(m.clone()),
                value: one,
            }),
            MapRule::SquaresRetraction { .. } => None,
        }
    }

    /// `f_*[X] - [Y]` as a pattern on the target.
    pub fn obstruction_pattern(&self) -> Option<ChainPattern> {
        Some(match self.pushforward_pattern()? {
            ChainPattern::Constant { value } => ChainPattern::Constant {
                value: value - Rat::one(),
            },
            other => ChainPattern::Sum(vec![other, ChainPattern::Constant { value: -Rat::one() }]),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QIReport {
    pub pairs: usize,
    /// Multiplicative constant used (declared, or the least integer upper
    /// Lipschitz constant when nothing is declared).
    pub c: Rat,
    /// Least `D` making both inequalities hold on the window for `c`.
    pub d_min: Rat,
    /// Least `L` with `d/L <= d' <= L d` on the window, if injective there.
    pub bilipschitz: Option<Rat>,
    /// First pair violating the declared constants.
    pub violation: Option<(Point, Point)>,
}

impl QIReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Check the quasi-isometry inequalities on all pairs of window points.
pub fn verify_qi(f: &QIMap, w: &Window) -> Result<QIReport> {
    let images: Vec<Point> = w
        .points()
        .iter()
        .map(|x| f.apply(x))
        .collect::<Result<_>>()?;
    let n = w.len();
    let mut dist = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for a in 0..n {
        for b in a + 1..n {
            dist.push((
                a,
                b,
                w.distance(a, b),
                f.target.distance(&images[a], &images[b]),
            ));
        }
    }
    let c = match &f.constants {
        Some((c, _)) => c.clone(),
        None => {
            let lip = dist
                .iter()
                .map(|&(_, _, dx, dy)| Rat::new((dy as i64).into(), (dx as i64).into()))
                .max()
                .unwrap_or_else(Rat::one);
            lip.ceil().max(Rat::one())
        }
    };
    let mut d_min = Rat::zero();
    let mut bilip = Some(Rat::one());
    let mut violation = None;
    for &(a, b, dx, dy) in &dist {
        let (dx, dy) = (int(dx as i64), int(dy as i64));
        let need = (&dy - &c * &dx).max(&dx / &c - &dy);
        if let Some((_, d)) = &f.constants {
            if need > *d && violation.is_none() {
                violation = Some((w.point(a).clone(), w.point(b).clone()));
            }
        }
        d_min = d_min.max(need);
        bilip = match bilip {
            Some(l) if dy.is_positive() => Some(l.max(&dy / &dx).max(&dx / &dy)),
            _ => None,
        };
    }
    Ok(QIReport {
        pairs: dist.len(),
        c,
        d_min,
        bilipschitz: bilip,
        violation,
    })
}

/// `sum_y |f^{-1}(y) cap interior(w_src)| y` as an integral 0-chain on `w_tgt`.
pub fn pushforward_fundamental(f: &QIMap, w_src: &Window, w_tgt: &Window) -> Result<UFChain> {
    let mut out = UFChain::zero(0, Ring::Int);
    for i in w_src.interior_indices() {
        let y = f.apply(w_src.point(i))?;
        if w_tgt.index_of(&y).is_none() {
            return Err(Error::Window(format!(
                "image {y} of {} lies outside the target window",
                w_src.point(i)
            )));
        }
        out.add_term(vec![y], Rat::one())?;
    }
    Ok(out)
}

/// Source window containing every preimage of the target window: from
/// `d(x,a) <= C (d(fx, fa) + D)`.
pub fn source_window_for(f: &QIMap, tgt: &Window) -> Result<Window> {
    let (c, d) = f.declared()?;
    let center = tgt
        .center()
        .ok_or_else(|| Error::Contract("preimage windows need a ball target".into()))?;
    let anchor = f.preimage_hint(center);
    let fa = f.apply(&anchor)?;
    let reach = tgt.radius().unwrap_or(0) + f.target.distance(&fa, center);
    let radius = (c * (int(reach as i64) + d)).ceil();
    let radius = radius
        .to_u64()
        .ok_or_else(|| Error::Contract("source radius out of range".into()))?;
    build_window(&f.source, &anchor, radius, 0)
}

/// Obstruction data on one target window: the source window, the
/// preimages of every interior target point, and the demands
/// `|f^{-1}(y)| - 1` on the interior.
#[derive(Clone, Debug)]
pub struct ObstructionWindow {
    pub source: Window,
    pub target: Window,
    /// Target index -> sorted source indices mapping there (interior only).
    pub preimages: BTreeMap<usize, Vec<usize>>,
    pub demands: Vec<Rat>,
}

pub fn obstruction_window(f: &QIMap, spec: &WindowSpec, r: u64) -> Result<ObstructionWindow> {
    let target = spec.build(&f.target, r)?;
    let source = source_window_for(f, &target)?;
    let mut preimages: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, x) in source.points().iter().enumerate() {
        let y = f.apply(x)?;
        if let Some(t) = target.index_of(&y) {
            if target.is_interior(t) {
                preimages.entry(t).or_default().push(i);
            }
        }
    }
    let demands = (0..target.len())
        .map(|t| {
            if target.is_interior(t) {
                int(preimages.get(&t).map_or(0, Vec::len) as i64 - 1)
            } else {
                Rat::zero()
            }
        })
        .collect();
    Ok(ObstructionWindow {
        source,
        target,
        preimages,
        demands,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Inconclusive,
}

impl Answer {
    pub fn label(self) -> &'static str {
        match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
            Answer::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilipVerdict {
    pub answer: Answer,
    /// Verdict for the obstruction `f_*[X] - [Y]` over Z.
    pub class: ClassVerdict,
    /// Matching on the last scheduled window, for YES answers.
    pub matching: Option<MatchingCertificate>,
}

impl BilipVerdict {
    pub fn is_conclusive(&self) -> bool {
        self.class.is_conclusive()
    }
}

/// Is `f` uniformly close to a bilipschitz equivalence? Decided from the
/// integral class of `f_*[X] - [Y]` over a schedule of target windows.
pub fn bilipschitz_verdict(f: &QIMap, r: u64, schedule: &[WindowSpec]) -> Result<BilipVerdict> {
    let pattern = f.obstruction_pattern();
    let mut inputs = Vec::with_capacity(schedule.len());
    let mut last = None;
    for spec in schedule {
        let ow = obstruction_window(f, spec, r)?;
        if let Some(p) = &pattern {
            let expected = p.materialize(&ow.target, Ring::Int)?;
            for t in ow.target.interior_indices() {
                let e = expected.coefficient(std::slice::from_ref(ow.target.point(t)));
                if e != ow.demands[t] {
                    return Err(Error::Contract(format!(
                        "pushforward at {} is {} but the pattern predicts {e}",
                        ow.target.point(t),
                        ow.demands[t]
                    )));
                }
            }
        }
        inputs.push(VerdictWindow {
            spec: spec.clone(),
            window: ow.target.clone(),
            demands: ow.demands.clone(),
        });
        last = Some(ow);
    }
    let global = match &pattern {
        Some(p) => global_certificate(p, &f.target, r, Ring::Int)?,
        None => None,
    };
    let class = verdict_from_windows(inputs, global, r, Ring::Int)?;
    let answer = match class.verdict {
        Verdict::Trivial { .. } => Answer::Yes,
        Verdict::Nontrivial { .. } => Answer::No,
        Verdict::Inconclusive { .. } => Answer::Inconclusive,
    };
    let matching = match (answer, last, class.certificates.last()) {
        (Answer::Yes, Some(ow), Some(flow)) => Some(extract_bounded_matching(f, &ow, flow)?),
        _ => None,
    };
    Ok(BilipVerdict {
        answer,
        class,
        matching,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingCertificate {
    /// `(source point, matched target point)`, sorted by source.
    pub pairs: Vec<(Point, Point)>,
    /// Interior target points filled by an item entering from outside the
    /// window.
    pub external_fills: Vec<Point>,
    /// Source points whose items leave the window through the frontier.
    pub exported: Vec<Point>,
    /// `max d(f(x), match(x))` over matched pairs.
    pub displacement: u64,
    /// Every interior target point receives exactly one item and no item is
    /// used twice.
    pub bijective: bool,
    /// Bilipschitz constant of the matching on matched pairs (source metric
    /// against target metric), if it is injective.
    pub bilipschitz: Option<Rat>,
}

impl MatchingCertificate {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("source\ttarget\tkind\n");
        for (x, y) in &self.pairs {
            s.push_str(&format!("{x}\t{y}\tmatched\n"));
        }
        for y in &self.external_fills {
            s.push_str(&format!("-\t{y}\texternal\n"));
        }
        for x in &self.exported {
            s.push_str(&format!("{x}\t-\texported\n"));
        }
        s
    }

    /// Apply the matching to a 0-chain on the source.
    pub fn relabel(&self, c: &UFChain) -> Result<UFChain> {
        let map: HashMap<&Point, &Point> = self.pairs.iter().map(|(x, y)| (x, y)).collect();
        c.pushforward(|x| map.get(x).map(|y| (*y).clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    /// Source point index.
    Source(usize),
    /// Token entering through a frontier point (target index).
    External(usize),
}

/// Remove directed cycles from an integral flow given as `(u, v) -> amount`.
fn cancel_cycles(n: usize, flow: &mut BTreeMap<(usize, usize), i64>) {
    loop {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (&(u, v), &a) in flow.iter() {
            if a > 0 {
                adj[u].push(v);
            }
        }
        // iterative DFS for a back edge
        let mut state = vec![0u8; n];
        let mut parent = vec![usize::MAX; n];
        let mut cycle = None;
        'outer: for s in 0..n {
            if state[s] != 0 {
                continue;
            }
            let mut stack = vec![(s, 0usize)];
            state[s] = 1;
            while let Some(&mut (u, ref mut k)) = stack.last_mut() {
                if *k < adj[u].len() {
                    let v = adj[u][*k];
                    *k += 1;
                    match state[v] {
                        0 => {
                            state[v] = 1;
                            parent[v] = u;
                            stack.push((v, 0));
                        }
                        1 => {
                            // u -> v closes a cycle v -> ... -> u
                            let mut path = vec![u];
                            let mut x = u;
                            while x != v {
                                x = parent[x];
                                path.push(x);
                            }
                            path.reverse();
                            cycle = Some(path);
                            break 'outer;
                        }
                        _ => {}
                    }
                } else {
                    state[u] = 2;
                    stack.pop();
                }
            }
        }
        let Some(cyc) = cycle else { return };
        let edges: Vec<(usize, usize)> = (0..cyc.len())
            .map(|i| (cyc[i], cyc[(i + 1) % cyc.len()]))
            .collect();
        let m = edges.iter().map(|e| flow[e]).min().unwrap_or(0);
        for e in edges {
            *flow.get_mut(&e).expect("cycle edge") -= m;
        }
        flow.retain(|_, a| *a > 0);
    }
}

/// Route preimage items along an integral flow trivializing the obstruction
/// and read off a matching of source points to interior target points.
///
/// Items move against the flow (the flow's boundary is the obstruction, so
/// surplus points are sources of items). After cancelling cycles, interior
/// points are processed in topological order; each keeps an item entering
/// from outside if it has one, otherwise the item that has travelled
/// farthest, and sends the rest out nearest-first along its outgoing edges
/// in lexicographic order.
pub fn extract_bounded_matching(
    f: &QIMap,
    ow: &ObstructionWindow,
    flow: &FlowAssignment,
) -> Result<MatchingCertificate> {
    if !flow.is_integral() {
        return Err(Error::Contract(
            "matching extraction needs an integral flow".into(),
        ));
    }
    let tgt = &ow.target;
    let n = tgt.len();
    let mut internal: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut ext_in: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
    let mut export: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
    for e in &flow.edges {
        // item movement is the reverse of the flow
        let amt = e
            .flow
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::Contract("flow out of range".into()))?;
        let (from, to, k) = if amt < 0 {
            (e.from, e.to, -amt)
        } else {
            (e.to, e.from, amt)
        };
        match (tgt.is_interior(from), tgt.is_interior(to)) {
            (true, true) => *internal.entry((from, to)).or_default() += k,
            (false, true) => ext_in.entry(to).or_default().push((from, k)),
            (true, false) => export.entry(from).or_default().push((to, k)),
            (false, false) => {}
        }
    }
    if !flow.frontier_exchange.is_empty() {
        return Err(Error::Contract(
            "matching extraction expects a free-frontier flow".into(),
        ));
    }
    // conservation: own + in - out = 1 on the interior
    let interior = tgt.interior_indices();
    for &y in &interior {
        let own = ow.preimages.get(&y).map_or(0, Vec::len) as i64;
        let inflow: i64 = internal
            .iter()
            .filter(|((_, v), _)| *v == y)
            .map(|(_, a)| a)
            .sum::<i64>()
            + ext_in.get(&y).map_or(0, |v| v.iter().map(|(_, k)| k).sum());
        let outflow: i64 = internal
            .iter()
            .filter(|((u, _), _)| *u == y)
            .map(|(_, a)| a)
            .sum::<i64>()
            + export.get(&y).map_or(0, |v| v.iter().map(|(_, k)| k).sum());
        if own + inflow - outflow != 1 {
            return Err(Error::Contract(format!(
                "flow does not balance preimages at {}",
                tgt.point(y)
            )));
        }
    }
    cancel_cycles(n, &mut internal);

    // topological order, smallest index first
    let mut indeg = vec![0usize; n];
    let mut out_edges: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for (&(u, v), &a) in &internal {
        indeg[v] += 1;
        out_edges[u].push((v, a));
    }
    let mut ready: BTreeSet<usize> = interior
        .iter()
        .copied()
        .filter(|&y| indeg[y] == 0)
        .collect();
    let mut inbox: Vec<Vec<Item>> = vec![Vec::new(); n];
    for (&y, list) in &ext_in {
        for &(z, k) in list {
            inbox[y].extend(std::iter::repeat_n(Item::External(z), k as usize));
        }
    }
    let image_of = |i: usize| -> Result<Point> { f.apply(ow.source.point(i)) };
    let travel = |item: &Item, at: usize| -> Result<u64> {
        match item {
            Item::Source(i) => Ok(f.target.distance(&image_of(*i)?, tgt.point(at))),
            Item::External(_) => Ok(u64::MAX),
        }
    };
    let mut kept: BTreeMap<usize, Item> = BTreeMap::new();
    let mut exported = Vec::new();
    let mut processed = 0;
    while let Some(y) = ready.pop_first() {
        processed += 1;
        let mut items = std::mem::take(&mut inbox[y]);
        if let Some(own) = ow.preimages.get(&y) {
            items.extend(own.iter().map(|&i| Item::Source(i)));
        }
        let mut keyed: Vec<(u64, Item)> = items
            .into_iter()
            .map(|it| Ok((travel(&it, y)?, it)))
            .collect::<Result<_>>()?;
        // farthest first; ties by item order
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        if keyed.is_empty() {
            return Err(Error::Contract(format!("no item reaches {}", tgt.point(y))));
        }
        kept.insert(y, keyed.remove(0).1);
        keyed.reverse();
        let mut outs: Vec<(Point, usize, i64, bool)> = out_edges[y]
            .iter()
            .map(|&(v, a)| (tgt.point(v).clone(), v, a, false))
            .chain(
                export
                    .get(&y)
                    .into_iter()
                    .flatten()
                    .map(|&(v, a)| (tgt.point(v).clone(), v, a, true)),
            )
            .collect();
        outs.sort();
        let mut queue = keyed.into_iter().map(|(_, it)| it);
        for (_, v, a, leaves) in outs {
            for _ in 0..a {
                let it = queue
                    .next()
                    .ok_or_else(|| Error::Contract("item shortage while routing".into()))?;
                if leaves {
                    if let Item::Source(i) = it {
                        exported.push(ow.source.point(i).clone());
                    }
                } else {
                    inbox[v].push(it);
                }
            }
            if !leaves {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        if queue.next().is_some() {
            return Err(Error::Contract("items left over after routing".into()));
        }
    }
    if processed != interior.len() {
        return Err(Error::Contract(
            "flow has a cycle after cancellation".into(),
        ));
    }

    let mut pairs = Vec::new();
    let mut external_fills = Vec::new();
    let mut displacement = 0;
    let mut used = BTreeSet::new();
    let mut bijective = kept.len() == interior.len();
    for (&y, item) in &kept {
        match item {
            Item::Source(i) => {
                bijective &= used.insert(*i);
                displacement = displacement.max(travel(item, y)?);
                pairs.push((ow.source.point(*i).clone(), tgt.point(y).clone()));
            }
            Item::External(_) => external_fills.push(tgt.point(y).clone()),
        }
    }
    pairs.sort();
    exported.sort();
    let mut bilip = Some(Rat::one());
    for a in 0..pairs.len() {
        for b in a + 1..pairs.len() {
            let dx = f.source.distance(&pairs[a].0, &pairs[b].0) as i64;
            let dy = f.target.distance(&pairs[a].1, &pairs[b].1) as i64;
            bilip = match bilip {
                Some(l) if dy > 0 => Some(
                    l.max(Rat::new(dy.into(), dx.into()))
                        .max(Rat::new(dx.into(), dy.into())),
                ),
                _ => None,
            };
        }
    }
    Ok(MatchingCertificate {
        pairs,
        external_fills,
        exported,
        displacement,
        bijective,
        bilipschitz: bilip,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupHomReport {
    pub kernel: u64,
    pub cokernel: u64,
    pub predicted: Answer,
    pub measured: BilipVerdict,
    /// Mean of `f_*[G]` over one period.
    pub pushforward_mean: Rat,
    /// `|ker| / |coker|` times the mean of `[H]`.
    pub predicted_mean: Rat,
}

impl GroupHomReport {
    pub fn agrees(&self) -> bool {
        self.predicted == self.measured.answer && self.pushforward_mean == self.predicted_mean
    }
}

/// Homomorphism `x -> M x` of `Z^d`: index prediction against the measured
/// bilipschitz verdict, and the pushforward of the real fundamental class.
pub fn group_hom_report(m: &[Vec<i64>], r: u64, schedule: &[WindowSpec]) -> Result<GroupHomReport> {
    let d = m.len();
    if d == 0 || m.iter().any(|row| row.len() != d) {
        return Err(Error::Domain(
            "homomorphisms are given by square integer matrices".into(),
        ));
    }
    let det = determinant(m);
    if det == 0 {
        return Err(Error::Domain(
            "singular matrix: infinite kernel and cokernel".into(),
        ));
    }
    let (kernel, cokernel) = (1u64, det.unsigned_abs());
    let lattice = Presentation::lattice(d);
    let f = QIMap::new(
        lattice.clone(),
        lattice.clone(),
        MapRule::Linear(m.to_vec()),
    )?;
    let measured = bilipschitz_verdict(&f, r, schedule)?;
    let push = f
        .pushforward_pattern()
        .ok_or_else(|| Error::Contract("linear maps have a pushforward pattern".into()))?;
    let pushforward_mean = periodic_average(&push, &lattice).expect("lattice data is periodic")?;
    let target_mean =
        periodic_average(&ChainPattern::fundamental(), &lattice).expect("constant is periodic")?;
    Ok(GroupHomReport {
        kernel,
        cokernel,
        predicted: if kernel == cokernel {
            Answer::Yes
        } else {
            Answer::No
        },
        measured,
        pushforward_mean,
        predicted_mean: Rat::new((kernel as i64).into(), (cokernel as i64).into()) * target_mean,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AveragingReport {
    pub n: i64,
    pub degree: usize,
    /// `1 + (2^{k+1} - 1) / n`.
    pub bound: Rat,
    /// Operator norm of the averaged map on chains supported in the window,
    /// from preimage counts.
    pub exact_norm: Rat,
    /// Largest `||phi(c)|| / ||c||` over the sampled chains.
    pub sampled_norm: Rat,
    pub identity_checks: usize,
    pub identity_failures: usize,
}

impl AveragingReport {
    pub fn holds(&self) -> bool {
        self.identity_failures == 0
            && self.sampled_norm <= self.bound
            && self.exact_norm <= self.bound
    }
}

/// `phi(c) = (1/n) sum_j (f_j)_* c` for the squares retractions.
pub fn averaging_map(n: i64, c: &UFChain) -> Result<UFChain> {
    let z = Presentation::lattice(1);
    let target = Presentation::subset(1, SubsetRule::NonSquares)?;
    let mut acc = UFChain::zero(c.degree(), Ring::Rat);
    for j in 1..=n {
        let fj = QIMap::new(
            z.clone(),
            target.clone(),
            MapRule::SquaresRetraction { n, j },
        )?;
        acc = acc.add(&c.pushforward(|x| fj.apply(x).ok())?.with_ring(Ring::Rat))?;
    }
    Ok(acc.scale(&Rat::new(1.into(), n.into())))
}

fn random_chain(
    rng: &mut ChaCha8Rng,
    pool: &[Point],
    degree: usize,
    spread: i64,
    terms: usize,
) -> Result<UFChain> {
    let mut c = UFChain::zero(degree, Ring::Rat);
    for _ in 0..terms {
        let base = pool[rng.gen_range(0..pool.len())].0[0];
        let mut tuple = vec![Point::int(base)];
        for _ in 0..degree {
            let cand: Vec<&Point> = pool
                .iter()
                .filter(|p| (p.0[0] - base).abs() <= spread)
                .collect();
            tuple.push(cand[rng.gen_range(0..cand.len())].clone());
        }
        let v = rng.gen_range(-5i64..=5);
        c.add_term(tuple, int(v))?;
    }
    Ok(c)
}

/// Check the averaging chain map of the squares retractions on
/// `[-radius, radius]`: `phi o i_* = id` on random chains of `Z \ A`, and
/// `||phi_k|| <= 1 + (2^{k+1} - 1)/n` both exactly (preimage counts) and on
/// random and extremal chains of `Z`.
pub fn averaging_chain_map(
    n: i64,
    degree: usize,
    radius: u64,
    samples: usize,
    seed: u64,
) -> Result<AveragingReport> {
    if n < 1 {
        return Err(Error::Contract("n must be positive".into()));
    }
    if (radius as i64) < n * n {
        return Err(Error::Window(format!(
            "window radius {radius} is below n^2 = {}",
            n * n
        )));
    }
    let z = Presentation::lattice(1);
    let w = build_window(&z, &Point::int(0), radius, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nonsquares: Vec<Point> = w
        .points()
        .iter()
        .filter(|p| !is_square(p.0[0]))
        .cloned()
        .collect();
    let squares: Vec<i64> = w
        .points()
        .iter()
        .map(|p| p.0[0])
        .filter(|&v| is_square(v))
        .collect();
    let bound = Rat::one() + Rat::new(((1i64 << (degree + 1)) - 1).into(), n.into());

    let mut failures = 0;
    for _ in 0..samples {
        let c = random_chain(&mut rng, &nonsquares, degree, 3, 6)?;
        if averaging_map(n, &c)? != c {
            failures += 1;
        }
    }

    let mut sampled = Rat::zero();
    let mut consider = |c: &UFChain| -> Result<()> {
        let norm = c.sup_norm();
        if norm.is_positive() {
            sampled = sampled.clone().max(averaging_map(n, c)?.sup_norm() / norm);
        }
        Ok(())
    };
    for _ in 0..samples {
        consider(&random_chain(&mut rng, w.points(), degree, 3, 8)?)?;
    }
    // extremal chains: all preimage tuples of the constant tuple at f_1(a)
    for &a in &squares {
        let y = if a >= n * n { a + 1 } else { -n * a - 1 };
        let mut c = UFChain::zero(degree, Ring::Rat);
        for mask in 0..(1u32 << (degree + 1)) {
            let tuple = (0..=degree)
                .map(|i| Point::int(if mask >> i & 1 == 1 { a } else { y }))
                .collect();
            c.add_term(tuple, Rat::one())?;
        }
        consider(&c)?;
    }

    // exact norm: (1/n) max over y-tuples of sum_j prod_i (1 + [y_i in f_j(A)])
    let mut owner: BTreeMap<i64, i64> = BTreeMap::new();
    for j in 1..=n {
        for &a in &squares {
            owner.insert(if a >= n * n { a + j } else { -n * a - j }, j);
        }
    }
    let mut candidates: Vec<Option<i64>> = owner
        .values()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(Some)
        .collect();
    candidates.push(None);
    let mut best = 0i64;
    let mut idx = vec![0usize; degree + 1];
    loop {
        let total: i64 = (1..=n)
            .map(|j| {
                idx.iter()
                    .map(|&k| if candidates[k] == Some(j) { 2 } else { 1 })
                    .product::<i64>()
            })
            .sum();
        best = best.max(total);
        let mut pos = 0;
        while pos <= degree {
            idx[pos] += 1;
            if idx[pos] < candidates.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos > degree {
            break;
        }
    }

    Ok(AveragingReport {
        n,
        degree,
        bound,
        exact_norm: Rat::new(best.into(), n.into()),
        sampled_norm: sampled,
        identity_checks: samples,
        identity_failures: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::rat;

    fn z() -> Presentation {
        Presentation::lattice(1)
    }

    fn evens() -> Presentation {
        Presentation::residues(2, &[0]).unwrap()
    }

    fn centered(p: &Presentation, radii: &[u64]) -> Vec<WindowSpec> {
        radii.iter().map(|&r| WindowSpec::centered(p, r)).collect()
    }

    #[test]
    fn qi_constants() {
        let w = build_window(&z(), &Point::int(0), 12, 0).unwrap();
        let id = QIMap::new(z(), z(), MapRule::Identity).unwrap();
        let rep = verify_qi(&id, &w).unwrap();
        assert_eq!((rep.c.clone(), rep.d_min.clone()), (int(1), int(0)));
        assert_eq!(rep.bilipschitz, Some(int(1)));

        let we = build_window(&evens(), &Point::int(0), 12, 0).unwrap();
        let inc = QIMap::new(evens(), z(), MapRule::Inclusion).unwrap();
        let rep = verify_qi(&inc, &we).unwrap();
        assert_eq!((rep.c, rep.d_min), (int(1), int(0)));

        let half = QIMap::new(z(), z(), MapRule::FloorDiv(2)).unwrap();
        let rep = verify_qi(&half, &w).unwrap();
        assert_eq!(rep.c, int(2));
        assert_eq!(rep.d_min, rat(1, 2));
        assert!(rep.holds());
        assert_eq!(rep.bilipschitz, None);
    }

    #[test]
    fn retraction_constants_are_measured() {
        let f = QIMap::new(
            z(),
            Presentation::subset(1, SubsetRule::NonSquares).unwrap(),
            MapRule::SquaresRetraction { n: 3, j: 2 },
        )
        .unwrap();
        assert_eq!(f.apply(&Point::int(4)).unwrap(), Point::int(-14));
        assert_eq!(f.apply(&Point::int(9)).unwrap(), Point::int(11));
        assert_eq!(f.apply(&Point::int(0)).unwrap(), Point::int(-2));
        assert_eq!(f.apply(&Point::int(5)).unwrap(), Point::int(5));
        let w = build_window(&z(), &Point::int(0), 12, 0).unwrap();
        let rep = verify_qi(&f, &w).unwrap();
        assert!(rep.c >= int(3));
        assert!(rep.holds());
    }

    #[test]
    fn pushforwards() {
        let ws = build_window(&z(), &Point::int(0), 10, 0).unwrap();
        let wt = build_window(&z(), &Point::int(0), 10, 0).unwrap();
        let id = QIMap::new(z(), z(), MapRule::Identity).unwrap();
        let c = pushforward_fundamental(&id, &ws, &wt).unwrap();
        assert!(c.terms().values().all(|v| *v == int(1)) && c.len() == 21);

        let we = build_window(&evens(), &Point::int(0), 10, 0).unwrap();
        let inc = QIMap::new(evens(), z(), MapRule::Inclusion).unwrap();
        let c = pushforward_fundamental(&inc, &we, &wt).unwrap();
        assert_eq!(c.len(), 11);
        assert!(c.terms().keys().all(|s| s[0].0[0] % 2 == 0));

        let half = QIMap::new(z(), z(), MapRule::FloorDiv(2)).unwrap();
        let ws = build_window(&z(), &Point::int(0), 20, 0).unwrap();
        let c = pushforward_fundamental(&half, &ws, &wt).unwrap();
        for y in -9..=9 {
            assert_eq!(c.coefficient(&[Point::int(y)]), int(2));
        }
        let small = build_window(&z(), &Point::int(0), 3, 0).unwrap();
        assert!(matches!(
            pushforward_fundamental(&id, &ws, &small),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn pushforward_keeps_nonnegative_cycles_nonnegative() {
        let half = QIMap::new(z(), z(), MapRule::FloorDiv(3)).unwrap();
        let mut c = UFChain::zero(0, Ring::Int);
        for x in -7..=7i64 {
            c.add_term(vec![Point::int(x)], int(x.rem_euclid(4)))
                .unwrap();
        }
        let p = c.pushforward(|x| half.apply(x).ok()).unwrap();
        assert!(p.terms().values().all(|v| !v.is_negative()));
    }

    #[test]
    fn identity_is_bilipschitz_everywhere() {
        let presentations = [
            z(),
            Presentation::lattice(2),
            Presentation::regular_tree(3).unwrap(),
            Presentation::free_group(2).unwrap(),
        ];
        for p in presentations {
            let id = QIMap::new(p.clone(), p.clone(), MapRule::Identity).unwrap();
            let v = bilipschitz_verdict(&id, 1, &centered(&p, &[2, 3])).unwrap();
            assert_eq!(v.answer, Answer::Yes, "{p:?}");
            assert!(v.is_conclusive());
            let m = v.matching.unwrap();
            assert_eq!(m.displacement, 0);
            assert!(m.bijective && m.external_fills.is_empty());
        }
    }

    #[test]
    fn shift_is_matched_by_itself() {
        let f = QIMap::new(z(), z(), MapRule::Shift(vec![5])).unwrap();
        let v = bilipschitz_verdict(&f, 1, &centered(&z(), &[6, 8])).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        let m = v.matching.unwrap();
        assert_eq!(m.displacement, 0);
        assert!(m.pairs.iter().all(|(x, y)| y.0[0] == x.0[0] + 5));
    }

    #[test]
    fn even_inclusion_is_not_bilipschitz() {
        let f = QIMap::new(evens(), z(), MapRule::Inclusion).unwrap();
        let v = bilipschitz_verdict(&f, 1, &centered(&z(), &[20, 40, 80])).unwrap();
        assert_eq!(v.answer, Answer::No);
        for (w, n) in v.class.windows.iter().zip([20i64, 40, 80]) {
            assert!(w.deficit.clone().unwrap() >= int(n / 4 - 1));
        }
    }

    #[test]
    fn squares_complement_inclusion_is_not_bilipschitz() {
        let f = QIMap::new(
            Presentation::subset(1, SubsetRule::NonSquares).unwrap(),
            z(),
            MapRule::Inclusion,
        )
        .unwrap();
        let sched: Vec<WindowSpec> = [100u64, 400, 900]
            .iter()
            .map(|&n| WindowSpec::interval(0, n / 2))
            .collect();
        let v = bilipschitz_verdict(&f, 1, &sched).unwrap();
        assert_eq!(v.answer, Answer::No);
    }

    #[test]
    fn doubling_projection_of_the_tree() {
        let t = Presentation::regular_tree(3).unwrap();
        let f = QIMap::new(
            Presentation::doubling(t.clone()),
            t.clone(),
            MapRule::DoublingProjection,
        )
        .unwrap();
        let v = bilipschitz_verdict(&f, 1, &centered(&t, &[4, 5, 6])).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        assert!(v.is_conclusive());
        let m = v.matching.unwrap();
        assert!(m.bijective);
        assert!(m.displacement <= 4, "displacement {}", m.displacement);
        // relabeling through the matching preserves sup norms
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut c = UFChain::zero(0, Ring::Int);
            for (x, _) in m.pairs.iter().take(30) {
                c.add_term(vec![x.clone()], int(rng.gen_range(-4..=4)))
                    .unwrap();
            }
            assert_eq!(m.relabel(&c).unwrap().sup_norm(), c.sup_norm());
        }
        assert!(m.bilipschitz.is_some());
    }

    #[test]
    fn homomorphisms() {
        let z2 = Presentation::lattice(2);
        let rep = group_hom_report(&[vec![2]], 1, &centered(&z(), &[20, 40, 80])).unwrap();
        assert_eq!((rep.kernel, rep.cokernel), (1, 2));
        assert_eq!(rep.predicted, Answer::No);
        assert!(rep.agrees());

        let rep = group_hom_report(&[vec![1]], 1, &centered(&z(), &[5, 10])).unwrap();
        assert_eq!(rep.predicted, Answer::Yes);
        assert!(rep.agrees());

        let rep =
            group_hom_report(&[vec![2, 0], vec![0, 3]], 1, &centered(&z2, &[4, 8, 16])).unwrap();
        assert_eq!(rep.cokernel, 6);
        assert_eq!(rep.pushforward_mean, rat(1, 6));
        assert!(rep.agrees());

        let rep = group_hom_report(&[vec![0, 1], vec![1, 0]], 1, &centered(&z2, &[3, 4])).unwrap();
        assert_eq!(rep.measured.answer, Answer::Yes);
        assert!(matches!(
            group_hom_report(&[vec![0]], 1, &[]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn averaging_map_bounds() {
        for (n, k) in [(4, 0), (8, 1), (1, 0), (2, 1)] {
            let rep = averaging_chain_map(n, k, (n * n) as u64 + 4, 20, 7).unwrap();
            assert!(rep.holds(), "{rep:?}");
            assert_eq!(rep.exact_norm, rep.bound);
            assert_eq!(rep.sampled_norm, rep.bound);
        }
        assert!(matches!(
            averaging_chain_map(8, 0, 10, 1, 0),
            Err(Error::Window(_))
        ));
    }
}
