//! Degree-0 classes: vanishing verdicts from bounded transport, Folner
//! means, and bounds on the semi-norm.

use num_traits::{One, Signed, Zero};

use crate::chain::{constant_chain, ChainPattern, Ring, UFChain};
use crate::error::{Error, Result};
use crate::space::{
    build_torus, build_window, r_boundary, FolnerFamily, Point, Presentation, Window,
};
use crate::transport::{
    demands_from_chain, feasible_divergence_flow, min_feasible_capacity, min_uniform_slack,
    CutWitness, DivergenceProblem, FlowAssignment, FlowCertificate, FrontierPolicy, MinCapacity,
};
use crate::Rat;

/// Capacity used to report the deficit `|sum_F c| - C * |d_r F|` of a witness.
pub const REFERENCE_CAPACITY: i64 = 1;

/// Growth factor across three consecutive windows that triggers a
/// nontrivial verdict.
pub const DIVERGENCE_FACTOR: i64 = 2;

/// The all-ones 0-chain on the window.
pub fn fundamental_class(w: &Window, ring: Ring) -> UFChain {
    constant_chain(w.points(), Rat::one(), ring)
}

/// A ball window in a schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub center: Point,
    pub radius: u64,
}

impl WindowSpec {
    pub fn new(center: Point, radius: u64) -> Self {
        WindowSpec { center, radius }
    }

    /// Ball around the presentation's base point.
    pub fn centered(p: &Presentation, radius: u64) -> Self {
        WindowSpec::new(p.base_point(), radius)
    }

    /// The interval `[lo, lo + 2h]` of a one-dimensional lattice.
    pub fn interval(lo: i64, half: u64) -> Self {
        WindowSpec::new(Point::int(lo + half as i64), half)
    }

    pub fn build(&self, p: &Presentation, margin: u64) -> Result<Window> {
        build_window(p, &self.center, self.radius, margin)
    }
}

/// Outcome on one scheduled window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowResult {
    pub spec: WindowSpec,
    pub interior_size: usize,
    /// Least capacity on this window; `None` when no capacity works.
    pub c_min: Option<Rat>,
    /// Tight cut at `c_min` (absent when `c_min = 0`).
    pub witness: Option<CutWitness>,
    /// `|d_r F|` of the witness.
    pub witness_boundary: Option<usize>,
    /// `|sum_F c| - REFERENCE_CAPACITY * |d_r F|`.
    pub deficit: Option<Rat>,
}

/// How a global (whole-space) flow was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlobalMethod {
    /// The cycle is zero.
    Zero,
    /// Solved on a torus; the flow lifts periodically.
    Torus { periods: Vec<i64> },
    /// Constant cycle on a regular tree of the given degree: every point
    /// sends the same amount towards a fixed end.
    Horocyclic { degree: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalCertificate {
    pub method: GlobalMethod,
    /// Capacity of the global flow; `None` when none exists (torus only).
    pub capacity: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// A flow with `|b| <= capacity` and propagation `r` exists on every
    /// window; conclusive when a global flow backs it.
    Trivial {
        capacity: Rat,
        conclusive: bool,
    },
    /// Minimal capacities diverge across the schedule; `window` indexes the
    /// result whose cut is reported.
    Nontrivial {
        window: usize,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassVerdict {
    pub ring: Ring,
    pub r: u64,
    pub windows: Vec<WindowResult>,
    pub global: Option<GlobalCertificate>,
    pub verdict: Verdict,
    /// Flows at the verdict capacity, one per window, for trivial verdicts.
    pub certificates: Vec<FlowAssignment>,
}

impl ClassVerdict {
    pub fn is_trivial(&self) -> bool {
        matches!(self.verdict, Verdict::Trivial { .. })
    }

    pub fn is_nontrivial(&self) -> bool {
        matches!(self.verdict, Verdict::Nontrivial { .. })
    }

    /// Conclusive verdicts are nontrivial ones (backed by a margin-correct
    /// cut) and trivial ones backed by a global flow.
    pub fn is_conclusive(&self) -> bool {
        match &self.verdict {
            Verdict::Trivial { conclusive, .. } => *conclusive,
            Verdict::Nontrivial { .. } => true,
            Verdict::Inconclusive { .. } => false,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.verdict {
            Verdict::Trivial { .. } => "trivial",
            Verdict::Nontrivial { .. } => "nontrivial",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    /// Columns: `window_radius, C_min, verdict, witness_size`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("window_radius\tC_min\tverdict\twitness_size\n");
        for w in &self.windows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                w.spec.radius,
                w.c_min
                    .as_ref()
                    .map_or_else(|| "inf".to_string(), |c| c.to_string()),
                self.label(),
                w.witness.as_ref().map_or(0, |c| c.set.len())
            ));
        }
        s
    }
}

fn ceil_for(ring: Ring, c: &Rat) -> Rat {
    match ring {
        Ring::Int => c.ceil(),
        Ring::Rat => c.clone(),
    }
}

/// `a < b` with `None` standing for an infinite capacity.
fn below(a: &Option<Rat>, b: &Option<Rat>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

fn diverges(cs: &[Option<Rat>]) -> Option<usize> {
    let factor = Rat::from_integer(DIVERGENCE_FACTOR.into());
    (0..cs.len().saturating_sub(2)).rev().find(|&i| {
        let (a, b, c) = (&cs[i], &cs[i + 1], &cs[i + 2]);
        let doubled = match (a, c) {
            (Some(a), Some(c)) => *c >= &factor * a,
            _ => true,
        };
        below(a, b) && below(b, c) && doubled
    })
}

/// Smallest torus on which a lattice-periodic pattern can be solved with
/// propagation `r`, or `None` when the data is not periodic.
pub fn periodic_torus(pattern: &ChainPattern, p: &Presentation, r: u64) -> Option<Result<Window>> {
    let own = p.period()?;
    let pat = pattern.period()?;
    let mut periods = crate::chain::combine_periods(&own, &pat);
    for l in periods.iter_mut() {
        let k = num_integer::Integer::div_ceil(&(2 * r as i64 + 1), l).max(1);
        *l *= k;
    }
    Some(build_torus(p, &periods))
}

/// Flow at capacity `c` on `w`, which is known to be feasible there.
fn certificate(w: &Window, r: u64, demands: Vec<Rat>, c: &Rat) -> Result<FlowAssignment> {
    let p = DivergenceProblem {
        window: w,
        r,
        capacity: c.clone(),
        demands,
        frontier: FrontierPolicy::Free,
    };
    match feasible_divergence_flow(&p)? {
        FlowCertificate::Flow(f) => Ok(f),
        FlowCertificate::Cut(_) => Err(Error::Contract(format!(
            "capacity {c} unexpectedly infeasible"
        ))),
    }
}

fn window_result(
    spec: &WindowSpec,
    w: &Window,
    r: u64,
    demands: &[Rat],
    m: &MinCapacity,
) -> Result<WindowResult> {
    let witness = m.witness().cloned();
    let (witness_boundary, deficit) = match &witness {
        Some(cut) => {
            let collar = r_boundary(w, &cut.set, r)?.len();
            let sum: Rat = cut.set.iter().map(|&i| demands[i].clone()).sum();
            let deficit =
                sum.abs() - Rat::from_integer((REFERENCE_CAPACITY * collar as i64).into());
            (Some(collar), Some(deficit))
        }
        None => (None, None),
    };
    Ok(WindowResult {
        spec: spec.clone(),
        interior_size: w.interior_indices().len(),
        c_min: m.capacity().cloned(),
        witness,
        witness_boundary,
        deficit,
    })
}

fn end_letter(p: &Presentation, i: usize) -> i64 {
    match p {
        Presentation::RegularTree { .. } => 1 + (i % 2) as i64,
        _ => 1,
    }
}

/// Length of the longest prefix of `x` that lies on the ray towards the end.
fn ray_prefix(p: &Presentation, x: &Point) -> usize {
    x.0.iter()
        .enumerate()
        .take_while(|&(i, &l)| l == end_letter(p, i))
        .count()
}

/// Neighbour of a tree point one step closer to a fixed end: `1 2 1 2 ...`
/// for regular trees, `1 1 1 ...` for free groups.
fn toward_end(p: &Presentation, x: &Point) -> Point {
    let mut v = x.0.clone();
    if ray_prefix(p, x) == v.len() {
        v.push(end_letter(p, v.len()));
    } else {
        v.pop();
    }
    Point(v)
}

fn tree_degree(p: &Presentation) -> Option<u32> {
    match p {
        Presentation::RegularTree { degree } => Some(*degree),
        Presentation::FreeGroup { rank } => Some(2 * rank),
        _ => None,
    }
}

/// Letters that extend the word `w` away from the end, sorted.
fn down_letters(p: &Presentation, w: &[i64]) -> Vec<i64> {
    let letters: Vec<i64> = match p {
        Presentation::RegularTree { degree } => (1..=*degree as i64).collect(),
        Presentation::FreeGroup { rank } => (1..=*rank as i64).flat_map(|l| [-l, l]).collect(),
        _ => Vec::new(),
    };
    let on_ray = ray_prefix(p, &Point(w.to_vec())) == w.len();
    let mut out: Vec<i64> = letters
        .into_iter()
        .filter(|&l| match w.last() {
            Some(&last) => !p.cancels(last, l),
            None => true,
        })
        .filter(|&l| !(on_ray && l == end_letter(p, w.len())))
        .collect();
    out.sort_unstable();
    out
}

/// Integral up-flow of `x` for the constant cycle `v >= 0` with values in
/// `[0, m]`: ray points carry `m`; every other point takes its share of its
/// parent's total `a + v` (less `m` for a ray child), filled greedily in
/// letter order.
fn integral_up_flow(p: &Presentation, x: &Point, v: i64, m: i64) -> i64 {
    let k = ray_prefix(p, x);
    let mut a = m;
    for i in k..x.0.len() {
        let parent = &x.0[..i];
        let mut total = a + v;
        if i == k && k > 0 {
            total -= m;
        }
        let pos = down_letters(p, parent)
            .iter()
            .position(|&l| l == x.0[i])
            .expect("reduced word");
        a = (total - m * pos as i64).clamp(0, m);
    }
    a
}

/// Horocyclic flow for `value * [X]` on a regular tree of degree `q >= 3`,
/// restricted to `w`: every edge points towards a fixed end. Over Q each
/// edge carries `value / (q - 2)`; over Z the amounts are integers of
/// absolute value at most `ceil(|value| / (q - 2))`.
pub fn horocyclic_flow(w: &Window, value: &Rat, ring: Ring) -> Result<UFChain> {
    let p = w.presentation();
    let q = tree_degree(p).filter(|&q| q >= 3).ok_or_else(|| {
        Error::Presentation("horocyclic flows need a regular tree of degree at least 3".into())
    })?;
    let spread = Rat::from_integer((q as i64 - 2).into());
    let mut b = UFChain::zero(1, ring);
    if ring == Ring::Int {
        if !value.is_integer() {
            return Err(Error::Domain(
                "integral flow requested for a non-integral value".into(),
            ));
        }
        let v: i64 = value
            .to_integer()
            .try_into()
            .map_err(|_| Error::Domain("value too large".into()))?;
        let (sign, v) = (v.signum(), v.abs());
        let m: i64 = (Rat::from_integer(v.into()) / &spread)
            .ceil()
            .to_integer()
            .try_into()
            .expect("small");
        for x in w.points() {
            let y = toward_end(p, x);
            if w.index_of(&y).is_some() {
                b.add_term(
                    vec![x.clone(), y],
                    Rat::from_integer((sign * integral_up_flow(p, x, v, m)).into()),
                )?;
            }
        }
        return Ok(b);
    }
    let a = value / spread;
    for x in w.points() {
        let y = toward_end(p, x);
        if w.index_of(&y).is_some() {
            b.add_term(vec![x.clone(), y], a.clone())?;
        }
    }
    Ok(b)
}

fn torus_periods(t: &Window) -> Vec<i64> {
    match t.geometry() {
        crate::space::Geometry::Torus { periods } => periods.clone(),
        crate::space::Geometry::Ball { .. } => Vec::new(),
    }
}

/// A global flow for the pattern when one can be found from finite data:
/// zero cycles, lattice-periodic cycles (torus), constant cycles on regular
/// trees (horocyclic). `None` when no method applies.
pub fn global_certificate(
    pattern: &ChainPattern,
    p: &Presentation,
    r: u64,
    ring: Ring,
) -> Result<Option<GlobalCertificate>> {
    if let ChainPattern::Constant { value } = pattern {
        if value.is_zero() {
            return Ok(Some(GlobalCertificate {
                method: GlobalMethod::Zero,
                capacity: Some(Rat::zero()),
            }));
        }
        if let Some(q) = tree_degree(p).filter(|&q| q >= 3) {
            let capacity = ceil_for(
                ring,
                &(value.abs() / Rat::from_integer((q as i64 - 2).into())),
            );
            // self-check on a small ball
            let w = build_window(p, &p.base_point(), 4, 1)?;
            let b = horocyclic_flow(&w, value, ring)?;
            let db = b.boundary()?;
            if w.interior_indices()
                .iter()
                .any(|&i| db.coefficient(std::slice::from_ref(w.point(i))) != *value)
                || b.sup_norm() > capacity
            {
                return Err(Error::Contract(
                    "horocyclic flow fails its self-check".into(),
                ));
            }
            return Ok(Some(GlobalCertificate {
                method: GlobalMethod::Horocyclic { degree: q },
                capacity: Some(capacity),
            }));
        }
    }
    match periodic_torus(pattern, p, r) {
        Some(t) => {
            let t = t?;
            let c = pattern.materialize(&t, ring)?;
            let d = demands_from_chain(&t, &c)?;
            let m = min_feasible_capacity(&t, r, &d, &FrontierPolicy::Free)?;
            Ok(Some(GlobalCertificate {
                method: GlobalMethod::Torus {
                    periods: torus_periods(&t),
                },
                capacity: m.capacity().map(|c| ceil_for(ring, c)),
            }))
        }
        None => Ok(None),
    }
}

/// One scheduled window with the cycle's interior coefficients.
#[derive(Clone, Debug)]
pub struct VerdictWindow {
    pub spec: WindowSpec,
    pub window: Window,
    pub demands: Vec<Rat>,
}

/// Verdict from prepared windows (margin at least `r`), optionally backed by
/// a global flow.
///
/// Nontrivial when the minimal capacity at least doubles while strictly
/// increasing across three consecutive windows; trivial when every window is
/// feasible at a common capacity, conclusively so if a global flow exists.
pub fn verdict_from_windows(
    inputs: Vec<VerdictWindow>,
    global: Option<GlobalCertificate>,
    r: u64,
    ring: Ring,
) -> Result<ClassVerdict> {
    if ring == Ring::Int
        && inputs
            .iter()
            .any(|v| v.demands.iter().any(|d| !d.is_integer()))
    {
        return Err(Error::Domain(
            "integral verdict requested for a non-integral cycle".into(),
        ));
    }
    let mut windows = Vec::with_capacity(inputs.len());
    for v in &inputs {
        let m = min_feasible_capacity(&v.window, r, &v.demands, &FrontierPolicy::Free)?;
        windows.push(window_result(&v.spec, &v.window, r, &v.demands, &m)?);
    }

    let cs: Vec<Option<Rat>> = windows.iter().map(|w| w.c_min.clone()).collect();
    let finite_max = cs.iter().flatten().max().cloned().unwrap_or_else(Rat::zero);
    let verdict = if let Some(i) = diverges(&cs) {
        let last = (i..i + 3).rev().find(|&k| cs[k].is_some()).unwrap_or(i);
        Verdict::Nontrivial { window: last }
    } else if let Some(GlobalCertificate {
        capacity: Some(c), ..
    }) = &global
    {
        Verdict::Trivial {
            capacity: ceil_for(ring, &finite_max.max(c.clone())),
            conclusive: true,
        }
    } else if cs.iter().any(Option::is_none) {
        Verdict::Inconclusive {
            reason: format!("no finite capacity at r = {r} on some window"),
        }
    } else if inputs.len() < 3 {
        Verdict::Inconclusive {
            reason: format!(
                "schedule has {} windows, at least 3 are needed",
                inputs.len()
            ),
        }
    } else {
        Verdict::Trivial {
            capacity: ceil_for(ring, &finite_max),
            conclusive: false,
        }
    };

    let certificates = match &verdict {
        Verdict::Trivial { capacity, .. } => inputs
            .into_iter()
            .map(|v| certificate(&v.window, r, v.demands, capacity))
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };

    Ok(ClassVerdict {
        ring,
        r,
        windows,
        global,
        verdict,
        certificates,
    })
}

/// Decide whether a degree-0 cycle pattern vanishes over a schedule of
/// growing windows with margin `r`; see [`verdict_from_windows`].
pub fn class_verdict(
    pattern: &ChainPattern,
    p: &Presentation,
    r: u64,
    schedule: &[WindowSpec],
    ring: Ring,
) -> Result<ClassVerdict> {
    if pattern.degree() != 0 {
        return Err(Error::Contract(
            "class verdicts take degree-0 cycles".into(),
        ));
    }
    if ring == Ring::Int && !pattern.is_integral() {
        return Err(Error::Domain(
            "integral verdict requested for a non-integral cycle".into(),
        ));
    }
    let mut inputs = Vec::with_capacity(schedule.len());
    for spec in schedule {
        let window = spec.build(p, r)?;
        let c = pattern.materialize(&window, ring)?;
        let demands = demands_from_chain(&window, &c)?;
        inputs.push(VerdictWindow {
            spec: spec.clone(),
            window,
            demands,
        });
    }
    let global = global_certificate(pattern, p, r, ring)?;
    verdict_from_windows(inputs, global, r, ring)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeanEstimate {
    pub family: FolnerFamily,
    /// `(n, (1/|S_n|) sum_{S_n} c)`.
    pub values: Vec<(u64, Rat)>,
    /// Average over one period, for lattice-periodic data.
    pub limit: Option<Rat>,
}

/// Exact average of a periodic pattern over one fundamental domain.
pub fn periodic_average(pattern: &ChainPattern, p: &Presentation) -> Option<Result<Rat>> {
    let own = p.period()?;
    let pat = pattern.period()?;
    let periods = crate::chain::combine_periods(&own, &pat);
    Some(build_torus(p, &periods).and_then(|t| {
        if t.is_empty() {
            return Err(Error::Presentation("presentation has no points".into()));
        }
        let sum: Rat = t.points().iter().map(|x| pattern.value_at(x)).sum();
        Ok(sum / Rat::from_integer((t.len() as i64).into()))
    }))
}

/// Averages of a degree-0 pattern over `S_n` for each requested `n`.
pub fn folner_mean(
    pattern: &ChainPattern,
    p: &Presentation,
    fam: &FolnerFamily,
    ns: &[u64],
) -> Result<MeanEstimate> {
    if pattern.degree() != 0 {
        return Err(Error::Contract("means are taken of degree-0 cycles".into()));
    }
    let mut values = Vec::with_capacity(ns.len());
    for &n in ns {
        let s = fam.set(p, n)?;
        if s.is_empty() {
            return Err(Error::Contract(format!("S_{n} is empty")));
        }
        let sum: Rat = s.iter().map(|x| pattern.value_at(x)).sum();
        values.push((n, sum / Rat::from_integer((s.len() as i64).into())));
    }
    let limit = periodic_average(pattern, p).transpose()?;
    Ok(MeanEstimate {
        family: fam.clone(),
        values,
        limit,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerBound {
    pub value: Rat,
    pub certified: bool,
    /// Smallest absolute mean over the second half of the computed values;
    /// reported when no exact limit is available.
    pub tail_evidence: Option<Rat>,
}

/// Lower bound for the semi-norm from Folner means. Exact periodic limits
/// are certified; otherwise the certified bound is 0 and the tail of the
/// computed means is returned as evidence.
pub fn seminorm_lower_via_mean(
    pattern: &ChainPattern,
    p: &Presentation,
    fam: &FolnerFamily,
    ns: &[u64],
) -> Result<LowerBound> {
    let est = folner_mean(pattern, p, fam, ns)?;
    if let Some(limit) = est.limit {
        return Ok(LowerBound {
            value: limit.abs(),
            certified: true,
            tail_evidence: None,
        });
    }
    let tail = &est.values[est.values.len() / 2..];
    Ok(LowerBound {
        value: Rat::zero(),
        certified: true,
        tail_evidence: tail.iter().map(|(_, v)| v.abs()).min(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeminormMode {
    /// Solved on a torus; the correction lifts periodically.
    Periodic { periods: Vec<i64> },
    /// Solved per window with a free frontier.
    Windows,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeminormEstimate {
    pub r: u64,
    pub bound: Rat,
    /// Restricted optimum: exact in periodic mode, the largest per-window
    /// optimum otherwise.
    pub t: Rat,
    pub mode: SeminormMode,
    pub certified: bool,
    pub per_window: Vec<(WindowSpec, Rat)>,
    /// Correction `b` on the last window of the schedule, checked there.
    pub correction: Option<UFChain>,
}

/// Lift a flow on a torus to a periodic 1-chain restricted to `target`.
pub fn lift_torus_flow(
    torus: &Window,
    flow: &FlowAssignment,
    target: &Window,
    ring: Ring,
) -> Result<UFChain> {
    let periods = match torus.geometry() {
        crate::space::Geometry::Torus { periods } => periods.clone(),
        crate::space::Geometry::Ball { .. } => {
            return Err(Error::Contract("lifting needs a torus window".into()))
        }
    };
    let mut out_of: Vec<Vec<(Vec<i64>, Rat)>> = vec![Vec::new(); torus.len()];
    for e in &flow.edges {
        let (a, b) = (torus.point(e.from), torus.point(e.to));
        let step: Vec<i64> =
            a.0.iter()
                .zip(&b.0)
                .zip(&periods)
                .map(|((x, y), l)| {
                    let d = (y - x).rem_euclid(*l);
                    if 2 * d > *l {
                        d - l
                    } else {
                        d
                    }
                })
                .collect();
        out_of[e.from].push((step, e.flow.clone()));
    }
    let mut b = UFChain::zero(1, ring);
    for x in target.points() {
        let Some(i) = torus.index_of(&torus.canonical(x)) else {
            continue;
        };
        for (step, f) in &out_of[i] {
            let y = Point(x.0.iter().zip(step).map(|(a, s)| a + s).collect());
            if target.index_of(&y).is_some() {
                b.add_term(vec![x.clone(), y], f.clone())?;
            }
        }
    }
    Ok(b)
}

/// Check `|b| <= bound` and `|c + db| <= t` on the interior of `w`.
pub fn check_correction(w: &Window, c: &UFChain, b: &UFChain, bound: &Rat, t: &Rat) -> Result<()> {
    if b.sup_norm() > *bound {
        return Err(Error::Contract(format!(
            "correction norm {} exceeds {bound}",
            b.sup_norm()
        )));
    }
    let corrected = c.add(&b.boundary()?)?;
    for i in w.interior_indices() {
        let v = corrected.coefficient(std::slice::from_ref(w.point(i)));
        if v.abs() > *t {
            return Err(Error::Contract(format!(
                "corrected value {v} at {} exceeds {t}",
                w.point(i)
            )));
        }
    }
    Ok(())
}

/// Least `t` with `||c + db||_inf <= t`, over corrections `b` of propagation
/// `r` and sup-norm at most `bound`.
///
/// Lattice-periodic data is solved on a torus and the result is certified
/// as the restricted optimum; the periodic correction is lifted to the last
/// scheduled window and checked with the boundary operator. Other data is
/// solved per window (frontier free), which is evidence only.
pub fn seminorm_upper(
    pattern: &ChainPattern,
    p: &Presentation,
    r: u64,
    bound: &Rat,
    schedule: &[WindowSpec],
) -> Result<SeminormEstimate> {
    if pattern.degree() != 0 {
        return Err(Error::Contract(
            "semi-norm bounds are computed for degree-0 cycles".into(),
        ));
    }
    let mut per_window = Vec::with_capacity(schedule.len());
    let mut last = None;
    for spec in schedule {
        let w = spec.build(p, r)?;
        let c = pattern.materialize(&w, Ring::Rat)?;
        let d = demands_from_chain(&w, &c)?;
        let opt = min_uniform_slack(&w, r, bound, &d)?;
        per_window.push((spec.clone(), opt.t.clone()));
        last = Some((w, c, opt));
    }

    if let Some(torus) = periodic_torus(pattern, p, r) {
        let torus = torus?;
        let c = pattern.materialize(&torus, Ring::Rat)?;
        let d = demands_from_chain(&torus, &c)?;
        let opt = min_uniform_slack(&torus, r, bound, &d)?;
        let correction = match &last {
            Some((w, cw, _)) => {
                let b = lift_torus_flow(&torus, &opt.flow, w, Ring::Rat)?;
                check_correction(w, cw, &b, bound, &opt.t)?;
                Some(b)
            }
            None => None,
        };
        let periods = torus_periods(&torus);
        return Ok(SeminormEstimate {
            r,
            bound: bound.clone(),
            t: opt.t,
            mode: SeminormMode::Periodic { periods },
            certified: true,
            per_window,
            correction,
        });
    }

    let t = per_window
        .iter()
        .map(|(_, t)| t.clone())
        .max()
        .unwrap_or_else(Rat::zero);
    let correction = match last {
        Some((w, c, opt)) => {
            let b = opt.flow.as_chain(&w, Ring::Rat);
            check_correction(&w, &c, &b, bound, &opt.t)?;
            Some(b)
        }
        None => None,
    };
    Ok(SeminormEstimate {
        r,
        bound: bound.clone(),
        t,
        mode: SeminormMode::Windows,
        certified: false,
        per_window,
        correction,
    })
}

/// For an integral 0-chain with coefficients in `[-1, 1]`, the chain
/// `b = sum (1 - c_x) x` over the window: nonnegative, and `c + b` is the
/// fundamental class.
pub fn complement_to_fundamental(w: &Window, c: &UFChain) -> Result<UFChain> {
    if c.degree() != 0 {
        return Err(Error::Contract("complement is defined for 0-chains".into()));
    }
    let one = Rat::one();
    let mut b = UFChain::zero(0, Ring::Int);
    for (s, v) in c.terms() {
        if w.index_of(&s[0]).is_none() {
            return Err(Error::Window(format!(
                "term at {} outside the window",
                s[0]
            )));
        }
        if !v.is_integer() || v.abs() > one {
            return Err(Error::Domain(format!(
                "coefficient {v} is not an integer in [-1, 1]"
            )));
        }
    }
    for x in w.points() {
        let v = c.coefficient(std::slice::from_ref(x));
        b.add_term(vec![x.clone()], &one - v)?;
    }
    Ok(b)
}
