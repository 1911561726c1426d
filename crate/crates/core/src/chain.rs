//! Uniformly finite chains: sparse tuples of points with exact coefficients,
//! the alternating-face boundary, sup-norms and pushforwards.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::space::{Point, SubsetRule, Window};
use crate::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ring {
    Int,
    Rat,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Int => write!(f, "Z"),
            Ring::Rat => write!(f, "Q"),
        }
    }
}

/// An ordered `(n+1)`-tuple of points.
pub type Simplex = Vec<Point>;

/// A finite piece of a uniformly finite `n`-chain.
///
/// `propagation` and `norm_bound` are the declared constants `R_c` and `K_c`;
/// `None` means undeclared, in which case [`validate`] only reports the
/// measured values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UFChain {
    degree: usize,
    ring: Ring,
    terms: BTreeMap<Simplex, Rat>,
    propagation: Option<u64>,
    norm_bound: Option<Rat>,
}

impl UFChain {
    pub fn zero(degree: usize, ring: Ring) -> Self {
        UFChain {
            degree,
            ring,
            terms: BTreeMap::new(),
            propagation: None,
            norm_bound: None,
        }
    }

    pub fn from_terms(
        degree: usize,
        ring: Ring,
        terms: impl IntoIterator<Item = (Simplex, Rat)>,
    ) -> Result<Self> {
        let mut c = UFChain::zero(degree, ring);
        for (s, v) in terms {
            c.add_term(s, v)?;
        }
        Ok(c)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn with_ring(mut self, ring: Ring) -> Self {
        self.ring = ring;
        self
    }

    pub fn terms(&self) -> &BTreeMap<Simplex, Rat> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, s: &[Point]) -> Rat {
        self.terms.get(s).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn propagation(&self) -> Option<u64> {
        self.propagation
    }

    pub fn norm_bound(&self) -> Option<&Rat> {
        self.norm_bound.as_ref()
    }

    pub fn declare_bounds(mut self, propagation: u64, norm_bound: Rat) -> Self {
        self.propagation = Some(propagation);
        self.norm_bound = Some(norm_bound);
        self
    }

    /// Accumulate `v` onto the coefficient of `s`; zero coefficients are dropped.
    pub fn add_term(&mut self, s: Simplex, v: Rat) -> Result<()> {
        if s.len() != self.degree + 1 {
            return Err(Error::Contract(format!(
                "tuple of length {} in a degree-{} chain",
                s.len(),
                self.degree
            )));
        }
        if v.is_zero() {
            return Ok(());
        }
        match self.terms.entry(s) {
            Entry::Vacant(e) => {
                e.insert(v);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += v;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &UFChain) -> Result<UFChain> {
        if self.degree != other.degree {
            return Err(Error::Contract("adding chains of different degrees".into()));
        }
        let mut out = self.clone();
        out.propagation = match (self.propagation, other.propagation) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        out.norm_bound = match (&self.norm_bound, &other.norm_bound) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        if other.ring == Ring::Rat {
            out.ring = Ring::Rat;
        }
        for (s, v) in &other.terms {
            out.add_term(s.clone(), v.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &UFChain) -> Result<UFChain> {
        self.add(&other.scale(&-Rat::from_integer(1.into())))
    }

    pub fn scale(&self, r: &Rat) -> UFChain {
        let mut out = UFChain::zero(self.degree, self.ring);
        if !r.is_zero() {
            out.terms = self.terms.iter().map(|(s, v)| (s.clone(), v * r)).collect();
        }
        out.propagation = self.propagation;
        out.norm_bound = self.norm_bound.as_ref().map(|k| k * r.abs());
        out
    }

    /// `sup |c_x|`, exactly; zero for the zero chain.
    pub fn sup_norm(&self) -> Rat {
        self.terms
            .values()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// `d(x0,...,xn) = sum_j (-1)^j (x0,...,^xj,...,xn)`. In degree 0 the
    /// boundary is the zero map; its value is the empty chain, still tagged
    /// with degree 0 since there is no degree -1.
    pub fn boundary(&self) -> Result<UFChain> {
        if self.degree == 0 {
            return Ok(UFChain::zero(0, self.ring));
        }
        let mut out = UFChain::zero(self.degree - 1, self.ring);
        for (s, v) in &self.terms {
            for j in 0..s.len() {
                let mut face = s.clone();
                face.remove(j);
                let c = if j % 2 == 0 { v.clone() } else { -v.clone() };
                out.add_term(face, c)?;
            }
        }
        out.propagation = self.propagation;
        Ok(out)
    }

    /// Pushforward along a point map: `c_x -> c_x (f(x0),...,f(xn))`, with
    /// colliding image tuples accumulating.
    pub fn pushforward<F>(&self, f: F) -> Result<UFChain>
    where
        F: Fn(&Point) -> Option<Point>,
    {
        let mut out = UFChain::zero(self.degree, self.ring);
        for (s, v) in &self.terms {
            let image: Option<Simplex> = s.iter().map(&f).collect();
            let image = image.ok_or_else(|| {
                Error::Domain(format!("map undefined on support tuple {}", fmt_simplex(s)))
            })?;
            out.add_term(image, v.clone())?;
        }
        Ok(out)
    }

    /// Largest pairwise distance inside a supporting tuple.
    pub fn measured_propagation(&self, metric: impl Fn(&Point, &Point) -> u64) -> u64 {
        self.terms
            .keys()
            .map(|s| {
                let mut m = 0;
                for i in 0..s.len() {
                    for j in i + 1..s.len() {
                        m = m.max(metric(&s[i], &s[j]));
                    }
                }
                m
            })
            .max()
            .unwrap_or(0)
    }

    pub fn support_points(&self) -> BTreeSet<Point> {
        self.terms.keys().flat_map(|s| s.iter().cloned()).collect()
    }

    pub fn restrict(&self, keep: impl Fn(&[Point]) -> bool) -> UFChain {
        let mut out = self.clone();
        out.terms.retain(|s, _| keep(s));
        out
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|v| v.is_integer())
    }

    /// Chain literal: one `coeff : (p0,...,pn)` line per term.
    pub fn to_literal(&self) -> String {
        let mut s = String::new();
        for (t, v) in &self.terms {
            s.push_str(&format!("{v} : {}\n", fmt_simplex(t)));
        }
        s
    }
}

pub fn fmt_simplex(s: &[Point]) -> String {
    let parts: Vec<String> = s.iter().map(|p| p.to_string()).collect();
    format!("({})", parts.join(","))
}

/// The degree-0 all-`value` chain on the given points.
pub fn constant_chain<'a>(
    points: impl IntoIterator<Item = &'a Point>,
    value: Rat,
    ring: Ring,
) -> UFChain {
    let mut c = UFChain::zero(0, ring);
    for p in points {
        c.add_term(vec![p.clone()], value.clone())
            .expect("degree 0");
    }
    c
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    pub measured_propagation: u64,
    pub measured_norm: Rat,
    pub propagation_ok: bool,
    pub norm_ok: bool,
    pub integral_ok: bool,
    pub support_in_window: bool,
    pub cycle_on_interior: bool,
    pub findings: Vec<String>,
}

impl ChainReport {
    pub fn is_valid(&self) -> bool {
        self.propagation_ok && self.norm_ok && self.integral_ok && self.support_in_window
    }
}

/// Check the declared uniform-finiteness constants of `c` against the
/// window metric, whether its support lies in the window and whether its
/// boundary vanishes on tuples made of interior points.
pub fn validate(c: &UFChain, w: &Window) -> ChainReport {
    let mut findings = Vec::new();
    let measured_propagation = c.measured_propagation(|a, b| w.point_distance(a, b));
    let measured_norm = c.sup_norm();
    let propagation_ok = match c.propagation {
        Some(r) if measured_propagation > r => {
            findings.push(format!(
                "propagation violation: measured {measured_propagation} > declared {r}"
            ));
            false
        }
        _ => true,
    };
    let norm_ok = match &c.norm_bound {
        Some(k) if &measured_norm > k => {
            findings.push(format!(
                "norm violation: measured {measured_norm} > declared {k}"
            ));
            false
        }
        _ => true,
    };
    let integral_ok = c.ring == Ring::Rat || c.is_integral();
    if !integral_ok {
        findings.push("non-integral coefficient in a Z-chain".into());
    }
    let outside = c
        .support_points()
        .iter()
        .filter(|p| w.index_of(p).is_none())
        .count();
    let support_in_window = outside == 0;
    if !support_in_window {
        findings.push(format!("{outside} support points outside the window"));
    }
    let cycle_on_interior = if c.degree == 0 {
        true
    } else {
        let b = c.boundary().expect("degree >= 1");
        let bad = b
            .terms
            .keys()
            .filter(|s| {
                s.iter()
                    .all(|p| w.index_of(p).is_some_and(|i| w.is_interior(i)))
            })
            .count();
        if bad > 0 {
            findings.push(format!("boundary nonzero on {bad} interior tuples"));
        }
        bad == 0
    };
    ChainReport {
        measured_propagation,
        measured_norm,
        propagation_ok,
        norm_ok,
        integral_ok,
        support_in_window,
        cycle_on_interior,
        findings,
    }
}

/// Finite descriptions of infinite chains, materialized per window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainPattern {
    /// `value * sum_x x` (degree 0).
    Constant {
        value: Rat,
    },
    /// `value * chi_S` for a lattice subset rule (degree 0).
    Indicator {
        rule: SubsetRule,
        value: Rat,
    },
    /// `coeff * sum_{z in period Z^d + offset} (z + shape_0, ..., z + shape_n)`
    /// on a lattice; the period is taken per axis.
    Periodic {
        degree: usize,
        period: Vec<i64>,
        offset: Vec<i64>,
        coeff: Rat,
        shape: Vec<Vec<i64>>,
    },
    Explicit(UFChain),
    Sum(Vec<ChainPattern>),
}

fn lcm_periods(a: &[i64], b: &[i64]) -> Vec<i64> {
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    a.iter().zip(b).map(|(x, y)| x.lcm(y)).collect()
}

/// Per-axis least common multiple; an empty vector means "any period".
pub fn combine_periods(a: &[i64], b: &[i64]) -> Vec<i64> {
    lcm_periods(a, b)
}

impl ChainPattern {
    pub fn fundamental() -> Self {
        ChainPattern::Constant {
            value: Rat::from_integer(1.into()),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            ChainPattern::Constant { .. } | ChainPattern::Indicator { .. } => 0,
            ChainPattern::Periodic { degree, .. } => *degree,
            ChainPattern::Explicit(c) => c.degree(),
            ChainPattern::Sum(parts) => parts.first().map_or(0, |p| p.degree()),
        }
    }

    pub fn scaled(self, r: Rat) -> Self {
        match self {
            ChainPattern::Constant { value } => ChainPattern::Constant { value: value * r },
            ChainPattern::Indicator { rule, value } => ChainPattern::Indicator {
                rule,
                value: value * r,
            },
            ChainPattern::Periodic {
                degree,
                period,
                offset,
                coeff,
                shape,
            } => ChainPattern::Periodic {
                degree,
                period,
                offset,
                coeff: coeff * r,
                shape,
            },
            ChainPattern::Explicit(c) => ChainPattern::Explicit(c.scale(&r)),
            ChainPattern::Sum(parts) => {
                ChainPattern::Sum(parts.into_iter().map(|p| p.scaled(r.clone())).collect())
            }
        }
    }

    /// Per-axis translation period; `Some(vec![])` means invariant under
    /// every translation, `None` means not periodic.
    pub fn period(&self) -> Option<Vec<i64>> {
        match self {
            ChainPattern::Constant { .. } => Some(vec![]),
            ChainPattern::Indicator { rule, .. } => rule.period(),
            ChainPattern::Periodic { period, .. } => Some(period.clone()),
            ChainPattern::Explicit(c) if c.is_zero() => Some(vec![]),
            ChainPattern::Explicit(_) => None,
            ChainPattern::Sum(parts) => parts
                .iter()
                .try_fold(vec![], |acc, p| p.period().map(|q| lcm_periods(&acc, &q))),
        }
    }

    /// Whether all coefficients are integers.
    pub fn is_integral(&self) -> bool {
        match self {
            ChainPattern::Constant { value } | ChainPattern::Indicator { value, .. } => {
                value.is_integer()
            }
            ChainPattern::Periodic { coeff, .. } => coeff.is_integer(),
            ChainPattern::Explicit(c) => c.is_integral(),
            ChainPattern::Sum(parts) => parts.iter().all(|p| p.is_integral()),
        }
    }

    /// Coefficient of a degree-0 pattern at `x`.
    pub fn value_at(&self, x: &Point) -> Rat {
        match self {
            ChainPattern::Constant { value } => value.clone(),
            ChainPattern::Indicator { rule, value } => {
                if rule.contains(&x.0) {
                    value.clone()
                } else {
                    Rat::zero()
                }
            }
            ChainPattern::Periodic {
                degree: 0,
                period,
                offset,
                coeff,
                shape,
            } => {
                let hit =
                    x.0.iter()
                        .zip(&shape[0])
                        .zip(offset.iter().zip(period))
                        .all(|((xi, si), (oi, pi))| (xi - si - oi).rem_euclid(*pi) == 0);
                if hit {
                    coeff.clone()
                } else {
                    Rat::zero()
                }
            }
            ChainPattern::Periodic { .. } => Rat::zero(),
            ChainPattern::Explicit(c) => c.coefficient(std::slice::from_ref(x)),
            ChainPattern::Sum(parts) => parts.iter().map(|p| p.value_at(x)).sum(),
        }
    }

    /// All terms whose tuples lie entirely in the window.
    pub fn materialize(&self, w: &Window, ring: Ring) -> Result<UFChain> {
        let mut out = UFChain::zero(self.degree(), ring);
        self.materialize_into(w, &mut out)?;
        Ok(out)
    }

    fn materialize_into(&self, w: &Window, out: &mut UFChain) -> Result<()> {
        match self {
            ChainPattern::Constant { .. }
            | ChainPattern::Indicator { .. }
            | ChainPattern::Periodic { degree: 0, .. } => {
                for p in w.points() {
                    out.add_term(vec![p.clone()], self.value_at(p))?;
                }
            }
            ChainPattern::Periodic {
                degree,
                period,
                offset,
                coeff,
                shape,
            } => {
                if w.is_torus() {
                    return Err(Error::Contract(
                        "higher-degree patterns are not materialized on tori".into(),
                    ));
                }
                if shape.len() != degree + 1 {
                    return Err(Error::Contract(
                        "pattern shape length does not match degree".into(),
                    ));
                }
                let mut anchors = BTreeSet::new();
                for p in w.points() {
                    if p.0.len() != period.len() {
                        return Err(Error::Contract(
                            "periodic pattern on a non-lattice window".into(),
                        ));
                    }
                    for s in shape {
                        let z: Vec<i64> = p.0.iter().zip(s).map(|(a, b)| a - b).collect();
                        let on_lattice = z
                            .iter()
                            .zip(offset.iter().zip(period))
                            .all(|(zi, (oi, pi))| (zi - oi).rem_euclid(*pi) == 0);
                        if on_lattice {
                            anchors.insert(z);
                        }
                    }
                }
                for z in anchors {
                    let tuple: Simplex = shape
                        .iter()
                        .map(|s| Point(z.iter().zip(s).map(|(a, b)| a + b).collect()))
                        .collect();
                    if tuple.iter().all(|q| w.index_of(q).is_some()) {
                        out.add_term(tuple, coeff.clone())?;
                    }
                }
            }
            ChainPattern::Explicit(c) => {
                for (s, v) in c.terms() {
                    let canon: Simplex = s.iter().map(|p| w.canonical(p)).collect();
                    if canon.iter().all(|q| w.index_of(q).is_some()) {
                        out.add_term(canon, v.clone())?;
                    }
                }
            }
            ChainPattern::Sum(parts) => {
                for p in parts {
                    if p.degree() != out.degree() {
                        return Err(Error::Contract("pattern sum mixes degrees".into()));
                    }
                    p.materialize_into(w, out)?;
                }
            }
        }
        Ok(())
    }

    /// Largest coefficient magnitude the pattern can produce (exact for the
    /// leaf kinds; a sum reports the triangle-inequality bound).
    pub fn sup_bound(&self) -> Rat {
        match self {
            ChainPattern::Constant { value } | ChainPattern::Indicator { value, .. } => value.abs(),
            ChainPattern::Periodic { coeff, .. } => coeff.abs(),
            ChainPattern::Explicit(c) => c.sup_norm(),
            ChainPattern::Sum(parts) => parts.iter().map(|p| p.sup_bound()).sum(),
        }
    }
}

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(n.into(), d.into())
}

pub fn int(n: i64) -> Rat {
    BigRational::from_integer(n.into())
}
