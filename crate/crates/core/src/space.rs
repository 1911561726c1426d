//! Finite descriptions of infinite UDBG spaces and the finite metric windows
//! cut out of them.
//!
//! Every presentation carries an integer-valued metric: lattices use the word
//! metric of the standard generators (the l1 metric), free groups and regular
//! trees use reduced-word length, subsets inherit the metric of their lattice
//! and the double `X x {0,1}` uses `d(x,x') + |j - j'|`.
//!
//! Points are canonical normal forms stored as integer vectors and ordered
//! lexicographically:
//!
//! * lattice points: their coordinates;
//! * free-group words: letters `+-1 ..= +-rank`, freely reduced;
//! * regular-tree words (free product of `degree` copies of Z/2): letters
//!   `1 ..= degree`, no letter repeated twice in a row;
//! * points of a double: the sheet (0 or 1) followed by the base point.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_integer::Roots;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::Rat;

/// Default cap on the number of points a single window may hold.
pub const DEFAULT_POINT_BUDGET: u64 = 4_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Point(coords.into())
    }

    pub fn int(x: i64) -> Self {
        Point(vec![x])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for Point {
    /// One-dimensional points print as a bare integer, everything else as
    /// `[a,b,...]`. This is also the chain literal syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "[")?;
            for (i, c) in self.0.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, "]")
        }
    }
}

/// Membership rule for a subset of a lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubsetRule {
    /// Points whose coordinate vector reduced modulo `modulus` (per axis) is
    /// one of `residues`.
    Periodic {
        modulus: Vec<i64>,
        residues: Vec<Vec<i64>>,
    },
    /// Perfect squares `{ n^2 : n >= 0 }` in Z.
    Squares,
    /// The complement of the perfect squares in Z.
    NonSquares,
    /// The image `M Z^d` of an integer matrix with nonzero determinant.
    LatticeImage(Vec<Vec<i64>>),
}

pub fn is_square(x: i64) -> bool {
    if x < 0 {
        return false;
    }
    let s = x.sqrt();
    s * s == x
}

impl SubsetRule {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            SubsetRule::Periodic { modulus, residues } => {
                if modulus.len() != dim {
                    return Err(Error::Presentation(format!(
                        "modulus has {} entries, lattice dimension is {dim}",
                        modulus.len()
                    )));
                }
                if modulus.iter().any(|&m| m <= 0) {
                    return Err(Error::Presentation("moduli must be positive".into()));
                }
                if residues.is_empty() {
                    return Err(Error::Presentation("residue list is empty".into()));
                }
                for r in residues {
                    if r.len() != dim || r.iter().zip(modulus).any(|(&a, &m)| a < 0 || a >= m) {
                        return Err(Error::Presentation(format!(
                            "residue {r:?} is not reduced modulo {modulus:?}"
                        )));
                    }
                }
                Ok(())
            }
            SubsetRule::Squares | SubsetRule::NonSquares => {
                if dim != 1 {
                    return Err(Error::Presentation("square rules live in Z only".into()));
                }
                Ok(())
            }
            SubsetRule::LatticeImage(m) => {
                if m.len() != dim || m.iter().any(|row| row.len() != dim) {
                    return Err(Error::Presentation(
                        "matrix must be square of lattice dimension".into(),
                    ));
                }
                if determinant(m) == 0 {
                    return Err(Error::Presentation("matrix is singular".into()));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        match self {
            SubsetRule::Periodic { modulus, residues } => {
                let red: Vec<i64> = x
                    .iter()
                    .zip(modulus)
                    .map(|(&a, &m)| a.rem_euclid(m))
                    .collect();
                residues.contains(&red)
            }
            SubsetRule::Squares => is_square(x[0]),
            SubsetRule::NonSquares => !is_square(x[0]),
            SubsetRule::LatticeImage(m) => {
                let det = determinant(m);
                let adj = adjugate(m);
                adj.iter().all(|row| {
                    let s: i128 = row
                        .iter()
                        .zip(x)
                        .map(|(&a, &b)| a as i128 * b as i128)
                        .sum();
                    s % det as i128 == 0
                })
            }
        }
    }

    /// Per-axis period of the rule, if it has one.
    pub fn period(&self) -> Option<Vec<i64>> {
        match self {
            SubsetRule::Periodic { modulus, .. } => Some(modulus.clone()),
            SubsetRule::LatticeImage(m) => {
                let d = determinant(m).abs();
                Some(vec![d; m.len()])
            }
            SubsetRule::Squares | SubsetRule::NonSquares => None,
        }
    }
}

/// Integer determinant by cofactor expansion (dimensions here are tiny).
pub fn determinant(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    match n {
        0 => 1,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] * determinant(&minor(m, 0, j))
            })
            .sum(),
    }
}

fn minor(m: &[Vec<i64>], row: usize, col: usize) -> Vec<Vec<i64>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// `adj(M)` with `M adj(M) = adj(M) M = det(M) I`.
#[allow(clippy::needless_range_loop)]
pub fn adjugate(m: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[j][i] = sign * determinant(&minor(m, i, j));
        }
    }
    adj
}

/// A finite description of an infinite UDBG space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Presentation {
    Lattice {
        dim: usize,
    },
    Subset {
        dim: usize,
        rule: SubsetRule,
    },
    FreeGroup {
        rank: u32,
    },
    /// The `degree`-regular tree as the Cayley graph of the free product of
    /// `degree` copies of Z/2.
    RegularTree {
        degree: u32,
    },
    Doubling(Box<Presentation>),
}

impl Presentation {
    pub fn lattice(dim: usize) -> Self {
        Presentation::Lattice { dim }
    }

    pub fn subset(dim: usize, rule: SubsetRule) -> Result<Self> {
        rule.validate(dim)?;
        Ok(Presentation::Subset { dim, rule })
    }

    /// `k Z + offsets` inside Z.
    pub fn residues(modulus: i64, residues: &[i64]) -> Result<Self> {
        Self::subset(
            1,
            SubsetRule::Periodic {
                modulus: vec![modulus],
                residues: residues.iter().map(|&r| vec![r]).collect(),
            },
        )
    }

    pub fn free_group(rank: u32) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Presentation(
                "free group rank must be positive".into(),
            ));
        }
        Ok(Presentation::FreeGroup { rank })
    }

    pub fn regular_tree(degree: u32) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Presentation("tree degree must be at least 2".into()));
        }
        Ok(Presentation::RegularTree { degree })
    }

    pub fn doubling(base: Presentation) -> Self {
        Presentation::Doubling(Box::new(base))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Presentation::Lattice { dim } if *dim == 0 => Err(Error::Presentation(
                "lattice dimension must be positive".into(),
            )),
            Presentation::Subset { dim, rule } => rule.validate(*dim),
            Presentation::FreeGroup { rank: 0 } => Err(Error::Presentation(
                "free group rank must be positive".into(),
            )),
            Presentation::RegularTree { degree } if *degree < 2 => {
                Err(Error::Presentation("tree degree must be at least 2".into()))
            }
            Presentation::Doubling(base) => base.validate(),
            _ => Ok(()),
        }
    }

    /// Coordinate dimension for lattice-based presentations.
    pub fn lattice_dim(&self) -> Option<usize> {
        match self {
            Presentation::Lattice { dim } | Presentation::Subset { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    /// The identity of a group presentation, or the origin / base point.
    pub fn base_point(&self) -> Point {
        match self {
            Presentation::Lattice { dim } | Presentation::Subset { dim, .. } => {
                Point(vec![0; *dim])
            }
            Presentation::FreeGroup { .. } | Presentation::RegularTree { .. } => Point(vec![]),
            Presentation::Doubling(base) => {
                let mut v = vec![0];
                v.extend(base.base_point().0);
                Point(v)
            }
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Presentation::Lattice { dim } => p.0.len() == *dim,
            Presentation::Subset { dim, rule } => p.0.len() == *dim && rule.contains(&p.0),
            Presentation::FreeGroup { rank } => {
                let r = *rank as i64;
                p.0.iter().all(|&a| a != 0 && a.abs() <= r) && p.0.windows(2).all(|w| w[0] != -w[1])
            }
            Presentation::RegularTree { degree } => {
                let q = *degree as i64;
                p.0.iter().all(|&a| a >= 1 && a <= q) && p.0.windows(2).all(|w| w[0] != w[1])
            }
            Presentation::Doubling(base) => {
                !p.0.is_empty()
                    && (p.0[0] == 0 || p.0[0] == 1)
                    && base.contains(&Point(p.0[1..].to_vec()))
            }
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> u64 {
        match self {
            Presentation::Lattice { .. } | Presentation::Subset { .. } => {
                a.0.iter().zip(&b.0).map(|(x, y)| x.abs_diff(*y)).sum()
            }
            Presentation::FreeGroup { .. } | Presentation::RegularTree { .. } => {
                let common = a.0.iter().zip(&b.0).take_while(|(x, y)| x == y).count();
                (a.0.len() + b.0.len() - 2 * common) as u64
            }
            Presentation::Doubling(base) => {
                let sheet = a.0[0].abs_diff(b.0[0]);
                base.distance(&Point(a.0[1..].to_vec()), &Point(b.0[1..].to_vec())) + sheet
            }
        }
    }

    /// Uniform-discreteness gap. All metrics here are integral, so distinct
    /// points are at distance at least one.
    pub fn separation(&self) -> Rat {
        BigRational::one()
    }

    /// Upper bound `K(r)` on the cardinality of any ball of radius `r`.
    pub fn max_ball_size(&self, r: u64) -> u128 {
        match self {
            Presentation::Lattice { dim } | Presentation::Subset { dim, .. } => {
                lattice_ball_size(*dim, r)
            }
            Presentation::FreeGroup { rank } => tree_ball_size(2 * *rank as u128, r),
            Presentation::RegularTree { degree } => tree_ball_size(*degree as u128, r),
            Presentation::Doubling(base) => {
                base.max_ball_size(r) + if r > 0 { base.max_ball_size(r - 1) } else { 0 }
            }
        }
    }

    /// All points at distance at most `radius` from `center`, sorted.
    pub fn ball(&self, center: &Point, radius: u64) -> Vec<Point> {
        let mut out = match self {
            Presentation::Lattice { dim } => lattice_ball(&center.0, radius, *dim),
            Presentation::Subset { dim, rule } => {
                let mut pts = lattice_ball(&center.0, radius, *dim);
                pts.retain(|p| rule.contains(&p.0));
                pts
            }
            Presentation::FreeGroup { .. } | Presentation::RegularTree { .. } => {
                let mut pts = Vec::new();
                let mut word = Vec::new();
                self.enumerate_words(&mut word, radius as usize, &mut |w| {
                    pts.push(self.multiply(center, &Point(w.to_vec())))
                });
                pts
            }
            Presentation::Doubling(base) => {
                let sheet = center.0[0];
                let base_center = Point(center.0[1..].to_vec());
                let mut pts: Vec<Point> = base
                    .ball(&base_center, radius)
                    .into_iter()
                    .map(|p| with_sheet(sheet, p))
                    .collect();
                if radius >= 1 {
                    pts.extend(
                        base.ball(&base_center, radius - 1)
                            .into_iter()
                            .map(|p| with_sheet(1 - sheet, p)),
                    );
                }
                pts
            }
        };
        out.sort();
        out
    }

    fn enumerate_words(&self, word: &mut Vec<i64>, budget: usize, visit: &mut dyn FnMut(&[i64])) {
        visit(word);
        if budget == 0 {
            return;
        }
        for letter in self.letters() {
            if let Some(&last) = word.last() {
                if self.cancels(last, letter) {
                    continue;
                }
            }
            word.push(letter);
            self.enumerate_words(word, budget - 1, visit);
            word.pop();
        }
    }

    fn letters(&self) -> Vec<i64> {
        match self {
            Presentation::FreeGroup { rank } => {
                let r = *rank as i64;
                (1..=r).flat_map(|a| [a, -a]).collect()
            }
            Presentation::RegularTree { degree } => (1..=*degree as i64).collect(),
            _ => vec![],
        }
    }

    pub(crate) fn cancels(&self, a: i64, b: i64) -> bool {
        match self {
            Presentation::FreeGroup { .. } => a == -b,
            Presentation::RegularTree { .. } => a == b,
            _ => false,
        }
    }

    pub fn is_group(&self) -> bool {
        matches!(
            self,
            Presentation::Lattice { .. }
                | Presentation::FreeGroup { .. }
                | Presentation::RegularTree { .. }
        )
    }

    /// Group multiplication. Only meaningful when [`Self::is_group`].
    pub fn multiply(&self, a: &Point, b: &Point) -> Point {
        match self {
            Presentation::Lattice { .. } => {
                Point(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
            }
            Presentation::FreeGroup { .. } | Presentation::RegularTree { .. } => {
                let mut w = a.0.clone();
                for &letter in &b.0 {
                    match w.last() {
                        Some(&last) if self.cancels(last, letter) => {
                            w.pop();
                        }
                        _ => w.push(letter),
                    }
                }
                Point(w)
            }
            _ => panic!("multiply called on a non-group presentation"),
        }
    }

    pub fn inverse(&self, a: &Point) -> Point {
        match self {
            Presentation::Lattice { .. } => Point(a.0.iter().map(|x| -x).collect()),
            Presentation::FreeGroup { .. } => Point(a.0.iter().rev().map(|x| -x).collect()),
            Presentation::RegularTree { .. } => Point(a.0.iter().rev().copied().collect()),
            _ => panic!("inverse called on a non-group presentation"),
        }
    }

    /// Per-axis translation period of a lattice-based presentation.
    pub fn period(&self) -> Option<Vec<i64>> {
        match self {
            Presentation::Lattice { dim } => Some(vec![1; *dim]),
            Presentation::Subset { rule, .. } => rule.period(),
            _ => None,
        }
    }
}

fn with_sheet(sheet: i64, p: Point) -> Point {
    let mut v = Vec::with_capacity(p.0.len() + 1);
    v.push(sheet);
    v.extend(p.0);
    Point(v)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of lattice points in an l1 ball of radius `r` in Z^d.
pub fn lattice_ball_size(dim: usize, r: u64) -> u128 {
    let d = dim as u128;
    let r = r as u128;
    (0..=d.min(r))
        .map(|k| (1u128 << k) * binomial(d, k) * binomial(r, k))
        .sum()
}

/// Ball size in the `q`-regular tree.
pub fn tree_ball_size(q: u128, r: u64) -> u128 {
    let mut total = 1u128;
    let mut sphere = q;
    for _ in 0..r {
        total = total.saturating_add(sphere);
        sphere = sphere.saturating_mul(q - 1);
    }
    total
}

fn lattice_ball(center: &[i64], radius: u64, dim: usize) -> Vec<Point> {
    fn rec(center: &[i64], axis: usize, left: u64, cur: &mut Vec<i64>, out: &mut Vec<Point>) {
        if axis == center.len() {
            out.push(Point(cur.clone()));
            return;
        }
        let l = left as i64;
        for off in -l..=l {
            cur.push(center[axis] + off);
            rec(center, axis + 1, left - off.unsigned_abs(), cur, out);
            cur.pop();
        }
    }
    debug_assert_eq!(center.len(), dim);
    let mut out = Vec::new();
    rec(center, 0, radius, &mut Vec::with_capacity(dim), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// Closed ball around `center`; points within `radius - margin` of the
    /// center are interior.
    Ball {
        center: Point,
        radius: u64,
        margin: u64,
    },
    /// Quotient of a lattice-periodic presentation by `periods` (one per
    /// axis). Every point is interior and distances wrap around.
    Torus { periods: Vec<i64> },
}

/// A finite chunk of a presentation with interior/frontier bookkeeping.
#[derive(Clone, Debug)]
pub struct Window {
    presentation: Presentation,
    geometry: Geometry,
    points: Vec<Point>,
    index: HashMap<Point, usize>,
    interior: Vec<bool>,
}

pub fn build_window(p: &Presentation, center: &Point, radius: u64, margin: u64) -> Result<Window> {
    build_window_with_budget(p, center, radius, margin, DEFAULT_POINT_BUDGET)
}

pub fn build_window_with_budget(
    p: &Presentation,
    center: &Point,
    radius: u64,
    margin: u64,
    budget: u64,
) -> Result<Window> {
    p.validate()?;
    if margin > radius {
        return Err(Error::Contract(format!(
            "margin {margin} exceeds radius {radius}"
        )));
    }
    let expected_dim = match p {
        Presentation::Lattice { dim } | Presentation::Subset { dim, .. } => Some(*dim),
        _ => None,
    };
    if let Some(d) = expected_dim {
        if center.0.len() != d {
            return Err(Error::Presentation(format!(
                "center {center} has wrong dimension (expected {d})"
            )));
        }
    } else if !p.contains(center) {
        return Err(Error::Presentation(format!(
            "center {center} is not a point of the presentation"
        )));
    }
    let bound = p.max_ball_size(radius);
    if bound > budget as u128 {
        return Err(Error::Resource {
            what: format!("ball of radius {radius}"),
            needed: bound.min(u64::MAX as u128) as u64,
            budget,
        });
    }
    let points = p.ball(center, radius);
    let interior = points
        .iter()
        .map(|x| p.distance(center, x) + margin <= radius)
        .collect();
    Ok(Window::assemble(
        p.clone(),
        Geometry::Ball {
            center: center.clone(),
            radius,
            margin,
        },
        points,
        interior,
    ))
}

/// Fundamental domain of a lattice-periodic presentation with wraparound.
/// Periods must be multiples of the presentation's own period.
pub fn build_torus(p: &Presentation, periods: &[i64]) -> Result<Window> {
    p.validate()?;
    let own = p.period().ok_or_else(|| {
        Error::Presentation("torus windows need a lattice-periodic presentation".into())
    })?;
    if periods.len() != own.len() {
        return Err(Error::Presentation(
            "period vector has the wrong dimension".into(),
        ));
    }
    for (&l, &q) in periods.iter().zip(&own) {
        if l <= 0 || l % q != 0 {
            return Err(Error::Presentation(format!(
                "torus period {l} is not a positive multiple of {q}"
            )));
        }
    }
    let total: u128 = periods.iter().map(|&l| l as u128).product();
    if total > DEFAULT_POINT_BUDGET as u128 {
        return Err(Error::Resource {
            what: "torus fundamental domain".into(),
            needed: total as u64,
            budget: DEFAULT_POINT_BUDGET,
        });
    }
    let mut points = vec![Point(vec![])];
    for &l in periods {
        points = points
            .into_iter()
            .flat_map(|pt| {
                (0..l).map(move |c| {
                    let mut v = pt.0.clone();
                    v.push(c);
                    Point(v)
                })
            })
            .collect();
    }
    points.retain(|x| p.contains(x));
    points.sort();
    let interior = vec![true; points.len()];
    Ok(Window::assemble(
        p.clone(),
        Geometry::Torus {
            periods: periods.to_vec(),
        },
        points,
        interior,
    ))
}

impl Window {
    fn assemble(
        presentation: Presentation,
        geometry: Geometry,
        points: Vec<Point>,
        interior: Vec<bool>,
    ) -> Self {
        let index = points
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        Window {
            presentation,
            geometry,
            points,
            index,
            interior,
        }
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.interior[i]
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.interior[i]).collect()
    }

    pub fn frontier_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.interior[i]).collect()
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.geometry, Geometry::Torus { .. })
    }

    pub fn center(&self) -> Option<&Point> {
        match &self.geometry {
            Geometry::Ball { center, .. } => Some(center),
            Geometry::Torus { .. } => None,
        }
    }

    pub fn radius(&self) -> Option<u64> {
        match &self.geometry {
            Geometry::Ball { radius, .. } => Some(*radius),
            Geometry::Torus { .. } => None,
        }
    }

    /// Margin of a ball window; tori have no frontier and report `u64::MAX`.
    pub fn margin(&self) -> u64 {
        match &self.geometry {
            Geometry::Ball { margin, .. } => *margin,
            Geometry::Torus { .. } => u64::MAX,
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> u64 {
        self.point_distance(&self.points[i], &self.points[j])
    }

    pub fn point_distance(&self, a: &Point, b: &Point) -> u64 {
        match &self.geometry {
            Geometry::Ball { .. } => self.presentation.distance(a, b),
            Geometry::Torus { periods } => {
                a.0.iter()
                    .zip(&b.0)
                    .zip(periods)
                    .map(|((x, y), l)| {
                        let d = (x - y).rem_euclid(*l);
                        d.min(l - d) as u64
                    })
                    .sum()
            }
        }
    }

    /// Whether the ambient ball `B_r(x)` lies inside the window, so that
    /// neighbourhood data at `x` up to radius `r` is ambient-correct.
    pub fn contains_ball(&self, i: usize, r: u64) -> bool {
        match &self.geometry {
            Geometry::Ball { center, radius, .. } => {
                self.presentation.distance(center, &self.points[i]) + r <= *radius
            }
            Geometry::Torus { periods } => periods.iter().all(|&l| (l as u64) > 2 * r),
        }
    }

    /// Window points at distance `1..=r` from point `i`, sorted by index.
    pub fn neighbors(&self, i: usize, r: u64) -> Vec<usize> {
        let x = &self.points[i];
        let mut out: Vec<usize> = match &self.geometry {
            Geometry::Ball { .. } => self
                .presentation
                .ball(x, r)
                .iter()
                .filter_map(|y| self.index_of(y))
                .filter(|&j| j != i)
                .collect(),
            Geometry::Torus { periods } => {
                let offsets = lattice_ball(&vec![0; periods.len()], r, periods.len());
                offsets
                    .iter()
                    .map(|off| {
                        Point(
                            x.0.iter()
                                .zip(&off.0)
                                .zip(periods)
                                .map(|((a, o), l)| (a + o).rem_euclid(*l))
                                .collect(),
                        )
                    })
                    .filter_map(|y| self.index_of(&y))
                    .filter(|&j| j != i)
                    .collect()
            }
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Unordered pairs `(i, j)`, `i < j`, of window points at distance at most `r`.
    pub fn edges(&self, r: u64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in self.neighbors(i, r) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Reduce a lattice point to its torus representative; identity on balls.
    pub fn canonical(&self, p: &Point) -> Point {
        match &self.geometry {
            Geometry::Ball { .. } => p.clone(),
            Geometry::Torus { periods } => Point(
                p.0.iter()
                    .zip(periods)
                    .map(|(a, l)| a.rem_euclid(*l))
                    .collect(),
            ),
        }
    }

    /// TSV dump: `point_id`, `coordinates`, `interior_flag`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("point_id\tcoordinates\tinterior_flag\n");
        for (i, p) in self.points.iter().enumerate() {
            let coords: Vec<String> = p.0.iter().map(|c| c.to_string()).collect();
            s.push_str(&format!(
                "{i}\t{}\t{}\n",
                coords.join(","),
                u8::from(self.interior[i])
            ));
        }
        s
    }
}

/// Two-sided collar `{ x : d(x,F) <= r and d(x, X \ F) <= r }`.
///
/// Every point of `f` must have its `r`-ball inside the window; otherwise
/// the answer would depend on the truncation and a precision error is
/// returned.
pub fn r_boundary(w: &Window, f: &[usize], r: u64) -> Result<Vec<usize>> {
    if r == 0 {
        return Err(Error::Contract("r-boundary needs r >= 1".into()));
    }
    for &x in f {
        if x >= w.len() {
            return Err(Error::Contract(format!("point index {x} outside window")));
        }
        if !w.contains_ball(x, r) {
            return Err(Error::Precision(format!(
                "point {} is within {r} of the window edge; collar would be window-dependent",
                w.point(x)
            )));
        }
    }
    let in_f: HashSet<usize> = f.iter().copied().collect();
    let mut collar = HashSet::new();
    for &x in &in_f {
        for y in w.neighbors(x, r) {
            if !in_f.contains(&y) {
                collar.insert(y);
                collar.insert(x);
            }
        }
    }
    let mut out: Vec<usize> = collar.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// Number of `r`-edges with exactly one endpoint in `f`.
pub fn crossing_edges(w: &Window, f: &[usize], r: u64) -> usize {
    let in_f: HashSet<usize> = f.iter().copied().collect();
    f.iter()
        .map(|&x| {
            w.neighbors(x, r)
                .into_iter()
                .filter(|y| !in_f.contains(y))
                .count()
        })
        .sum()
}

/// Indexed families of finite sets used as Folner candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FolnerFamily {
    /// `{0, ..., n-1}` in a one-dimensional lattice presentation.
    Interval,
    /// `{0, ..., n-1}^d`.
    Box,
    /// Ball of radius `n` around the base point.
    CenteredBall,
}

impl FolnerFamily {
    /// A ball `(center, radius)` containing `S_n`.
    pub fn bounding_ball(&self, p: &Presentation, n: u64) -> Result<(Point, u64)> {
        match self {
            FolnerFamily::CenteredBall => Ok((p.base_point(), n)),
            FolnerFamily::Interval | FolnerFamily::Box => {
                let dim = p.lattice_dim().ok_or_else(|| {
                    Error::Contract("interval/box families need a lattice presentation".into())
                })?;
                if *self == FolnerFamily::Interval && dim != 1 {
                    return Err(Error::Contract(
                        "interval family needs a one-dimensional lattice".into(),
                    ));
                }
                if n == 0 {
                    return Err(Error::Contract("family index must be positive".into()));
                }
                let half = ((n - 1) / 2) as i64;
                let rad = (n - 1).div_ceil(2);
                Ok((Point(vec![half; dim]), rad * dim as u64))
            }
        }
    }

    pub fn contains(&self, p: &Presentation, n: u64, x: &Point) -> bool {
        match self {
            FolnerFamily::CenteredBall => p.distance(&p.base_point(), x) <= n,
            FolnerFamily::Interval | FolnerFamily::Box => {
                x.0.iter().all(|&c| c >= 0 && (c as u64) < n)
            }
        }
    }

    /// `S_n`, sorted.
    pub fn set(&self, p: &Presentation, n: u64) -> Result<Vec<Point>> {
        let (center, radius) = self.bounding_ball(p, n)?;
        Ok(p.ball(&center, radius)
            .into_iter()
            .filter(|x| self.contains(p, n, x))
            .collect())
    }
}

/// `|d_r S_n| / |S_n|` for each requested `n`, exactly.
pub fn isoperimetric_profile(
    p: &Presentation,
    fam: &FolnerFamily,
    r: u64,
    ns: &[u64],
) -> Result<Vec<(u64, Rat)>> {
    ns.iter()
        .map(|&n| {
            let (center, radius) = fam.bounding_ball(p, n)?;
            let w = build_window(p, &center, radius + r, r)?;
            let f: Vec<usize> = (0..w.len())
                .filter(|&i| fam.contains(p, n, w.point(i)))
                .collect();
            if f.is_empty() {
                return Err(Error::Contract(format!("S_{n} is empty")));
            }
            let collar = r_boundary(&w, &f, r)?;
            Ok((
                n,
                BigRational::new((collar.len() as i64).into(), (f.len() as i64).into()),
            ))
        })
        .collect()
}
