//! Python bindings for `ufhom`. Rationals cross the boundary as strings
//! (`"7/2"`), which `fractions.Fraction` parses directly.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ufhom::chain::{ChainPattern, Ring, UFChain};
use ufhom::cli::{execute, parse_scenario};
use ufhom::degree0::{class_verdict as verdict_rs, seminorm_upper, WindowSpec};
use ufhom::degree1::{prism_certificate, rewrite_disjoint};
use ufhom::grouphom::rho_roundtrip_check;
use ufhom::literal::{named_rule, parse_chain_literal, parse_rat};
use ufhom::space::{build_window, Point, Presentation as PresentationRs, Window as WindowRs};
use ufhom::{Error, Rat};

fn err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. } | Error::Presentation(_) | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn ring(name: &str) -> PyResult<Ring> {
    match name {
        "Z" | "z" => Ok(Ring::Int),
        "Q" | "q" => Ok(Ring::Rat),
        other => Err(PyValueError::new_err(format!(
            "unknown ring '{other}' (use Z or Q)"
        ))),
    }
}

fn rational(s: &str) -> PyResult<Rat> {
    parse_rat(s).ok_or_else(|| PyValueError::new_err(format!("not a rational: '{s}'")))
}

fn opt(r: &Option<Rat>) -> Option<String> {
    r.as_ref().map(|v| v.to_string())
}

fn point(p: &Point) -> Vec<i64> {
    p.coords().to_vec()
}

/// A finitely described infinite space.
#[pyclass(
    frozen,
    skip_from_py_object,
    name = "Presentation",
    module = "ufhom_py"
)]
#[derive(Clone)]
struct Presentation(PresentationRs);

#[pymethods]
impl Presentation {
    #[staticmethod]
    fn lattice(dim: usize) -> PyResult<Self> {
        let p = PresentationRs::lattice(dim);
        p.validate().map_err(err)?;
        Ok(Presentation(p))
    }

    /// Points of Z with a given residue mod `modulus`.
    #[staticmethod]
    fn residues(modulus: i64, residues: Vec<i64>) -> PyResult<Self> {
        PresentationRs::residues(modulus, &residues)
            .map(Presentation)
            .map_err(err)
    }

    /// A named subset of Z: `squares` or `nonsquares`.
    #[staticmethod]
    fn subset(rule: &str) -> PyResult<Self> {
        let r = named_rule(rule)
            .ok_or_else(|| PyValueError::new_err(format!("unknown subset rule '{rule}'")))?;
        PresentationRs::subset(1, r).map(Presentation).map_err(err)
    }

    #[staticmethod]
    fn free_group(rank: u32) -> PyResult<Self> {
        PresentationRs::free_group(rank)
            .map(Presentation)
            .map_err(err)
    }

    #[staticmethod]
    fn regular_tree(degree: u32) -> PyResult<Self> {
        PresentationRs::regular_tree(degree)
            .map(Presentation)
            .map_err(err)
    }

    /// Two copies of `base` joined point by point.
    #[staticmethod]
    fn doubling(base: &Presentation) -> Self {
        Presentation(PresentationRs::doubling(base.0.clone()))
    }

    fn base_point(&self) -> Vec<i64> {
        point(&self.0.base_point())
    }

    fn contains(&self, x: Vec<i64>) -> bool {
        self.0.contains(&Point::new(x))
    }

    fn distance(&self, a: Vec<i64>, b: Vec<i64>) -> u64 {
        self.0.distance(&Point::new(a), &Point::new(b))
    }

    fn ball(&self, center: Vec<i64>, radius: u64) -> Vec<Vec<i64>> {
        self.0
            .ball(&Point::new(center), radius)
            .iter()
            .map(point)
            .collect()
    }

    fn window(&self, center: Vec<i64>, radius: u64, margin: u64) -> PyResult<Window> {
        build_window(&self.0, &Point::new(center), radius, margin)
            .map(Window)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Presentation({:?})", self.0)
    }
}

/// A finite ball of a presentation with an interior and a frontier margin.
#[pyclass(frozen, name = "Window", module = "ufhom_py")]
struct Window(WindowRs);

#[pymethods]
impl Window {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn points(&self) -> Vec<Vec<i64>> {
        self.0.points().iter().map(point).collect()
    }

    fn interior(&self) -> Vec<Vec<i64>> {
        self.0
            .interior_indices()
            .into_iter()
            .map(|i| point(self.0.point(i)))
            .collect()
    }

    fn frontier(&self) -> Vec<Vec<i64>> {
        self.0
            .frontier_indices()
            .into_iter()
            .map(|i| point(self.0.point(i)))
            .collect()
    }

    /// Materialize a chain literal on this window.
    #[pyo3(signature = (literal, ring = "Z"))]
    fn chain(&self, literal: &str, ring: &str) -> PyResult<Chain> {
        let r = self::ring(ring)?;
        let pattern = parse_chain_literal(literal, r, 1).map_err(err)?;
        pattern.materialize(&self.0, r).map(Chain).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Window(points={}, interior={})",
            self.0.len(),
            self.0.interior_indices().len()
        )
    }
}

/// A finitely supported chain with exact coefficients.
#[pyclass(frozen, name = "Chain", module = "ufhom_py")]
struct Chain(UFChain);

#[pymethods]
impl Chain {
    /// Parse an explicit literal (`coeff : (p0, p1, ...)` per line).
    #[staticmethod]
    #[pyo3(signature = (literal, ring = "Z"))]
    fn parse(literal: &str, ring: &str) -> PyResult<Self> {
        ufhom::literal::parse_chain(literal, self::ring(ring)?)
            .map(Chain)
            .map_err(err)
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn sup_norm(&self) -> String {
        self.0.sup_norm().to_string()
    }

    fn boundary(&self) -> PyResult<Chain> {
        self.0.boundary().map(Chain).map_err(err)
    }

    fn __add__(&self, other: &Chain) -> PyResult<Chain> {
        self.0.add(&other.0).map(Chain).map_err(err)
    }

    fn __sub__(&self, other: &Chain) -> PyResult<Chain> {
        self.0.sub(&other.0).map(Chain).map_err(err)
    }

    fn scale(&self, factor: &str) -> PyResult<Chain> {
        Ok(Chain(self.0.scale(&rational(factor)?)))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `[(simplex, coefficient)]` in canonical order.
    fn terms(&self) -> Vec<(Vec<Vec<i64>>, String)> {
        self.0
            .terms()
            .iter()
            .map(|(s, v)| (s.iter().map(point).collect(), v.to_string()))
            .collect()
    }

    fn to_literal(&self) -> String {
        self.0.to_literal()
    }

    fn __eq__(&self, other: &Chain) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Chain(degree={}, terms={})", self.0.degree(), self.0.len())
    }
}

fn pattern(literal: Option<&str>, r: Ring) -> PyResult<ChainPattern> {
    match literal {
        None => Ok(ChainPattern::fundamental()),
        Some(text) => parse_chain_literal(text, r, 1).map_err(err),
    }
}

fn schedule(p: &PresentationRs, radii: Vec<u64>) -> Vec<WindowSpec> {
    radii
        .into_iter()
        .map(|r| WindowSpec::centered(p, r))
        .collect()
}

/// Decide whether a degree-0 cycle (default: the fundamental class) bounds.
/// Returns a dict with `verdict`, `conclusive`, `c_min` per window and the
/// global certificate method, if any.
#[pyfunction]
#[pyo3(signature = (space, radii, cycle = None, r = 1, ring = "Z"))]
fn class_verdict<'py>(
    py: Python<'py>,
    space: &Presentation,
    radii: Vec<u64>,
    cycle: Option<&str>,
    r: u64,
    ring: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let rg = self::ring(ring)?;
    let v = verdict_rs(
        &pattern(cycle, rg)?,
        &space.0,
        r,
        &schedule(&space.0, radii),
        rg,
    )
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("verdict", v.label())?;
    d.set_item("conclusive", v.is_conclusive())?;
    d.set_item(
        "c_min",
        v.windows.iter().map(|w| opt(&w.c_min)).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "global",
        v.global.as_ref().map(|g| format!("{:?}", g.method)),
    )?;
    d.set_item("table", v.to_tsv())?;
    Ok(d)
}

/// Upper bound on the restricted semi-norm with slack bound `bound`.
#[pyfunction]
#[pyo3(signature = (space, radii, cycle = None, r = 1, bound = "1"))]
fn seminorm<'py>(
    py: Python<'py>,
    space: &Presentation,
    radii: Vec<u64>,
    cycle: Option<&str>,
    r: u64,
    bound: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let est = seminorm_upper(
        &pattern(cycle, Ring::Rat)?,
        &space.0,
        r,
        &rational(bound)?,
        &schedule(&space.0, radii),
    )
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("t", est.t.to_string())?;
    d.set_item("certified", est.certified)?;
    d.set_item(
        "periodic",
        matches!(est.mode, ufhom::degree0::SeminormMode::Periodic { .. }),
    )?;
    d.set_item(
        "per_window",
        est.per_window
            .iter()
            .map(|(s, t)| (s.radius, t.to_string()))
            .collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Prism between the unit-step 1-cycle on Z and its n-step version.
#[pyfunction]
#[pyo3(signature = (n, radius = 20, margin = None, center = 0))]
fn prism<'py>(
    py: Python<'py>,
    n: i64,
    radius: u64,
    margin: Option<u64>,
    center: i64,
) -> PyResult<Bound<'py, PyDict>> {
    let w =
        prism_certificate(n, center, radius, margin.unwrap_or(n.unsigned_abs())).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("verified", w.verified)?;
    d.set_item("sup_norm", w.chain.sup_norm().to_string())?;
    d.set_item("chain", Chain(w.chain).into_pyobject(py)?)?;
    Ok(d)
}

/// Rewrite n times the unit-step cycle with disjoint supports.
#[pyfunction]
#[pyo3(signature = (n, radius = 20, margin = None, center = 0))]
fn rewrite<'py>(
    py: Python<'py>,
    n: i64,
    radius: u64,
    margin: Option<u64>,
    center: i64,
) -> PyResult<Bound<'py, PyDict>> {
    let rep =
        rewrite_disjoint(n, center, radius, margin.unwrap_or(n.unsigned_abs())).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("sup_norm", rep.sup_norm.to_string())?;
    d.set_item("disjoint", rep.disjoint)?;
    d.set_item("homologous", rep.homologous)?;
    d.set_item("cycle", Chain(rep.cycle).into_pyobject(py)?)?;
    Ok(d)
}

/// Random checks of the translation between chains on a group and
/// group-valued cochains. Returns failure counts per property.
#[pyfunction]
#[pyo3(signature = (space, radius = 6, samples = 50, max_degree = 2, seed = 0))]
fn rho_check<'py>(
    py: Python<'py>,
    space: &Presentation,
    radius: u64,
    samples: usize,
    max_degree: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = rho_roundtrip_check(&space.0, radius, samples, max_degree, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("holds", rep.holds())?;
    d.set_item("samples", rep.samples)?;
    d.set_item("roundtrip_failures", rep.roundtrip_failures)?;
    d.set_item("isometry_failures", rep.isometry_failures)?;
    d.set_item("chain_map_failures", rep.chain_map_failures)?;
    d.set_item("action_failures", rep.action_failures)?;
    d.set_item("linearity_failures", rep.linearity_failures)?;
    Ok(d)
}

/// Run a scenario given as TOML text. Returns `(exit_code, files)` where
/// `files` maps output names to contents; nothing is written to disk.
#[pyfunction]
fn run_scenario(text: &str) -> PyResult<(i32, Vec<(String, String)>)> {
    let s = parse_scenario(text).map_err(err)?;
    let out = execute(&s).map_err(err)?;
    Ok((out.status.exit_code(), out.files))
}

#[pymodule]
fn ufhom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Presentation>()?;
    m.add_class::<Window>()?;
    m.add_class::<Chain>()?;
    m.add_function(wrap_pyfunction!(class_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(seminorm, m)?)?;
    m.add_function(wrap_pyfunction!(prism, m)?)?;
    m.add_function(wrap_pyfunction!(rewrite, m)?)?;
    m.add_function(wrap_pyfunction!(rho_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
