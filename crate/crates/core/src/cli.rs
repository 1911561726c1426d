//! Scenario files and the operations behind the command line.
//!
//! A scenario is a TOML document naming one operation, the space (and map or
//! cycle) it runs on, and its parameters. [`execute`] turns it into a set of
//! named output files plus a status; nothing here touches the filesystem
//! except [`load_scenario`] and [`write_outcome`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::chain::{ChainPattern, Ring};
use crate::degree0::{
    class_verdict, folner_mean, seminorm_lower_via_mean, seminorm_upper, SeminormMode, Verdict,
    WindowSpec,
};
use crate::degree1::{prism_certificate, rewrite_disjoint};
use crate::error::{Error, Result};
use crate::grouphom::rho_roundtrip_check;
use crate::literal::{named_rule, parse_chain_literal, parse_rat};
use crate::rigidity::{
    averaging_chain_map, bilipschitz_verdict, group_hom_report, verify_qi, MapRule, QIMap,
};
use crate::space::{
    build_window, isoperimetric_profile, FolnerFamily, Point, Presentation, SubsetRule,
};
use crate::transport::{
    demands_from_chain, feasible_divergence_flow, DivergenceProblem, FlowCertificate,
    FrontierPolicy,
};
use crate::Rat;

pub const OPERATIONS: [&str; 10] = [
    "verdict",
    "seminorm",
    "mean",
    "bilip",
    "prism",
    "rho",
    "profile",
    "homomorphism",
    "averaging",
    "rewrite",
];

/// An integer or a `"p/q"` string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RatValue {
    Int(i64),
    Text(String),
}

impl RatValue {
    fn get(&self) -> Result<Rat> {
        match self {
            RatValue::Int(k) => Ok(Rat::from_integer((*k).into())),
            RatValue::Text(s) => {
                parse_rat(s).ok_or_else(|| Error::Contract(format!("'{s}' is not a rational")))
            }
        }
    }
}

/// A schedule entry: a radius around the base point, an interval
/// `[lo, hi]` of Z, or an explicit ball.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum WindowEntry {
    Radius(u64),
    Interval([i64; 2]),
    Ball { center: Vec<i64>, radius: u64 },
}

impl WindowEntry {
    fn spec(&self, p: &Presentation) -> Result<WindowSpec> {
        match self {
            WindowEntry::Radius(r) => Ok(WindowSpec::centered(p, *r)),
            WindowEntry::Interval([lo, hi]) => {
                if hi < lo || (hi - lo) % 2 != 0 {
                    return Err(Error::Contract(format!(
                        "interval [{lo}, {hi}] must have even length to be a ball"
                    )));
                }
                Ok(WindowSpec::interval(*lo, ((hi - lo) / 2) as u64))
            }
            WindowEntry::Ball { center, radius } => {
                Ok(WindowSpec::new(Point(center.clone()), *radius))
            }
        }
    }

    /// Parse the command-line form: `N` or `lo:hi`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Contract(format!("bad schedule entry '{s}' (expected N or lo:hi)"));
        match s.split_once(':') {
            Some((a, b)) => Ok(WindowEntry::Interval([
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ])),
            None => Ok(WindowEntry::Radius(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: Spanned<String>,
    pub dim: Option<usize>,
    pub rule: Option<Spanned<String>>,
    pub modulus: Option<Vec<i64>>,
    pub residues: Option<Vec<Vec<i64>>>,
    pub matrix: Option<Vec<Vec<i64>>>,
    pub rank: Option<u32>,
    pub degree: Option<u32>,
    pub base: Option<Box<SpaceSpec>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSpec {
    pub kind: Spanned<String>,
    pub value: Option<RatValue>,
    pub rule: Option<Spanned<String>>,
    pub modulus: Option<Vec<i64>>,
    pub residues: Option<Vec<Vec<i64>>>,
    pub matrix: Option<Vec<Vec<i64>>>,
    pub literal: Option<Spanned<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: Spanned<String>,
    pub factor: Option<i64>,
    pub vector: Option<Vec<i64>>,
    pub matrix: Option<Vec<Vec<i64>>>,
    pub n: Option<i64>,
    pub j: Option<i64>,
    pub target: Option<SpaceSpec>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub r: Option<u64>,
    pub ring: Option<String>,
    pub schedule: Option<Vec<WindowEntry>>,
    pub bound: Option<RatValue>,
    pub cap: Option<RatValue>,
    pub family: Option<String>,
    pub ns: Option<Vec<u64>>,
    pub n: Option<Vec<i64>>,
    pub degrees: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub max_degree: Option<usize>,
    pub seed: Option<u64>,
    pub radius: Option<u64>,
    pub margin: Option<u64>,
    pub center: Option<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub operation: Spanned<String>,
    pub description: Option<String>,
    pub out: Option<String>,
    pub space: Option<SpaceSpec>,
    pub cycle: Option<CycleSpec>,
    pub map: Option<MapSpec>,
    #[serde(default)]
    pub params: Params,
    /// Source text, for positions in diagnostics.
    #[serde(skip)]
    source: String,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

impl Scenario {
    /// A scenario with no file behind it: the operation on Z with the
    /// fundamental class.
    pub fn default_for(operation: &str) -> Self {
        Scenario {
            name: operation.to_string(),
            operation: Spanned::new(0..0, operation.to_string()),
            description: None,
            out: None,
            space: None,
            cycle: None,
            map: None,
            params: Params::default(),
            source: String::new(),
        }
    }

    fn at<T>(&self, s: &Spanned<T>, message: impl Into<String>) -> Error {
        let (line, column) = line_col(&self.source, s.span().start);
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn space(&self, s: &SpaceSpec) -> Result<Presentation> {
        let dim = s.dim.unwrap_or(1);
        match s.kind.get_ref().as_str() {
            "lattice" => Ok(Presentation::lattice(dim)),
            "subset" => {
                let rule = s.rule.as_ref().ok_or_else(|| self.at(&s.kind, "subset needs a rule"))?;
                Presentation::subset(dim, self.subset_rule(rule, s.modulus.clone(), s.residues.clone(), s.matrix.clone())?)
            }
            "free_group" => Presentation::free_group(s.rank.unwrap_or(2)),
            "regular_tree" => Presentation::regular_tree(s.degree.unwrap_or(3)),
            "doubling" => {
                let base = s.base.as_ref().ok_or_else(|| self.at(&s.kind, "doubling needs a [base] space"))?;
                Ok(Presentation::doubling(self.space(base)?))
            }
            other => Err(self.at(
                &s.kind,
                format!("unknown space kind '{other}' (expected lattice, subset, free_group, regular_tree or doubling)"),
            )),
        }
    }

    fn subset_rule(
        &self,
        rule: &Spanned<String>,
        modulus: Option<Vec<i64>>,
        residues: Option<Vec<Vec<i64>>>,
        matrix: Option<Vec<Vec<i64>>>,
    ) -> Result<SubsetRule> {
        match rule.get_ref().as_str() {
            "periodic" => Ok(SubsetRule::Periodic {
                modulus: modulus.ok_or_else(|| self.at(rule, "periodic rule needs modulus"))?,
                residues: residues.ok_or_else(|| self.at(rule, "periodic rule needs residues"))?,
            }),
            "lattice_image" => {
                Ok(SubsetRule::LatticeImage(matrix.ok_or_else(|| {
                    self.at(rule, "lattice_image rule needs matrix")
                })?))
            }
            name => named_rule(name)
                .ok_or_else(|| self.at(rule, format!("unknown subset rule '{name}'"))),
        }
    }

    pub fn presentation(&self) -> Result<Presentation> {
        match (&self.space, &self.map) {
            (Some(s), _) => self.space(s),
            // a bare matrix map acts on the lattice of its size
            (
                None,
                Some(MapSpec {
                    matrix: Some(m), ..
                }),
            ) => Ok(Presentation::lattice(m.len().max(1))),
            (None, _) => Ok(Presentation::lattice(1)),
        }
    }

    pub fn ring(&self) -> Result<Ring> {
        match self.params.ring.as_deref() {
            None | Some("Z") => Ok(Ring::Int),
            Some("Q") | Some("R") => Ok(Ring::Rat),
            Some(other) => Err(Error::Contract(format!(
                "unknown ring '{other}' (expected Z or Q)"
            ))),
        }
    }

    pub fn pattern(&self) -> Result<ChainPattern> {
        let Some(c) = &self.cycle else {
            return Ok(ChainPattern::fundamental());
        };
        let value = c.value.as_ref().map(RatValue::get).transpose()?;
        let one = || Rat::from_integer(1.into());
        match c.kind.get_ref().as_str() {
            "fundamental" => Ok(ChainPattern::fundamental()),
            "constant" => Ok(ChainPattern::Constant {
                value: value.unwrap_or_else(one),
            }),
            "indicator" => {
                let rule = c.rule.as_ref().ok_or_else(|| self.at(&c.kind, "indicator needs a rule"))?;
                Ok(ChainPattern::Indicator {
                    rule: self.subset_rule(rule, c.modulus.clone(), c.residues.clone(), c.matrix.clone())?,
                    value: value.unwrap_or_else(one),
                })
            }
            "literal" => {
                let lit = c.literal.as_ref().ok_or_else(|| self.at(&c.kind, "literal cycle needs literal ="))?;
                let start = lit.span().start;
                let (mut line, _) = line_col(&self.source, start);
                if self.source[start..].starts_with("\"\"\"\n") || self.source[start..].starts_with("'''\n") {
                    line += 1;
                }
                parse_chain_literal(lit.get_ref(), self.ring()?, line.max(1))
            }
            other => Err(self.at(
                &c.kind,
                format!("unknown cycle kind '{other}' (expected fundamental, constant, indicator or literal)"),
            )),
        }
    }

    pub fn map(&self) -> Result<QIMap> {
        let m = self
            .map
            .as_ref()
            .ok_or_else(|| Error::Contract("this operation needs a [map] table".into()))?;
        let source = self.presentation()?;
        let need =
            |what: &str| self.at(&m.kind, format!("map '{}' needs {what}", m.kind.get_ref()));
        let (rule, default_target) = match m.kind.get_ref().as_str() {
            "identity" => (MapRule::Identity, source.clone()),
            "inclusion" => (
                MapRule::Inclusion,
                Presentation::lattice(
                    source
                        .lattice_dim()
                        .ok_or_else(|| need("a lattice-based source"))?,
                ),
            ),
            "scale" => (
                MapRule::Scale(m.factor.ok_or_else(|| need("factor"))?),
                source.clone(),
            ),
            "floor_div" => (
                MapRule::FloorDiv(m.factor.ok_or_else(|| need("factor"))?),
                source.clone(),
            ),
            "shift" => (
                MapRule::Shift(m.vector.clone().ok_or_else(|| need("vector"))?),
                source.clone(),
            ),
            "linear" => (
                MapRule::Linear(m.matrix.clone().ok_or_else(|| need("matrix"))?),
                source.clone(),
            ),
            "doubling_projection" => match &source {
                Presentation::Doubling(base) => (MapRule::DoublingProjection, (**base).clone()),
                _ => return Err(need("a doubling source space")),
            },
            "squares_retraction" => (
                MapRule::SquaresRetraction {
                    n: m.n.ok_or_else(|| need("n"))?,
                    j: m.j.ok_or_else(|| need("j"))?,
                },
                Presentation::subset(1, SubsetRule::NonSquares)?,
            ),
            other => return Err(self.at(&m.kind, format!("unknown map kind '{other}'"))),
        };
        let target = match &m.target {
            Some(t) => self.space(t)?,
            None => default_target,
        };
        QIMap::new(source, target, rule)
    }

    pub fn r(&self) -> u64 {
        self.params.r.unwrap_or(1)
    }

    pub fn schedule(&self, p: &Presentation) -> Result<Vec<WindowSpec>> {
        match &self.params.schedule {
            Some(s) if !s.is_empty() => s.iter().map(|e| e.spec(p)).collect(),
            _ => Ok([10u64, 20, 40]
                .iter()
                .map(|&k| WindowSpec::centered(p, k))
                .collect()),
        }
    }

    fn family(&self) -> Result<FolnerFamily> {
        match self.params.family.as_deref() {
            None | Some("ball") => Ok(FolnerFamily::CenteredBall),
            Some("interval") => Ok(FolnerFamily::Interval),
            Some("box") => Ok(FolnerFamily::Box),
            Some(other) => Err(Error::Contract(format!(
                "unknown family '{other}' (expected ball, interval or box)"
            ))),
        }
    }

    fn ns(&self) -> Vec<u64> {
        self.params
            .ns
            .clone()
            .unwrap_or_else(|| vec![1, 2, 4, 8, 16, 32])
    }

    /// Output directory: `--out` / `out =` / `UFHOM_OUT` / `out/<name>`.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(o) = &self.out {
            return PathBuf::from(o);
        }
        let root =
            std::env::var_os("UFHOM_OUT").map_or_else(|| PathBuf::from("out"), PathBuf::from);
        root.join(&self.name)
    }
}

/// Parse a scenario document; TOML and semantic errors carry line and column.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut s: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |sp| line_col(text, sp.start));
        Error::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    s.source = text.to_string();
    if !OPERATIONS.contains(&s.operation.get_ref().as_str()) {
        return Err(s.at(
            &s.operation,
            format!(
                "unknown operation '{}' (expected one of {})",
                s.operation.get_ref(),
                OPERATIONS.join(", ")
            ),
        ));
    }
    // Resolve every spec once so bad kinds are reported before running.
    s.presentation()?;
    if s.cycle.is_some() {
        s.pattern()?;
    }
    if s.map.is_some() {
        s.map()?;
    }
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Conclusive,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Conclusive => 0,
            Status::Inconclusive => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub status: Status,
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn summary(&self) -> &str {
        self.file("summary.tsv").unwrap_or("")
    }
}

/// Key/value summary table.
#[derive(Default)]
struct Summary(String);

impl Summary {
    fn new(s: &Scenario) -> Self {
        let mut out = Summary(String::from("key\tvalue\n"));
        out.row("scenario", &s.name);
        out.row("operation", s.operation.get_ref());
        out
    }

    fn row(&mut self, k: &str, v: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{k}\t{v}");
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Conclusive
    } else {
        Status::Inconclusive
    }
}

fn opt_rat(v: &Option<Rat>) -> String {
    v.as_ref().map_or_else(|| "inf".to_string(), Rat::to_string)
}

fn run_verdict(s: &Scenario) -> Result<Outcome> {
    let p = s.presentation()?;
    let pattern = s.pattern()?;
    let ring = s.ring()?;
    let r = s.r();
    let schedule = s.schedule(&p)?;
    let v = class_verdict(&pattern, &p, r, &schedule, ring)?;
    let mut sum = Summary::new(s);
    sum.row("ring", ring);
    sum.row("r", r);
    sum.row("verdict", v.label());
    sum.row("conclusive", v.is_conclusive());
    match &v.verdict {
        Verdict::Trivial { capacity, .. } => sum.row("capacity", capacity),
        Verdict::Nontrivial { window } => sum.row("witness_window", schedule[*window].radius),
        Verdict::Inconclusive { reason } => sum.row("reason", reason),
    }
    if let Some(g) = &v.global {
        sum.row("global_method", format!("{:?}", g.method));
        sum.row("global_capacity", opt_rat(&g.capacity));
    }
    let mut files = vec![("verdict.tsv".to_string(), v.to_tsv())];
    let mut table =
        String::from("window\tcenter\tradius\tinterior\tC_min\twitness_boundary\tdeficit\n");
    for (k, res) in v.windows.iter().enumerate() {
        let _ = writeln!(
            table,
            "{k}\t{}\t{}\t{}\t{}\t{}\t{}",
            res.spec.center,
            res.spec.radius,
            res.interior_size,
            opt_rat(&res.c_min),
            res.witness_boundary
                .map_or_else(|| "-".to_string(), |b| b.to_string()),
            res.deficit
                .as_ref()
                .map_or_else(|| "-".to_string(), Rat::to_string)
        );
        let w = res.spec.build(&p, r)?;
        if let Some(cut) = &res.witness {
            files.push((format!("cut_{k}.tsv"), cut.to_tsv(&w)));
        }
        if let Some(flow) = v.certificates.get(k) {
            files.push((format!("flow_{k}.tsv"), flow.to_tsv(&w)));
        }
    }
    files.insert(1, ("windows.tsv".to_string(), table));
    if let Some(cap) = &s.params.cap {
        let cap = cap.get()?;
        sum.row("cap", &cap);
        for (k, spec) in schedule.iter().enumerate() {
            let w = spec.build(&p, r)?;
            let demands = demands_from_chain(&w, &pattern.materialize(&w, ring)?)?;
            let prob = DivergenceProblem {
                window: &w,
                r,
                capacity: cap.clone(),
                demands,
                frontier: FrontierPolicy::Free,
            };
            match feasible_divergence_flow(&prob)? {
                FlowCertificate::Flow(f) => {
                    sum.row(&format!("cap_window_{k}"), "feasible");
                    files.push((format!("cap_flow_{k}.tsv"), f.to_tsv(&w)));
                }
                FlowCertificate::Cut(c) => {
                    sum.row(&format!("cap_window_{k}"), "infeasible");
                    files.push((format!("cap_cut_{k}.tsv"), c.to_tsv(&w)));
                }
            }
        }
    }
    files.insert(0, ("summary.tsv".to_string(), sum.0));
    Ok(Outcome {
        status: status(v.is_conclusive()),
        files,
    })
}

fn run_seminorm(s: &Scenario) -> Result<Outcome> {
    let p = s.presentation()?;
    let pattern = s.pattern()?;
    let r = s.r();
    let bound = s
        .params
        .bound
        .as_ref()
        .map_or_else(|| Ok(Rat::from_integer(1.into())), RatValue::get)?;
    let schedule = s.schedule(&p)?;
    let est = seminorm_upper(&pattern, &p, r, &bound, &schedule)?;
    let mut sum = Summary::new(s);
    sum.row("r", r);
    sum.row("bound", &est.bound);
    sum.row("upper", &est.t);
    sum.row(
        "mode",
        match &est.mode {
            SeminormMode::Periodic { periods } => format!("periodic {periods:?}"),
            SeminormMode::Windows => "windows".to_string(),
        },
    );
    sum.row("upper_certified", est.certified);
    let mut ok = est.certified;
    if s.params.family.is_some() || s.params.ns.is_some() {
        let lb = seminorm_lower_via_mean(&pattern, &p, &s.family()?, &s.ns())?;
        sum.row("lower", &lb.value);
        sum.row("lower_certified", lb.certified);
        if let Some(t) = &lb.tail_evidence {
            sum.row("tail_evidence", t);
        }
    }
    let mut table = String::from("center\tradius\tt\n");
    for (spec, t) in &est.per_window {
        let _ = writeln!(table, "{}\t{}\t{t}", spec.center, spec.radius);
    }
    let mut files = vec![
        ("summary.tsv".to_string(), String::new()),
        ("seminorm.tsv".to_string(), table),
    ];
    if let Some(b) = &est.correction {
        files.push(("correction.chain".to_string(), b.to_literal()));
    } else {
        ok = false;
    }
    files[0].1 = sum.0;
    Ok(Outcome {
        status: status(ok),
        files,
    })
}

fn run_mean(s: &Scenario) -> Result<Outcome> {
    let p = s.presentation()?;
    let pattern = s.pattern()?;
    let fam = s.family()?;
    let ns = s.ns();
    let m = folner_mean(&pattern, &p, &fam, &ns)?;
    let lb = seminorm_lower_via_mean(&pattern, &p, &fam, &ns)?;
    let mut sum = Summary::new(s);
    sum.row("family", format!("{fam:?}"));
    sum.row("limit", opt_rat(&m.limit).replace("inf", "-"));
    sum.row("lower", &lb.value);
    sum.row("lower_certified", lb.certified);
    if let Some(t) = &lb.tail_evidence {
        sum.row("tail_evidence", t);
    }
    let mut table = String::from("n\tmean\n");
    for (n, v) in &m.values {
        let _ = writeln!(table, "{n}\t{v}");
    }
    Ok(Outcome {
        status: status(m.limit.is_some()),
        files: vec![("summary.tsv".into(), sum.0), ("mean.tsv".into(), table)],
    })
}

fn run_bilip(s: &Scenario) -> Result<Outcome> {
    let f = s.map()?;
    let r = s.r();
    let schedule = s.schedule(&f.target)?;
    let v = bilipschitz_verdict(&f, r, &schedule)?;
    let mut sum = Summary::new(s);
    sum.row("r", r);
    sum.row("answer", v.answer.label());
    sum.row("conclusive", v.is_conclusive());
    sum.row("class", v.class.label());
    if let Some((c, d)) = &f.constants {
        sum.row("qi_constants", format!("{c} {d}"));
    }
    if let Some(last) = schedule.last() {
        let w = build_window(&f.source, &f.preimage_hint(&last.center), last.radius, 0)?;
        let qi = verify_qi(&f, &w)?;
        sum.row("qi_verified", qi.holds());
    }
    let mut files = vec![("verdict.tsv".to_string(), v.class.to_tsv())];
    for (k, res) in v.class.windows.iter().enumerate() {
        if let Some(d) = &res.deficit {
            sum.row(&format!("deficit_{k}"), d);
        }
    }
    if let Some(m) = &v.matching {
        sum.row("displacement", m.displacement);
        sum.row("bijective", m.bijective);
        sum.row(
            "matching_bilipschitz",
            opt_rat(&m.bilipschitz).replace("inf", "-"),
        );
        files.push(("matching.tsv".to_string(), m.to_tsv()));
    }
    files.insert(0, ("summary.tsv".to_string(), sum.0));
    Ok(Outcome {
        status: status(v.is_conclusive()),
        files,
    })
}

fn run_homomorphism(s: &Scenario) -> Result<Outcome> {
    let m = s
        .map
        .as_ref()
        .and_then(|m| m.matrix.clone())
        .or_else(|| s.map.as_ref().and_then(|m| m.factor).map(|k| vec![vec![k]]))
        .ok_or_else(|| Error::Contract("homomorphism needs [map] with matrix or factor".into()))?;
    let lattice = Presentation::lattice(m.len());
    let rep = group_hom_report(&m, s.r(), &s.schedule(&lattice)?)?;
    let mut sum = Summary::new(s);
    sum.row("kernel", rep.kernel);
    sum.row("cokernel", rep.cokernel);
    sum.row("predicted", rep.predicted.label());
    sum.row("measured", rep.measured.answer.label());
    sum.row("pushforward_mean", &rep.pushforward_mean);
    sum.row("predicted_mean", &rep.predicted_mean);
    sum.row("agrees", rep.agrees());
    Ok(Outcome {
        status: status(rep.agrees() && rep.measured.is_conclusive()),
        files: vec![
            ("summary.tsv".into(), sum.0),
            ("verdict.tsv".into(), rep.measured.class.to_tsv()),
        ],
    })
}

fn prism_ns(s: &Scenario) -> Vec<i64> {
    s.params.n.clone().unwrap_or_else(|| (1..=6).collect())
}

fn run_prism(s: &Scenario, rewrite: bool) -> Result<Outcome> {
    let mut sum = Summary::new(s);
    let mut files = Vec::new();
    let mut table = String::from("n\tradius\tmargin\tverified\tsup_norm\tdisjoint\thomologous\n");
    let mut ok = true;
    for n in prism_ns(s) {
        let radius = s.params.radius.unwrap_or(10 * n.max(1) as u64);
        let margin = s.params.margin.unwrap_or(n.max(1) as u64);
        let center = s.params.center.unwrap_or(0);
        let pw = prism_certificate(n, center, radius, margin)?;
        let rw = rewrite_disjoint(n, center, radius, margin)?;
        ok &= pw.verified
            && rw.disjoint
            && rw.homologous
            && rw.sup_norm == Rat::from_integer(1.into());
        let _ = writeln!(
            table,
            "{n}\t{radius}\t{margin}\t{}\t{}\t{}\t{}",
            pw.verified, rw.sup_norm, rw.disjoint, rw.homologous
        );
        if rewrite {
            files.push((format!("rewrite_{n}.chain"), rw.cycle.to_literal()));
            files.push((
                format!("rewrite_witness_{n}.chain"),
                rw.witness.to_literal(),
            ));
        } else {
            files.push((format!("prism_{n}.chain"), pw.chain.to_literal()));
        }
    }
    sum.row("all_verified", ok);
    files.insert(0, ("prism.tsv".to_string(), table));
    files.insert(0, ("summary.tsv".to_string(), sum.0));
    Ok(Outcome {
        status: status(ok),
        files,
    })
}

fn run_rho(s: &Scenario) -> Result<Outcome> {
    let p = s.presentation()?;
    let rep = rho_roundtrip_check(
        &p,
        s.params.radius.unwrap_or(12),
        s.params.samples.unwrap_or(100),
        s.params.max_degree.unwrap_or(2),
        s.params.seed.unwrap_or(0),
    )?;
    let mut sum = Summary::new(s);
    sum.row("holds", rep.holds());
    Ok(Outcome {
        status: status(rep.holds()),
        files: vec![
            ("summary.tsv".into(), sum.0),
            ("rho.tsv".into(), rep.to_tsv()),
        ],
    })
}

fn run_profile(s: &Scenario) -> Result<Outcome> {
    let p = s.presentation()?;
    let prof = isoperimetric_profile(&p, &s.family()?, s.r(), &s.ns())?;
    let mut table = String::from("n\tratio\n");
    for (n, v) in &prof {
        let _ = writeln!(table, "{n}\t{v}");
    }
    let mut sum = Summary::new(s);
    sum.row("r", s.r());
    if let Some((n, v)) = prof.last() {
        sum.row("last_n", n);
        sum.row("last_ratio", v);
    }
    Ok(Outcome {
        status: Status::Conclusive,
        files: vec![("summary.tsv".into(), sum.0), ("profile.tsv".into(), table)],
    })
}

fn run_averaging(s: &Scenario) -> Result<Outcome> {
    let mut table = String::from(
        "n\tdegree\tbound\texact_norm\tsampled_norm\tidentity_checks\tidentity_failures\n",
    );
    let mut ok = true;
    for n in s.params.n.clone().unwrap_or_else(|| vec![1, 2, 4, 8]) {
        for &k in s.params.degrees.as_deref().unwrap_or(&[0, 1]) {
            let radius = s.params.radius.unwrap_or((n * n).max(16) as u64 + 8);
            let rep = averaging_chain_map(
                n,
                k,
                radius,
                s.params.samples.unwrap_or(50),
                s.params.seed.unwrap_or(0),
            )?;
            ok &= rep.holds();
            let _ = writeln!(
                table,
                "{n}\t{k}\t{}\t{}\t{}\t{}\t{}",
                rep.bound,
                rep.exact_norm,
                rep.sampled_norm,
                rep.identity_checks,
                rep.identity_failures
            );
        }
    }
    let mut sum = Summary::new(s);
    sum.row("holds", ok);
    Ok(Outcome {
        status: status(ok),
        files: vec![
            ("summary.tsv".into(), sum.0),
            ("averaging.tsv".into(), table),
        ],
    })
}

/// Run the scenario's operation.
pub fn execute(s: &Scenario) -> Result<Outcome> {
    match s.operation.get_ref().as_str() {
        "verdict" => run_verdict(s),
        "seminorm" => run_seminorm(s),
        "mean" => run_mean(s),
        "bilip" => run_bilip(s),
        "homomorphism" => run_homomorphism(s),
        "prism" => run_prism(s, false),
        "rewrite" => run_prism(s, true),
        "rho" => run_rho(s),
        "profile" => run_profile(s),
        "averaging" => run_averaging(s),
        other => Err(Error::Contract(format!("unknown operation '{other}'"))),
    }
}

/// Write every output file into `dir` (created if needed).
pub fn write_outcome(o: &Outcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in &o.files {
        std::fs::write(dir.join(name), content)?;
    }
    Ok(())
}
