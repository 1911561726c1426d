//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ufhom::chain::{int, rat, ChainPattern, Ring, UFChain};
use ufhom::cli::{execute, load_scenario, write_outcome};
use ufhom::degree0::{
    class_verdict, folner_mean, seminorm_lower_via_mean, seminorm_upper, GlobalMethod,
    SeminormMode, Verdict, WindowSpec,
};
use ufhom::degree1::{prism_certificate, rewrite_disjoint};
use ufhom::grouphom::rho_roundtrip_check;
use ufhom::rigidity::{
    averaging_chain_map, bilipschitz_verdict, group_hom_report, Answer, MapRule, QIMap,
};
use ufhom::space::{build_window, FolnerFamily, Point, Presentation, SubsetRule, Window};
use ufhom::transport::{
    brute_force_cut_oracle, check_flow, feasible_divergence_flow, CutMeasure, DivergenceProblem,
    FlowCertificate, FrontierPolicy,
};
use ufhom::Rat;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(start: Instant, limit: Duration) -> std::result::Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        Err(format!("took {t:?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn z() -> Presentation {
    Presentation::lattice(1)
}

fn random_chain(w: &Window, degree: usize, prop: u64, rng: &mut ChaCha8Rng) -> UFChain {
    let mut c = UFChain::zero(degree, Ring::Int);
    for _ in 0..rng.gen_range(1..=20) {
        let i = rng.gen_range(0..w.len());
        let near = w.neighbors(i, prop);
        let mut s = vec![w.point(i).clone()];
        for _ in 0..degree {
            let j = if near.is_empty() || rng.gen_bool(0.2) {
                i
            } else {
                near[rng.gen_range(0..near.len())]
            };
            s.push(w.point(j).clone());
        }
        c.add_term(s, int(rng.gen_range(-3..=3)))
            .expect("matching degree");
    }
    c
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let windows = [
        ok(build_window(&z(), &Point::int(0), 99, 2))?,
        ok(build_window(
            &Presentation::lattice(2),
            &Point::new([0, 0]),
            9,
            2,
        ))?,
        ok(build_window(
            &Presentation::regular_tree(3).map_err(|e| e.to_string())?,
            &Point(vec![]),
            4,
            1,
        ))?,
        ok(build_window(
            &Presentation::free_group(2).map_err(|e| e.to_string())?,
            &Point(vec![]),
            3,
            1,
        ))?,
    ];
    for w in &windows {
        ensure!(w.len() <= 200, "window has {} points", w.len());
    }
    for k in 0..500 {
        let w = &windows[k % windows.len()];
        let degree = k % 4;
        let a = random_chain(w, degree, 2, &mut rng);
        let b = random_chain(w, degree, 2, &mut rng);
        let dd = ok(ok(a.boundary())?.boundary())?;
        ensure!(dd.is_zero(), "boundary of boundary nonzero on sample {k}");
        let sum = ok(a.add(&b))?;
        ensure!(
            sum.sup_norm() <= a.sup_norm() + b.sup_norm(),
            "triangle inequality fails on sample {k}"
        );
        let r = rat(rng.gen_range(-7..=7), rng.gen_range(1..=5));
        ensure!(
            a.scale(&r).sup_norm() == r.abs() * a.sup_norm(),
            "scaling fails on sample {k}"
        );
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("500 chains, degrees 0-3, {:?}", start.elapsed()))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tree = ok(Presentation::regular_tree(3))?;
    let cases: Vec<(Window, u64)> = vec![
        (ok(build_window(&z(), &Point::int(0), 6, 1))?, 1),
        (ok(build_window(&z(), &Point::int(3), 7, 2))?, 2),
        (
            ok(build_window(
                &Presentation::lattice(2),
                &Point::new([0, 0]),
                2,
                1,
            ))?,
            1,
        ),
        (
            ok(build_window(
                &Presentation::lattice(2),
                &Point::new([1, 0]),
                3,
                2,
            ))?,
            2,
        ),
        (ok(build_window(&tree, &Point(vec![]), 3, 1))?, 1),
    ];
    let caps = [int(0), rat(1, 2), int(1), rat(3, 2), int(2), int(3)];
    let (mut feasible, mut infeasible) = (0, 0);
    for k in 0..200 {
        let (w, r) = &cases[k % cases.len()];
        ensure!(w.interior_indices().len() <= 12, "interior too large");
        let mut d = vec![Rat::zero(); w.len()];
        for i in w.interior_indices() {
            d[i] = int(rng.gen_range(-3..=3));
        }
        let cap = caps[rng.gen_range(0..caps.len())].clone();
        let p = DivergenceProblem {
            window: w,
            r: *r,
            capacity: cap.clone(),
            demands: d.clone(),
            frontier: FrontierPolicy::Free,
        };
        let cert = ok(feasible_divergence_flow(&p))?;
        let (_, excess) = ok(brute_force_cut_oracle(
            w,
            *r,
            &d,
            &cap,
            CutMeasure::CrossingEdges,
        ))?;
        match cert {
            FlowCertificate::Flow(f) => {
                feasible += 1;
                ensure!(
                    !excess.is_positive(),
                    "case {k}: flow found but a cut is violated"
                );
                ok(check_flow(&p, &f))?;
            }
            FlowCertificate::Cut(c) => {
                infeasible += 1;
                ensure!(
                    excess.is_positive(),
                    "case {k}: cut reported but no cut is violated"
                );
                ensure!(
                    c.demand_sum.abs() > c.cut_capacity,
                    "case {k}: witness is not violated"
                );
            }
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "200 cases ({feasible} feasible, {infeasible} infeasible), {:?}",
        start.elapsed()
    ))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let sched: Vec<WindowSpec> = [50u64, 100, 200]
        .iter()
        .map(|&n| WindowSpec::centered(&z(), n))
        .collect();
    let v = ok(class_verdict(
        &ChainPattern::fundamental(),
        &z(),
        1,
        &sched,
        Ring::Int,
    ))?;
    ensure!(
        v.is_nontrivial(),
        "fundamental class of Z not reported nontrivial"
    );
    for (res, n) in v.windows.iter().zip([50i64, 100, 200]) {
        let c = res.c_min.clone().ok_or("infinite capacity")?;
        ensure!(
            c == rat(2 * n - 1, 2),
            "C_min({n}) = {c}, expected {}",
            rat(2 * n - 1, 2)
        );
        ensure!(c >= rat(n, 4), "C_min({n}) = {c} below N/4");
        let w = res.witness.as_ref().ok_or("no witness")?;
        ensure!(
            w.set.len() == res.interior_size,
            "witness is not the whole interior"
        );
        ensure!(
            w.ratio() == Some(c.clone()),
            "witness ratio differs from C_min"
        );
        let win = ok(res.spec.build(&z(), 1))?;
        let d: Vec<Rat> = (0..win.len())
            .map(|i| if win.is_interior(i) { int(1) } else { int(0) })
            .collect();
        let (_, excess) = ok(brute_force_cut_oracle_prefix(&win, &d, &c))?;
        ensure!(excess.is_zero(), "spanning cut exceeds C_min");
    }
    let tree = ok(Presentation::regular_tree(3))?;
    let sched: Vec<WindowSpec> = [4u64, 6, 8]
        .iter()
        .map(|&n| WindowSpec::centered(&tree, n))
        .collect();
    let v = ok(class_verdict(
        &ChainPattern::fundamental(),
        &tree,
        1,
        &sched,
        Ring::Int,
    ))?;
    ensure!(
        matches!(v.verdict, Verdict::Trivial { ref capacity, conclusive: true } if *capacity == int(1)),
        "tree verdict {:?}",
        v.verdict
    );
    ensure!(
        matches!(
            v.global.as_ref().map(|g| &g.method),
            Some(GlobalMethod::Horocyclic { degree: 3 })
        ),
        "no horocyclic certificate"
    );
    for (spec, flow) in sched.iter().zip(&v.certificates) {
        let w = ok(spec.build(&tree, 1))?;
        let d: Vec<Rat> = (0..w.len())
            .map(|i| if w.is_interior(i) { int(1) } else { int(0) })
            .collect();
        let p = DivergenceProblem {
            window: &w,
            r: 1,
            capacity: int(1),
            demands: d,
            frontier: FrontierPolicy::Free,
        };
        ok(check_flow(&p, flow))?;
        ensure!(flow.is_integral(), "tree certificate not integral");
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "C_min = 99/2, 199/2, 399/2; tree C = 1 at depths 4, 6, 8; {:?}",
        start.elapsed()
    ))
}

/// Cuts `F = [lo, x]` of an interval window (the spanning prefixes); returns
/// the largest `|sum_F c| - C * crossing(F)`.
fn brute_force_cut_oracle_prefix(
    w: &Window,
    d: &[Rat],
    c: &Rat,
) -> std::result::Result<(usize, Rat), String> {
    let mut interior: Vec<usize> = w.interior_indices();
    interior.sort_by_key(|&i| w.point(i).0[0]);
    let mut best = (0, Rat::zero());
    for end in 1..=interior.len() {
        let f = &interior[..end];
        let sum: Rat = f.iter().map(|&i| d[i].clone()).sum();
        let crossing = ufhom::space::crossing_edges(w, f, 1);
        let v = sum.abs() - c * Rat::from_integer((crossing as i64).into());
        if v > best.1 {
            best = (end, v);
        }
    }
    Ok(best)
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let ns = [100i64, 400, 900];
    let sched: Vec<WindowSpec> = ns
        .iter()
        .map(|&n| WindowSpec::interval(0, (n / 2) as u64))
        .collect();
    let pattern = ChainPattern::Indicator {
        rule: SubsetRule::Squares,
        value: int(1),
    };
    let v = ok(class_verdict(&pattern, &z(), 1, &sched, Ring::Int))?;
    ensure!(v.is_nontrivial(), "squares verdict {:?}", v.verdict);
    let cs: Vec<Rat> = v
        .windows
        .iter()
        .map(|w| w.c_min.clone())
        .collect::<Option<_>>()
        .ok_or("infinite capacity")?;
    for (c, n) in cs.iter().zip(ns) {
        let root = (n as f64).sqrt().floor() as i64;
        ensure!(
            *c >= rat(root - 1, 4),
            "C_min on [0, {n}] = {c} below the bound"
        );
    }
    ensure!(
        cs.windows(2).all(|p| p[0] < p[1]),
        "C_min not strictly increasing"
    );
    Ok(format!(
        "C_min = {} on [0, 100], [0, 400], [0, 900]; {:?}",
        cs.iter().map(Rat::to_string).collect::<Vec<_>>().join(", "),
        start.elapsed()
    ))
}

fn evens(value: Rat) -> ChainPattern {
    ChainPattern::Indicator {
        rule: SubsetRule::Periodic {
            modulus: vec![2],
            residues: vec![vec![0]],
        },
        value,
    }
}

fn criterion_5() -> Check {
    let sched = [
        WindowSpec::centered(&z(), 10),
        WindowSpec::centered(&z(), 20),
    ];
    let pattern = evens(int(2));
    let est = ok(seminorm_upper(&pattern, &z(), 1, &int(1), &sched))?;
    ensure!(est.t == int(1), "upper bound {}", est.t);
    ensure!(
        est.certified && matches!(est.mode, SeminormMode::Periodic { .. }),
        "upper bound not certified"
    );
    let b = est.correction.ok_or("no correction chain")?;
    let w = ok(sched[1].build(&z(), 1))?;
    let c = ok(pattern.materialize(&w, Ring::Rat))?;
    ensure!(b.sup_norm() <= int(1), "correction norm {}", b.sup_norm());
    let fixed = ok(c.add(&ok(b.boundary())?))?;
    for i in w.interior_indices() {
        let v = fixed.coefficient(std::slice::from_ref(w.point(i)));
        ensure!(v.abs() <= int(1), "corrected value {v} at {}", w.point(i));
    }
    let lb = ok(seminorm_lower_via_mean(
        &evens(int(1)),
        &z(),
        &FolnerFamily::Interval,
        &[1, 2, 10, 11],
    ))?;
    ensure!(
        lb.certified && lb.value == rat(1, 2),
        "mean lower bound {}",
        lb.value
    );
    Ok("upper 1 with checked correction; mean of chi_2Z = 1/2".into())
}

fn criterion_6() -> Check {
    let cases = [
        (z(), FolnerFamily::Interval, vec![1u64, 2, 5, 17, 64]),
        (
            Presentation::lattice(2),
            FolnerFamily::Box,
            vec![1, 2, 5, 9],
        ),
        (z(), FolnerFamily::CenteredBall, vec![1, 3, 30]),
        (
            Presentation::lattice(2),
            FolnerFamily::CenteredBall,
            vec![1, 4, 8],
        ),
    ];
    for (p, fam, ns) in cases {
        let sched = [WindowSpec::centered(&p, 4), WindowSpec::centered(&p, 8)];
        let up = ok(seminorm_upper(
            &ChainPattern::fundamental(),
            &p,
            1,
            &int(1),
            &sched,
        ))?;
        ensure!(
            up.t == int(1) && up.certified,
            "upper bound {} on {p:?}",
            up.t
        );
        let lb = ok(seminorm_lower_via_mean(
            &ChainPattern::fundamental(),
            &p,
            &fam,
            &ns,
        ))?;
        ensure!(
            lb.certified && lb.value == int(1),
            "lower bound {} on {p:?}",
            lb.value
        );
        let m = ok(folner_mean(&ChainPattern::fundamental(), &p, &fam, &ns))?;
        ensure!(
            m.values.iter().all(|(_, v)| *v == int(1)),
            "a Folner mean differs from 1 on {p:?}"
        );
    }
    Ok("upper = lower = 1 on Z and Z^2; every Folner mean is 1".into())
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let centered = |p: &Presentation, rs: &[u64]| {
        rs.iter()
            .map(|&r| WindowSpec::centered(p, r))
            .collect::<Vec<_>>()
    };

    let id = ok(QIMap::new(z(), z(), MapRule::Identity))?;
    let v = ok(bilipschitz_verdict(&id, 1, &centered(&z(), &[10, 20, 40])))?;
    let m = v.matching.as_ref().ok_or("identity: no matching")?;
    ensure!(
        v.answer == Answer::Yes && v.is_conclusive(),
        "identity: {:?}",
        v.answer
    );
    ensure!(
        m.displacement == 0 && m.bijective,
        "identity: displacement {}",
        m.displacement
    );

    let evens = ok(Presentation::residues(2, &[0]))?;
    let inc = ok(QIMap::new(evens, z(), MapRule::Inclusion))?;
    let ns = [50u64, 100, 200];
    let v = ok(bilipschitz_verdict(&inc, 1, &centered(&z(), &ns)))?;
    ensure!(
        v.answer == Answer::No && v.is_conclusive(),
        "2Z -> Z: {:?}",
        v.answer
    );
    for (res, n) in v.class.windows.iter().zip(ns) {
        let d = res.deficit.clone().ok_or("2Z -> Z: no deficit")?;
        ensure!(
            d >= rat(n as i64, 4) - int(1),
            "2Z -> Z: deficit {d} at N = {n}"
        );
    }

    let tree = ok(Presentation::regular_tree(3))?;
    let proj = ok(QIMap::new(
        Presentation::doubling(tree.clone()),
        tree.clone(),
        MapRule::DoublingProjection,
    ))?;
    let v = ok(bilipschitz_verdict(&proj, 1, &centered(&tree, &[3, 4, 5])))?;
    ensure!(
        v.answer == Answer::Yes && v.is_conclusive(),
        "doubled tree: {:?}",
        v.answer
    );
    ensure!(
        v.class.certificates.iter().all(|f| f.is_integral()),
        "doubled tree: certificate not integral"
    );
    let m = v.matching.as_ref().ok_or("doubled tree: no matching")?;
    ensure!(
        m.bijective && m.bilipschitz.is_some(),
        "doubled tree: matching not a bijection"
    );

    let rep = ok(group_hom_report(
        &[vec![2]],
        1,
        &centered(&z(), &[50, 100, 200]),
    ))?;
    ensure!(
        rep.kernel == 1 && rep.cokernel == 2,
        "x -> 2x: ker {} coker {}",
        rep.kernel,
        rep.cokernel
    );
    ensure!(
        rep.predicted == Answer::No && rep.measured.answer == Answer::No,
        "x -> 2x: {:?}",
        rep.measured.answer
    );
    ensure!(
        rep.agrees(),
        "x -> 2x: mean {} vs {}",
        rep.pushforward_mean,
        rep.predicted_mean
    );
    Ok(format!(
        "id YES (0), 2Z->Z NO, doubled tree YES (displacement {}), x->2x NO; {:?}",
        m.displacement,
        start.elapsed()
    ))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let mut worst = Rat::zero();
    for n in [1i64, 2, 4, 8] {
        for k in [0usize, 1] {
            let radius = (n * n).max(16) as u64 + 8;
            let rep = ok(averaging_chain_map(n, k, radius, 50, 8 + n as u64))?;
            ensure!(
                rep.identity_checks == 50 && rep.identity_failures == 0,
                "n = {n}, k = {k}: identity fails"
            );
            ensure!(
                rep.sampled_norm <= rep.bound,
                "n = {n}, k = {k}: sampled norm {} > {}",
                rep.sampled_norm,
                rep.bound
            );
            ensure!(
                rep.exact_norm <= rep.bound,
                "n = {n}, k = {k}: exact norm {} > {}",
                rep.exact_norm,
                rep.bound
            );
            worst = worst.max(rep.sampled_norm / rep.bound);
        }
    }
    Ok(format!(
        "worst sampled/bound ratio {worst}; {:?}",
        start.elapsed()
    ))
}

fn criterion_9() -> Check {
    for n in 1..=6i64 {
        let r = 10 * n as u64;
        let pw = ok(prism_certificate(n, 0, r, n as u64))?;
        ensure!(
            pw.verified,
            "prism identity fails for n = {n}: {:?}",
            pw.mismatches
        );
        let rw = ok(rewrite_disjoint(n, 0, r, n as u64))?;
        ensure!(rw.sup_norm == int(1), "n = {n}: sup-norm {}", rw.sup_norm);
        ensure!(
            rw.disjoint && rw.homologous,
            "n = {n}: supports overlap or witness fails"
        );
    }
    Ok("n = 1..6".into())
}

fn criterion_10() -> Check {
    let start = Instant::now();
    let rep = ok(rho_roundtrip_check(&z(), 12, 100, 2, 10))?;
    ensure!(rep.samples == 100 && rep.holds(), "{rep:?}");
    Ok(format!(
        "100 chains, degrees 0-2, radius 12; {:?}",
        start.elapsed()
    ))
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn criterion_11() -> Check {
    let mut paths: Vec<PathBuf> = ok(std::fs::read_dir(scenario_dir()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    ensure!(!paths.is_empty(), "no scenario files");
    let tmp = ok(tempfile::tempdir())?;
    for path in &paths {
        let s = ok(load_scenario(path))?;
        let mut dirs = Vec::new();
        for run in 0..2 {
            let o = ok(execute(&s))?;
            let dir = tmp.path().join(format!("{}-{run}", s.name));
            ok(write_outcome(&o, &dir))?;
            dirs.push(dir);
        }
        let list = |d: &Path| -> std::result::Result<Vec<(String, Vec<u8>)>, String> {
            let mut v: Vec<(String, Vec<u8>)> = ok(std::fs::read_dir(d))?
                .filter_map(|e| e.ok())
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap_or_default(),
                    )
                })
                .collect();
            v.sort();
            Ok(v)
        };
        ensure!(
            list(&dirs[0])? == list(&dirs[1])?,
            "{} differs between runs",
            path.display()
        );
    }
    Ok(format!("{} scenarios rerun byte-identically", paths.len()))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 11] = [
        ("chain-complex laws", criterion_1),
        ("flow/cut duality", criterion_2),
        ("amenability shadow", criterion_3),
        ("squares obstruction", criterion_4),
        ("non-homogeneity", criterion_5),
        ("fundamental class semi-norm", criterion_6),
        ("rigidity verdicts", criterion_7),
        ("averaging map", criterion_8),
        ("degree-1 prism and rewriting", criterion_9),
        ("group translation", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
