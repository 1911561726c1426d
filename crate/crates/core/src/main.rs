use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ufhom::cli::{execute, load_scenario, write_outcome, RatValue, Scenario, WindowEntry};
use ufhom::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ufhom",
    version,
    about = "Exact uniformly finite homology experiments on windowed spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree-0 class verdict (trivial / nontrivial) over a window schedule.
    Verdict(Overrides),
    /// Restricted semi-norm upper bound, optionally with a mean lower bound.
    Seminorm(Overrides),
    /// Folner means of a degree-0 cycle.
    Mean(Overrides),
    /// Is a quasi-isometry close to a bilipschitz equivalence?
    Bilip(Overrides),
    /// Prism identity between the unit-step cycle and its n-step version.
    Prism(Overrides),
    /// Disjoint-support rewriting of n times the unit-step cycle.
    Rewrite(Overrides),
    /// Roundtrip, isometry and chain-map checks of the group translation.
    Rho(Overrides),
    /// Isoperimetric profile of a Folner family.
    Profile(Overrides),
    /// Kernel/cokernel prediction against the measured verdict for x -> Mx.
    Homomorphism(Overrides),
    /// Averaging chain map of the squares retractions.
    Averaging(Overrides),
    /// Run scenario files as written.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Output root; each scenario writes to <out>/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    /// Scenario file; without one the operation runs on Z with the fundamental class.
    scenario: Option<PathBuf>,
    /// Window radius (prism, rewrite, rho, averaging).
    #[arg(long)]
    radius: Option<u64>,
    /// Window margin (prism, rewrite).
    #[arg(long)]
    margin: Option<u64>,
    /// Propagation bound of the boundary chain.
    #[arg(long)]
    r: Option<u64>,
    /// Check feasibility at this capacity (verdict).
    #[arg(long)]
    cap: Option<String>,
    /// Comma-separated windows: `N` (ball radius) or `lo:hi` (interval).
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated values of n (prism, rewrite, averaging).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<i64>>,
    /// Slack bound B (seminorm).
    #[arg(long)]
    bound: Option<String>,
    /// Coefficient ring: Z or Q.
    #[arg(long)]
    ring: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
}

fn scenario_for(op: &str, o: &Overrides) -> Result<Scenario> {
    let mut s = match &o.scenario {
        Some(path) => {
            let s = load_scenario(path)?;
            if s.operation.get_ref() != op {
                return Err(Error::Contract(format!(
                    "{} describes operation '{}', not '{op}'",
                    path.display(),
                    s.operation.get_ref()
                )));
            }
            s
        }
        None => Scenario::default_for(op),
    };
    let p = &mut s.params;
    p.radius = o.radius.or(p.radius);
    p.margin = o.margin.or(p.margin);
    p.r = o.r.or(p.r);
    p.seed = o.seed.or(p.seed);
    p.samples = o.samples.or(p.samples);
    if let Some(c) = &o.cap {
        p.cap = Some(RatValue::Text(c.clone()));
    }
    if let Some(b) = &o.bound {
        p.bound = Some(RatValue::Text(b.clone()));
    }
    if let Some(r) = &o.ring {
        p.ring = Some(r.clone());
    }
    if let Some(n) = &o.n {
        p.n = Some(n.clone());
    }
    if let Some(sched) = &o.schedule {
        p.schedule = Some(
            sched
                .iter()
                .map(|e| WindowEntry::parse(e))
                .collect::<Result<_>>()?,
        );
    }
    if let Some(out) = &o.out {
        s.out = Some(out.display().to_string());
    }
    Ok(s)
}

/// Runs one scenario, prints its summary, and returns the exit code.
fn run_one(s: &Scenario) -> Result<u8> {
    let outcome = execute(s)?;
    let dir = s.out_dir();
    write_outcome(&outcome, &dir)?;
    print!("{}", outcome.summary());
    println!("output\t{}", dir.display());
    Ok(outcome.status.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenarios, out } => {
            // errors (1) take precedence over inconclusive runs (2)
            let mut failed = false;
            let mut inconclusive = false;
            for path in &scenarios {
                let code = load_scenario(path).and_then(|mut s| {
                    if let Some(root) = &out {
                        s.out = Some(root.join(&s.name).display().to_string());
                    }
                    run_one(&s)
                });
                match code {
                    Ok(c) => inconclusive |= c == 2,
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        failed = true;
                    }
                }
            }
            Ok(if failed {
                1
            } else if inconclusive {
                2
            } else {
                0
            })
        }
        cmd => {
            let (op, o) = match cmd {
                Command::Verdict(o) => ("verdict", o),
                Command::Seminorm(o) => ("seminorm", o),
                Command::Mean(o) => ("mean", o),
                Command::Bilip(o) => ("bilip", o),
                Command::Prism(o) => ("prism", o),
                Command::Rewrite(o) => ("rewrite", o),
                Command::Rho(o) => ("rho", o),
                Command::Profile(o) => ("profile", o),
                Command::Homomorphism(o) => ("homomorphism", o),
                Command::Averaging(o) => ("averaging", o),
                Command::Run { .. } => unreachable!("handled above"),
            };
            scenario_for(op, &o).and_then(|s| run_one(&s))
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
