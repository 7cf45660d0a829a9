//! Scenario runner and reproduction harness.
//!
//! Exit codes: 0 converged/completed, 1 error, 2 inconclusive, 3 diverged
//! where a value was expected.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use distval::par;
use distval::report::{write_report, Report};
use distval::scenario::{exit_code, run_scenario, Scenario, Task};

mod reproduce;

#[derive(Parser)]
#[command(name = "distval", version, about = "numerical distributional point values")]
struct Cli {
    /// Worker thread cap (falls back to DISTVAL_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write report.json / series.csv.
    Run(RunArgs),
    /// Run a canned construction and check it against its thresholds.
    Reproduce(ReproduceArgs),
    /// Classical scaling probe of a function along a sequence.
    LimitProbe(LimitProbeArgs),
    /// Boundedness, L∞ norm, and essential extrema over an interval.
    Linf(LinfArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario sequence length.
    #[arg(long)]
    n_max: Option<usize>,
    /// Tighter pairing tolerances, slower.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// heaviside | sin-recip | log-spiral | example1 | example2 | example3 |
    /// radial-xy | moment-expansion
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LimitProbeArgs {
    /// Function of x, probed on (0, inf).
    #[arg(long)]
    f: String,
    /// Scale sequence, a function of n.
    #[arg(long)]
    xi: String,
    /// Starting points (repeatable).
    #[arg(long = "a", required = true)]
    a_grid: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    n_max: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Write report files here instead of printing JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LinfArgs {
    /// Function of x.
    #[arg(long)]
    regular: String,
    #[arg(long)]
    lo: f64,
    #[arg(long)]
    hi: f64,
    #[arg(long, default_value_t = 400)]
    budget: usize,
    #[arg(long, default_value_t = distval::boundedness::DEFAULT_DEPTH)]
    grid_depth: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("DISTVAL_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        par::configure_threads(n.max(1));
    }
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Reproduce(args) => reproduce::run(&args.name, &args.out),
        Command::LimitProbe(args) => cmd_limit_probe(args),
        Command::Linf(args) => cmd_linf(args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(path: &PathBuf) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        let offset = byte_offset(&text, e.line(), e.column());
        format!("{}: {e} (byte offset {offset})", path.display())
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut off = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return off + column.saturating_sub(1);
        }
        off += l.len();
    }
    off
}

fn finish(out: &PathBuf, scenario: Scenario, started: Instant) -> Result<u8, String> {
    let outcome = run_scenario(&scenario)?;
    let code = exit_code(&outcome);
    let report = Report::new(scenario, outcome);
    write_report(out, &report, started.elapsed().as_millis()).map_err(|e| e.to_string())?;
    println!("report written to {}", out.display());
    Ok(code as u8)
}

fn cmd_run(args: RunArgs) -> Result<u8, String> {
    let started = Instant::now();
    let mut sc = load_scenario(&args.scenario)?;
    if let Some(tol) = args.tol {
        sc.tol = tol;
    }
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    if let Some(n_max) = args.n_max {
        sc.n_max = n_max;
    }
    if args.oracle {
        sc.oracle = true;
    }
    finish(&args.out, sc, started)
}

fn cmd_limit_probe(args: LimitProbeArgs) -> Result<u8, String> {
    let started = Instant::now();
    let sc = Scenario {
        distribution: distval::scenario::DistributionSpec {
            dim: distval::scenario::DimSpec::Flat(1),
            regular: args.f,
            deltas: vec![],
            pv: false,
        },
        task: Task::LimitProbe { xi: args.xi, a_grid: args.a_grid },
        tol: args.tol,
        seed: 0,
        n_max: args.n_max,
        oracle: false,
    };
    match args.out {
        Some(out) => finish(&out, sc, started),
        None => {
            let outcome = run_scenario(&sc)?;
            let code = exit_code(&outcome);
            let report = Report::new(sc, outcome);
            println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
            Ok(code as u8)
        }
    }
}

fn cmd_linf(args: LinfArgs) -> Result<u8, String> {
    let started = Instant::now();
    let sc = Scenario {
        distribution: distval::scenario::DistributionSpec {
            dim: distval::scenario::DimSpec::Flat(1),
            regular: args.regular,
            deltas: vec![],
            pv: false,
        },
        task: Task::Linf {
            region: distval::boundedness::Region::Interval { lo: args.lo, hi: args.hi },
            budget: args.budget,
            grid_depth: args.grid_depth,
        },
        tol: 1e-4,
        seed: 0,
        n_max: 40,
        oracle: false,
    };
    match args.out {
        Some(out) => finish(&out, sc, started),
        None => {
            let outcome = run_scenario(&sc)?;
            let code = exit_code(&outcome);
            let report = Report::new(sc, outcome);
            println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
            Ok(code as u8)
        }
    }
}
