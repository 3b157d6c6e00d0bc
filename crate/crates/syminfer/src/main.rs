//! `syminfer` command-line driver: thin wrapper over the library pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use syminfer::runner::{self, RunConfig};

#[derive(Parser)]
#[command(name = "syminfer", about = "Invariant inference from symbolic states")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infer invariants for one program.
    Run {
        /// Path to the .mvl program.
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a benchmark suite directory of .mvl files with .inv sidecars.
    Bench {
        /// Suite directory.
        dir: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Runs per program (median reported).
        #[arg(long, default_value_t = 11)]
        runs: usize,
    },
}

#[derive(Args)]
struct Flags {
    /// Locations to analyze (default: all marked).
    #[arg(long)]
    location: Vec<String>,
    /// Maximum template degree.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Octagonal bound search range, lo:hi.
    #[arg(long, default_value = "-10:10", value_parser = parse_range)]
    oct_range: (i64, i64),
    /// Initial verification depth.
    #[arg(long, default_value_t = 10)]
    start_depth: u32,
    /// Verification depth ceiling.
    #[arg(long, default_value_t = 20)]
    max_depth: u32,
    /// Wall-clock budget per program, seconds.
    #[arg(long, default_value_t = 300)]
    budget_secs: u64,
    /// Solver command, e.g. "z3 -in" (default: auto-detect).
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Per-query solver timeout in milliseconds.
    #[arg(long, default_value_t = 5000)]
    smt_timeout_ms: u64,
    /// Write numbered .smt2 transcripts to this directory.
    #[arg(long)]
    log_smt: Option<PathBuf>,
    /// Concrete-state bootstrap mode.
    #[arg(long, default_value = "symbolic", value_parser = ["symbolic", "fuzz"])]
    bootstrap: String,
    /// Fuzz input range, lo:hi.
    #[arg(long, default_value = "-300:300", value_parser = parse_range)]
    fuzz_range: (i64, i64),
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Loop-counter variable for complexity bounds.
    #[arg(long)]
    counter: Option<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero timing fields in the report (byte-identical reruns).
    #[arg(long)]
    redact_timing: bool,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got `{}`", s))?;
    let lo: i64 = lo.parse().map_err(|e| format!("bad lower bound: {}", e))?;
    let hi: i64 = hi.parse().map_err(|e| format!("bad upper bound: {}", e))?;
    if lo > hi {
        return Err(format!("empty range {}:{}", lo, hi));
    }
    Ok((lo, hi))
}

fn to_config(program: PathBuf, f: &Flags, runs: usize) -> RunConfig {
    let mut cfg = RunConfig::new(program);
    if !f.location.is_empty() {
        cfg.locations = Some(f.location.clone());
    }
    cfg.degree = f.degree;
    cfg.oct_range = f.oct_range;
    cfg.start_depth = f.start_depth;
    cfg.max_depth = f.max_depth;
    cfg.budget_secs = f.budget_secs;
    cfg.solver_cmd = f
        .solver_cmd
        .as_ref()
        .map(|s| s.split_whitespace().map(str::to_string).collect());
    cfg.smt_timeout_ms = f.smt_timeout_ms;
    cfg.log_smt = f.log_smt.clone();
    cfg.bootstrap = f.bootstrap.clone();
    cfg.fuzz_range = f.fuzz_range;
    cfg.seed = f.seed;
    cfg.counter = f.counter.clone();
    cfg.runs = runs;
    cfg.redact_timing = f.redact_timing;
    cfg
}

fn write_out(report: &serde_json::Value, out: &Option<PathBuf>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with success exit.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.cmd {
        Cmd::Run { file, flags } => {
            let mut cfg = to_config(file, &flags, 1);
            // Per-program sidecar overrides, same as in bench runs.
            let sidecar = cfg.program.with_extension("cfg");
            runner::apply_overrides(&mut cfg, &sidecar);
            match runner::run(&cfg) {
                Ok(outcome) => {
                    for loc in &outcome.locs {
                        println!("location {}:", loc.loc);
                        if loc.rendered.is_empty() {
                            println!("  (no invariants)");
                        }
                        for inv in &loc.rendered {
                            println!("  {}", inv);
                        }
                        if let Some(b) = &loc.bounds {
                            println!("  complexity roots:");
                            let names = all_names(&cfg);
                            for r in &b.roots {
                                let guard = r
                                    .guard
                                    .as_ref()
                                    .map(|g| format!("  when {}", g.render(&names)))
                                    .unwrap_or_default();
                                println!("    t = {}{}", r.expr.render(&names), guard);
                            }
                        }
                        for w in &loc.warnings {
                            eprintln!("  warning: {}", w);
                        }
                    }
                    if write_out(&outcome.report, &flags.out).is_err() {
                        eprintln!("error: cannot write report");
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Cmd::Bench { dir, flags, runs } => {
            let cfg = to_config(dir.clone(), &flags, runs);
            match runner::bench(&dir, &cfg) {
                Ok(outcome) => {
                    print!("{}", runner::render_table(&outcome.rows));
                    if write_out(&outcome.report, &flags.out).is_err() {
                        eprintln!("error: cannot write report");
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}

fn all_names(cfg: &RunConfig) -> Vec<String> {
    // Re-parse for rendering names; cheap relative to the run itself.
    std::fs::read_to_string(&cfg.program)
        .ok()
        .and_then(|t| syminfer::lang::parse(&t).ok())
        .map(|p| p.vars().to_vec())
        .unwrap_or_default()
}

fn fail(e: runner::RunError) -> ExitCode {
    use runner::RunError::*;
    eprintln!("error: {}", e);
    match e {
        Io(..) | Parse(..) | Config(..) | Infer(..) => ExitCode::from(1),
        NoSolver => ExitCode::from(2),
    }
}
