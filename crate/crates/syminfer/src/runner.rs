//! End-to-end orchestration: configuration, the per-location pipeline
//! (equalities → octagonal bounds → redundancy elimination → complexity
//! bounds), machine-readable reports, and the benchmark harness.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bounds::{self, BoundSolution};
use crate::cegir::{
    cegir_eqts, cegir_oct, remove_redundant, Bootstrap, Budget, Candidate, EqtsCfg, SymCache,
    VerifyCfg,
};
use crate::infer::{Inequality, OctTerm};
use crate::lang::{self, AExpr, BExpr, ConcreteState, Program};
use crate::poly::Poly;
use crate::smt::{Ctx, Formula, SmtVerdict, Solver, SolverCfg};
use crate::symexec::ExecConfig;

#[derive(Error, Debug)]
pub enum RunError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("parse error in {0}: {1}")]
    Parse(PathBuf, lang::LangError),
    #[error("no SMT solver found: install z3, set SYMINFER_SOLVER_CMD, or pass --solver-cmd")]
    NoSolver,
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Infer(#[from] crate::infer::InferError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub program: PathBuf,
    /// Locations to analyze; None = all marked locations.
    pub locations: Option<Vec<String>>,
    pub degree: u32,
    pub oct_range: (i64, i64),
    pub start_depth: u32,
    pub max_depth: u32,
    pub solver_cmd: Option<Vec<String>>,
    pub smt_timeout_ms: u64,
    pub log_smt: Option<PathBuf>,
    pub seed: u64,
    pub runs: usize,
    /// "symbolic" or "fuzz".
    pub bootstrap: String,
    pub fuzz_range: (i64, i64),
    /// Loop-counter variable for complexity bounds.
    pub counter: Option<String>,
    pub budget_secs: u64,
    pub term_cap: usize,
    /// Zero all timing fields in the report (for byte-identical output).
    pub redact_timing: bool,
}

impl RunConfig {
    pub fn new(program: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            program: program.into(),
            locations: None,
            degree: 2,
            oct_range: (-10, 10),
            start_depth: 10,
            max_depth: 20,
            solver_cmd: None,
            smt_timeout_ms: 5000,
            log_smt: None,
            seed: 1,
            runs: 11,
            bootstrap: "symbolic".to_string(),
            fuzz_range: (-300, 300),
            counter: None,
            budget_secs: 300,
            term_cap: 500,
            redact_timing: false,
        }
    }
}

/// Structured results for one location, alongside the JSON report.
#[derive(Clone, Debug)]
pub struct LocResult {
    pub loc: String,
    /// Final invariant set after redundancy elimination.
    pub invariants: Vec<Candidate>,
    pub refuted: usize,
    pub warnings: Vec<String>,
    pub states: Vec<ConcreteState>,
    pub bounds: Option<BoundSolution>,
    /// Invariants rendered over the in-scope variable names.
    pub rendered: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Value,
    pub locs: Vec<LocResult>,
}

fn resolve_solver(cfg: &RunConfig) -> Result<SolverCfg, RunError> {
    let cmd = match &cfg.solver_cmd {
        Some(c) if !c.is_empty() => c.clone(),
        _ => crate::smt::default_solver_cmd().ok_or(RunError::NoSolver)?,
    };
    Ok(SolverCfg {
        cmd,
        timeout_ms: cfg.smt_timeout_ms,
        log_dir: cfg.log_smt.clone(),
    })
}

/// Translate a source-syntax relation into a formula over the program's
/// symbol space (used for expected-invariant sidecars).
pub fn bexpr_to_formula(prog: &Program, ctx: &Ctx, b: &BExpr) -> Result<Formula, RunError> {
    fn aexpr(prog: &Program, ctx: &Ctx, e: &AExpr) -> Result<Poly, RunError> {
        let n = ctx.arity();
        Ok(match e {
            AExpr::Var(v) => {
                let idx = prog
                    .var_index(v)
                    .ok_or_else(|| RunError::Config(format!("unknown variable `{}`", v)))?;
                Poly::var(n, ctx.var_sym(idx))
            }
            AExpr::Const(c) => Poly::constant(n, c.clone()),
            AExpr::Neg(a) => aexpr(prog, ctx, a)?.neg(),
            AExpr::Add(a, b) => aexpr(prog, ctx, a)?.add(&aexpr(prog, ctx, b)?),
            AExpr::Sub(a, b) => aexpr(prog, ctx, a)?.sub(&aexpr(prog, ctx, b)?),
            AExpr::Mul(a, b) => aexpr(prog, ctx, a)?.mul(&aexpr(prog, ctx, b)?),
        })
    }
    Ok(match b {
        BExpr::Lit(v) => Formula::Bool(*v),
        BExpr::Cmp(op, l, r) => {
            Formula::cmp(*op, aexpr(prog, ctx, l)?, aexpr(prog, ctx, r)?)
        }
        BExpr::Not(inner) => Formula::not(bexpr_to_formula(prog, ctx, inner)?),
        BExpr::And(a, b) => Formula::And(vec![
            bexpr_to_formula(prog, ctx, a)?,
            bexpr_to_formula(prog, ctx, b)?,
        ]),
        BExpr::Or(a, b) => Formula::Or(vec![
            bexpr_to_formula(prog, ctx, a)?,
            bexpr_to_formula(prog, ctx, b)?,
        ]),
    })
}

/// Run the full pipeline on one program.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let text = std::fs::read_to_string(&cfg.program)
        .map_err(|e| RunError::Io(cfg.program.clone(), e))?;
    let prog =
        lang::parse(&text).map_err(|e| RunError::Parse(cfg.program.clone(), e))?;
    run_program(&prog, cfg)
}

/// As [`run`], but on an already-parsed program.
pub fn run_program(prog: &Program, cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let solver_cfg = resolve_solver(cfg)?;
    let budget = Budget::new(Duration::from_secs(cfg.budget_secs));
    let started = Instant::now();

    let locations: Vec<String> = match &cfg.locations {
        Some(ls) => {
            for l in ls {
                prog.scope_len(l)
                    .map_err(|e| RunError::Config(e.to_string()))?;
            }
            ls.clone()
        }
        None => prog.locations().to_vec(),
    };

    let bootstrap = match cfg.bootstrap.as_str() {
        "symbolic" => Bootstrap::Symbolic,
        "fuzz" => Bootstrap::Fuzz,
        other => {
            return Err(RunError::Config(format!(
                "unknown bootstrap mode `{}` (expected symbolic or fuzz)",
                other
            )))
        }
    };

    let counter_idx = match &cfg.counter {
        Some(name) => Some(prog.var_index(name).ok_or_else(|| {
            RunError::Config(format!("counter variable `{}` not found", name))
        })?),
        None => None,
    };

    let mut locs: Vec<LocResult> = Vec::new();
    let mut loc_reports: Vec<Value> = Vec::new();
    let mut total_symexec = Duration::ZERO;
    let mut total_solve = Duration::ZERO;

    for loc in &locations {
        let mut solver = Solver::new(solver_cfg.clone());
        let mut cache = SymCache::new(prog, loc, ExecConfig::default());
        let nvars = prog.scope_len(loc).expect("validated");
        let names: Vec<String> = prog.vars()[..nvars].to_vec();
        let verify_cfg = VerifyCfg {
            start_depth: cfg.start_depth,
            max_depth: cfg.max_depth,
        };
        // Restrict complexity-mode inference to inputs plus the counter.
        let restrict = counter_idx.and_then(|t| {
            if t < nvars {
                let mut vs: Vec<usize> = (0..prog.params.len()).collect();
                if !vs.contains(&t) {
                    vs.push(t);
                }
                Some(vs)
            } else {
                None
            }
        });
        let eq_cfg = EqtsCfg {
            degree: cfg.degree,
            term_cap: cfg.term_cap,
            verify: verify_cfg,
            seed: cfg.seed,
            oversample: 1.5,
            bootstrap,
            fuzz_range: cfg.fuzz_range,
            restrict_vars: restrict,
            max_iterations: 50,
        };
        let eq_res = cegir_eqts(&mut cache, &eq_cfg, &mut solver, &budget)?;

        // Octagonal bounds over all oct terms, reusing the cached states.
        // The concrete states steer the search: a term whose observed
        // maximum already exceeds the range has no bound worth querying
        // for, and the observed maximum is a sound floor for the rest.
        let mut octs = Vec::new();
        if !eq_res.budget_exhausted {
            for term in OctTerm::enumerate(nvars) {
                if budget.exhausted() {
                    break;
                }
                let observed = eq_res
                    .states
                    .iter()
                    .map(|s| term.eval(&s.values))
                    .max();
                let lo = match observed {
                    Some(o) if o > cfg.oct_range.1.into() => continue,
                    Some(o) => i64::try_from(&o)
                        .map(|o| o.max(cfg.oct_range.0))
                        .unwrap_or(cfg.oct_range.0),
                    None => cfg.oct_range.0,
                };
                // First probe the floor itself: when it verifies it is
                // optimal (witnessed or range-minimal), no search needed.
                let direct = Inequality {
                    term,
                    bound: lo.into(),
                };
                let probe = crate::cegir::verify(
                    &mut cache,
                    &Candidate::Ineq(direct.clone()),
                    &eq_res.block,
                    &verify_cfg,
                    &mut solver,
                );
                if probe.status == crate::cegir::VerifyStatus::Invariant {
                    octs.push(direct);
                    continue;
                }
                if let Some(ineq) = cegir_oct(
                    &mut cache,
                    term,
                    lo,
                    cfg.oct_range.1,
                    &eq_res.block,
                    &verify_cfg,
                    &mut solver,
                    &budget,
                ) {
                    octs.push(ineq);
                }
            }
        }

        let mut all: Vec<Candidate> = eq_res
            .invs
            .iter()
            .map(|p| Candidate::Eq(p.inv.clone()))
            .collect();
        all.extend(octs.iter().cloned().map(Candidate::Ineq));
        let final_invs =
            remove_redundant(&all, &cache.ctx, nvars, &names, &mut solver);

        // Complexity bounds: solve the best counter equality for its roots.
        let bounds_sol = counter_idx.filter(|&t| t < nvars).and_then(|t| {
            let mut best: Option<BoundSolution> = None;
            for p in &eq_res.invs {
                if let Ok(sol) = bounds::solve_counter(&p.inv, t) {
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            (sol.roots.len(), sol.residual.is_none())
                                > (b.roots.len(), b.residual.is_none())
                        }
                    };
                    if better {
                        best = Some(sol);
                    }
                }
            }
            best.map(|sol| bounds::attach_guards(sol, &eq_res.states, prog.params.len()))
        });

        let mut warnings = eq_res.warnings.clone();
        if budget.exhausted() {
            warnings.push("wall-clock budget exhausted".to_string());
            warnings.dedup();
        }

        // JSON fragment for this location.
        let depth_of = |c: &Candidate| -> Value {
            match c {
                Candidate::Eq(e) => eq_res
                    .invs
                    .iter()
                    .find(|p| &p.inv == e)
                    .map(|p| json!({"depth": p.settled_depth, "transcript": p.transcript_id}))
                    .unwrap_or(Value::Null),
                Candidate::Ineq(_) => Value::Null,
            }
        };
        let inv_json: Vec<Value> = final_invs
            .iter()
            .map(|c| {
                json!({
                    "kind": match c { Candidate::Eq(_) => "eq", Candidate::Ineq(_) => "ineq" },
                    "text": c.render(&names),
                    "verified": depth_of(c),
                })
            })
            .collect();
        let bounds_json = bounds_sol.as_ref().map(|sol| {
            let all_names: Vec<String> = prog.vars().to_vec();
            json!({
                "counter": cfg.counter,
                "roots": sol.roots.iter().map(|r| json!({
                    "expr": r.expr.render(&all_names),
                    "guard": r.guard.as_ref().map(|g| g.render(&all_names)),
                    "ambiguous": r.ambiguous,
                })).collect::<Vec<_>>(),
                "residual": sol.residual.as_ref().map(|p| p.render(&all_names)),
            })
        });
        total_symexec += cache.symexec_time;
        total_solve += solver.solve_time;
        loc_reports.push(json!({
            "location": loc,
            "invariants": inv_json,
            "refuted_candidates": eq_res.refuted,
            "iterations": eq_res.iterations,
            "states": eq_res.states.len(),
            "complexity_bounds": bounds_json,
            "warnings": warnings,
        }));
        let rendered = final_invs.iter().map(|c| c.render(&names)).collect();
        locs.push(LocResult {
            loc: loc.clone(),
            invariants: final_invs,
            refuted: eq_res.refuted,
            warnings,
            states: eq_res.states,
            bounds: bounds_sol,
            rendered,
        });
    }

    let total = started.elapsed();
    let ms = |d: Duration| -> u64 {
        if cfg.redact_timing {
            0
        } else {
            d.as_millis() as u64
        }
    };
    let infer_time = total.saturating_sub(total_symexec + total_solve);
    let report = json!({
        "schema": "syminfer-report/1",
        "program": prog.name,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "locations": loc_reports,
        "timing_ms": {
            "symexec": ms(total_symexec),
            "solving": ms(total_solve),
            "inference": ms(infer_time),
            "total": ms(total),
        },
    });
    Ok(RunOutcome { report, locs })
}

/// One expected-invariant sidecar line: optional `loc:` prefix plus a
/// relation in concrete syntax.
#[derive(Clone, Debug)]
pub struct Expected {
    pub loc: Option<String>,
    pub text: String,
    pub rel: BExpr,
}

/// Parse a sidecar file: one relation per line, `#` comments allowed.
pub fn parse_sidecar(path: &Path) -> Result<Vec<Expected>, RunError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| RunError::Io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        // `L2: x == q*y + r` — a leading `name:` (no comparison before the
        // colon) selects a location.
        let (loc, rel_text) = match line.split_once(':') {
            Some((l, rest))
                if !l.contains(|c: char| !(c.is_alphanumeric() || c == '_')) =>
            {
                (Some(l.trim().to_string()), rest.trim())
            }
            _ => (None, line),
        };
        let rel = lang::parse_bexpr(rel_text)
            .map_err(|e| RunError::Parse(path.to_path_buf(), e))?;
        out.push(Expected {
            loc,
            text: rel_text.to_string(),
            rel,
        });
    }
    Ok(out)
}

/// Check one expected invariant against the found set at its location:
/// `(⋀ found) ⟹ expected`, solver-verified. Returns (ok, transcript id).
pub fn check_expected(
    prog: &Program,
    outcome: &RunOutcome,
    exp: &Expected,
    solver: &mut Solver,
) -> Result<(bool, u64), RunError> {
    let ctx = Ctx::for_program(prog);
    let loc = match &exp.loc {
        Some(l) => l.clone(),
        None => {
            if outcome.locs.len() == 1 {
                outcome.locs[0].loc.clone()
            } else {
                return Err(RunError::Config(format!(
                    "expected invariant `{}` needs a location prefix",
                    exp.text
                )));
            }
        }
    };
    let lr = outcome
        .locs
        .iter()
        .find(|l| l.loc == loc)
        .ok_or_else(|| RunError::Config(format!("no results at location `{}`", loc)))?;
    let nvars = prog.scope_len(&loc).expect("validated");
    let lhs = Formula::And(
        lr.invariants
            .iter()
            .map(|c| c.to_formula(&ctx, nvars))
            .collect(),
    );
    let rhs = bexpr_to_formula(prog, &ctx, &exp.rel)?;
    let verdict = solver
        .check_implication(&ctx, &lhs, &rhs)
        .map_err(|e| RunError::Config(format!("solver failure: {}", e)))?;
    Ok((
        matches!(verdict, SmtVerdict::Unsat),
        solver.last_transcript_id(),
    ))
}

/// One row of a benchmark summary.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub name: String,
    pub locs: usize,
    pub nvars: usize,
    pub nterms: usize,
    pub degree: u32,
    pub invariants: usize,
    pub median_ms: u64,
    pub correct: Option<bool>,
    pub note: String,
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub report: Value,
}

/// Run every `.mvl` in `dir` `cfg.runs` times, report median wall time, and
/// check the expected-invariant sidecar (`<name>.inv`) by solver-checked
/// implication.
pub fn bench(dir: &Path, cfg: &RunConfig) -> Result<BenchOutcome, RunError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| RunError::Io(dir.to_path_buf(), e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "mvl").unwrap_or(false))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for file in &files {
        let name = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut per_cfg = cfg.clone();
        per_cfg.program = file.clone();
        // Per-file config overrides: `<name>.cfg` with `key value` lines.
        apply_overrides(&mut per_cfg, &file.with_extension("cfg"));
        let row = bench_one(&name, &per_cfg);
        rows.push(row);
    }
    let report = json!({
        "schema": "syminfer-bench/1",
        "suite": dir.to_string_lossy(),
        "rows": rows.iter().map(|r| json!({
            "program": r.name,
            "locs": r.locs,
            "vars": r.nvars,
            "terms": r.nterms,
            "degree": r.degree,
            "invariants": r.invariants,
            "median_ms": if cfg.redact_timing { 0 } else { r.median_ms },
            "correct": r.correct,
            "note": r.note,
        })).collect::<Vec<_>>(),
    });
    Ok(BenchOutcome { rows, report })
}

/// Apply `key value` overrides from a per-program `.cfg` sidecar; missing
/// files are ignored.
pub fn apply_overrides(cfg: &mut RunConfig, path: &Path) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(_) => return,
    };
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match (it.next(), it.next()) {
            (Some("degree"), Some(v)) => {
                if let Ok(d) = v.parse() {
                    cfg.degree = d;
                }
            }
            (Some("counter"), Some(v)) => cfg.counter = Some(v.to_string()),
            (Some("start-depth"), Some(v)) => {
                if let Ok(d) = v.parse() {
                    cfg.start_depth = d;
                }
            }
            (Some("max-depth"), Some(v)) => {
                if let Ok(d) = v.parse() {
                    cfg.max_depth = d;
                }
            }
            _ => {}
        }
    }
}

fn bench_one(name: &str, cfg: &RunConfig) -> BenchRow {
    let mut row = BenchRow {
        name: name.to_string(),
        locs: 0,
        nvars: 0,
        nterms: 0,
        degree: cfg.degree,
        invariants: 0,
        median_ms: 0,
        correct: None,
        note: String::new(),
    };
    let text = match std::fs::read_to_string(&cfg.program) {
        Ok(t) => t,
        Err(e) => {
            row.note = format!("read error: {}", e);
            row.correct = Some(false);
            return row;
        }
    };
    let prog = match lang::parse(&text) {
        Ok(p) => p,
        Err(e) => {
            row.note = format!("parse error: {}", e);
            row.correct = Some(false);
            return row;
        }
    };
    row.locs = prog.locations().len();
    row.nvars = prog.vars().len();
    row.nterms = crate::infer::create_terms(
        prog.vars().len(),
        cfg.degree.max(1),
        usize::MAX,
    )
    .map(|t| t.terms.len())
    .unwrap_or(0);

    let mut times: Vec<u64> = Vec::new();
    let mut first: Option<RunOutcome> = None;
    for _ in 0..cfg.runs.max(1) {
        let start = Instant::now();
        match run_program(&prog, cfg) {
            Ok(out) => {
                times.push(start.elapsed().as_millis() as u64);
                if first.is_none() {
                    first = Some(out);
                }
            }
            Err(e) => {
                row.note = format!("run error: {}", e);
                row.correct = Some(false);
                return row;
            }
        }
    }
    times.sort();
    row.median_ms = times[times.len() / 2];
    let outcome = first.expect("at least one run");
    row.invariants = outcome.locs.iter().map(|l| l.invariants.len()).sum();
    if outcome
        .locs
        .iter()
        .any(|l| l.warnings.iter().any(|w| w.contains("budget")))
    {
        row.note = "budget exhausted".to_string();
        row.correct = Some(false);
        return row;
    }

    // Expected-invariant sidecar.
    let sidecar = cfg.program.with_extension("inv");
    if sidecar.is_file() {
        match parse_sidecar(&sidecar) {
            Ok(expected) => {
                let solver_cfg = match resolve_solver(cfg) {
                    Ok(s) => s,
                    Err(e) => {
                        row.note = e.to_string();
                        row.correct = Some(false);
                        return row;
                    }
                };
                let mut solver = Solver::new(solver_cfg);
                let mut all_ok = true;
                for exp in &expected {
                    match check_expected(&prog, &outcome, exp, &mut solver) {
                        Ok((true, _)) => {}
                        Ok((false, _)) => {
                            all_ok = false;
                            if !row.note.is_empty() {
                                row.note.push_str("; ");
                            }
                            row.note.push_str(&format!("not implied: {}", exp.text));
                        }
                        Err(e) => {
                            all_ok = false;
                            row.note = e.to_string();
                        }
                    }
                }
                row.correct = Some(all_ok);
            }
            Err(e) => {
                row.note = e.to_string();
                row.correct = Some(false);
            }
        }
    }
    row
}

/// Render a benchmark summary as a fixed-width text table.
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>4} {:>4} {:>5} {:>3} {:>4} {:>9}  {:<3} {}\n",
        "program", "locs", "V", "T", "D", "inv", "median", "ok", "note"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<14} {:>4} {:>4} {:>5} {:>3} {:>4} {:>7}ms  {:<3} {}\n",
            r.name,
            r.locs,
            r.nvars,
            r.nterms,
            r.degree,
            r.invariants,
            r.median_ms,
            match r.correct {
                Some(true) => "ok",
                Some(false) => "X",
                None => "-",
            },
            r.note
        ));
    }
    out
}
