//! Shared test support: a seeded generator of small terminating loop
//! programs, and solver-config helpers.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use syminfer::lang::{parse, Program};
use syminfer::smt::{default_solver_cmd, Solver, SolverCfg};

/// A solver for tests; panics with a clear message when none is available.
pub fn test_solver() -> Solver {
    let cmd = default_solver_cmd()
        .expect("no SMT solver available: set SYMINFER_SOLVER_CMD or build the workspace (z3shim)");
    Solver::new(SolverCfg {
        cmd,
        timeout_ms: 5000,
        log_dir: None,
    })
}

/// Generate a small terminating program with one marked loop head `@L`.
/// Loops run a constant number of iterations; branch conditions range over
/// the inputs, so both outcomes are genuinely feasible.
pub fn random_program(seed: u64) -> (String, Program) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = rng.gen_range(1..=3usize);
    let params = &["a", "b", "c"][..np];
    let mut src = String::new();
    src.push_str("fn gen(");
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            src.push_str(", ");
        }
        src.push_str(&format!("{p}: int"));
    }
    src.push_str(") {\n");

    // Two locals with linear initializers over the inputs.
    let lin = |rng: &mut ChaCha8Rng| -> String {
        let mut e = format!("{}", rng.gen_range(-3..=3));
        for p in params {
            if rng.gen_bool(0.6) {
                e.push_str(&format!(" + {}*{}", rng.gen_range(-2..=2), p));
            }
        }
        e
    };
    src.push_str(&format!("  int x = {};\n", lin(&mut rng)));
    src.push_str(&format!("  int y = {};\n", lin(&mut rng)));
    src.push_str("  int i = 0;\n");

    let bound = rng.gen_range(2..=5);
    src.push_str("  @L;\n");
    src.push_str(&format!("  while (i < {bound}) {{\n"));
    // One or two linear updates, occasionally quadratic in an input.
    for _ in 0..rng.gen_range(1..=2usize) {
        let tgt = ["x", "y"][rng.gen_range(0..2usize)];
        let mut upd = format!("{tgt} + {}", rng.gen_range(-2..=3));
        if rng.gen_bool(0.7) {
            upd.push_str(&format!(" + {}*{}", rng.gen_range(1..=2), params[0]));
        }
        if rng.gen_bool(0.2) {
            upd.push_str(&format!(" + {p}*{p}", p = params[0]));
        }
        src.push_str(&format!("    {tgt} = {upd};\n"));
    }
    // Input-dependent branch: two-way feasible until the pc decides it.
    if rng.gen_bool(0.7) {
        let op = ["<", "<=", ">", ">="][rng.gen_range(0..4usize)];
        let c = rng.gen_range(-2..=2);
        src.push_str(&format!("    if ({} {op} {c}) {{\n", params[rng.gen_range(0..np)]));
        src.push_str("      x = x + 1;\n");
        src.push_str("    } else {\n");
        src.push_str("      y = y + 1;\n");
        src.push_str("    }\n");
    }
    src.push_str("    i = i + 1;\n");
    src.push_str("  }\n");
    src.push_str("}\n");

    let prog = parse(&src).unwrap_or_else(|e| panic!("generated program must parse: {e}\n{src}"));
    (src, prog)
}

/// Path to a file in the repository's benchmarks directory.
pub fn bench_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../benchmarks")
        .join(rel)
}
