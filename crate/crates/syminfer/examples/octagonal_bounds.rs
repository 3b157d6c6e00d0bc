//! Octagonal inequalities via verified binary search: for each octagonal
//! term over the in-scope variables, find the smallest provable upper bound
//! in [-10, 10].

use syminfer::cegir::{cegir_oct, Budget, SymCache, VerifyCfg};
use syminfer::infer::OctTerm;
use syminfer::lang::parse;
use syminfer::smt::{default_solver_cmd, Solver, SolverCfg};
use syminfer::symexec::ExecConfig;

fn main() {
    let src = std::fs::read_to_string("benchmarks/nla/idiv.mvl")
        .expect("run from the repository root");
    let prog = parse(&src).expect("parses");
    let names = prog.scope_vars("L").unwrap().to_vec();

    let Some(cmd) = default_solver_cmd() else {
        eprintln!("no solver found; set SYMINFER_SOLVER_CMD");
        std::process::exit(2);
    };
    let mut solver = Solver::new(SolverCfg {
        cmd,
        timeout_ms: 5000,
        log_dir: None,
    });

    let mut cache = SymCache::new(&prog, "L", ExecConfig::default());
    let budget = Budget::new(std::time::Duration::from_secs(300));
    let cfg = VerifyCfg::default();

    // Single-variable terms only, to keep the output short; pass the full
    // OctTerm::enumerate list to sweep sums and differences too.
    for term in OctTerm::enumerate(names.len())
        .into_iter()
        .filter(|t| matches!(t, OctTerm::Pos(_) | OctTerm::Neg(_)))
    {
        match cegir_oct(&mut cache, term, -10, 10, &[], &cfg, &mut solver, &budget) {
            Some(ineq) => println!("  {}", ineq.render(&names)),
            None => println!("  (no bound in range for {})", term.render(&names)),
        }
    }
}
