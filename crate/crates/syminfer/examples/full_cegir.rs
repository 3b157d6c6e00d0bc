//! The complete refinement loop on the division example: bootstrap concrete
//! states from symbolic states, infer candidate equalities, verify them
//! against the disjunction of symbolic states, and refine with
//! counterexamples until the set stabilizes.

use syminfer::cegir::{cegir_eqts, Budget, EqtsCfg, SymCache};
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
    let res = cegir_eqts(&mut cache, &EqtsCfg::default(), &mut solver, &budget)
        .expect("term basis fits the cap");

    println!(
        "{} iterations, {} candidates refuted, {} inference states",
        res.iterations,
        res.refuted,
        res.states.len()
    );
    for p in &res.invs {
        println!(
            "  invariant: {}   (settled at depth {})",
            p.inv.render(&names),
            p.settled_depth
        );
    }
    println!("{} solver queries", solver.queries_issued());
}
