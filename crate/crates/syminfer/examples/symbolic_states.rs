//! Depth-bounded symbolic execution: print the symbolic L-states of the
//! division example at increasing semantic depths. Needs an SMT solver for
//! branch feasibility (set SYMINFER_SOLVER_CMD or have z3 on PATH).

use syminfer::lang::parse;
use syminfer::smt::{default_solver_cmd, Solver, SolverCfg};
use syminfer::symexec::{exec_to_depth, ExecConfig, Executor};

fn main() {
    let src = std::fs::read_to_string("benchmarks/nla/idiv.mvl")
        .expect("run from the repository root");
    let prog = parse(&src).expect("parses");

    let Some(cmd) = default_solver_cmd() else {
        eprintln!("no solver found; set SYMINFER_SOLVER_CMD");
        std::process::exit(2);
    };
    let mut solver = Solver::new(SolverCfg {
        cmd,
        timeout_ms: 5000,
        log_dir: None,
    });

    for k in [5, 6] {
        let set = exec_to_depth(&prog, "L", k, ExecConfig::default(), &mut solver);
        println!("depth {k}: {} symbolic states", set.states.len());
    }

    // Incremental extension reuses the suspended frontier.
    let mut ex = Executor::new(&prog, "L", ExecConfig::default());
    let set = ex.extend_to(6, &mut solver);
    let ctx = ex.ctx().clone();
    let scope = prog.scope_vars("L").unwrap().to_vec();
    for s in set.states.iter().take(3) {
        let env: Vec<String> = s
            .env
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().map(|p| format!("{}={}", scope[i], p.render(&ctx.names))))
            .collect();
        println!(
            "  depth {} | {} | pc: {}",
            s.depth,
            env.join(" "),
            s.pc.render(&ctx.names).join(" && ")
        );
    }
    println!("(cache document: {})", set.to_json(&ctx, &scope)["states"][0]);
}
