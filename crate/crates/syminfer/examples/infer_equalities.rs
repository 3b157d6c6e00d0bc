//! Equality inference from concrete states alone: fuzz the square-root
//! program, build the term basis, and solve for the nullspace. No solver
//! needed — this is the raw inference step without verification.

use syminfer::cstates::fuzz_states;
use syminfer::infer::{create_terms, infer_eqts};
use syminfer::lang::parse;

fn main() {
    let src = std::fs::read_to_string("benchmarks/nla/sqrt.mvl")
        .expect("run from the repository root");
    let prog = parse(&src).expect("parses");
    let names = prog.scope_vars("L").unwrap().to_vec();

    let terms = create_terms(names.len(), 2, 500).expect("under the cap");
    println!("{} terms of degree <= 2 over {:?}", terms.terms.len(), names);

    let sample = fuzz_states(&prog, "L", 2 * terms.terms.len(), 0, 300, 1);
    println!("{} distinct concrete L-states", sample.states.len());

    for inv in infer_eqts(&terms, &sample.states) {
        println!("  candidate: {}", inv.render(&names));
    }
}
