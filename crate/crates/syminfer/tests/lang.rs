//! Parser, printer, and interpreter behavior on whole programs.

mod common;

use num_bigint::BigInt;
use syminfer::lang::{interpret, parse, pretty_print};

fn big(vs: &[i64]) -> Vec<BigInt> {
    vs.iter().map(|&v| BigInt::from(v)).collect()
}

fn idiv_src() -> String {
    std::fs::read_to_string(common::bench_path("nla/idiv.mvl")).expect("benchmark present")
}

#[test]
fn idiv_trace_matches_hand_run() {
    let p = parse(&idiv_src()).unwrap();
    assert_eq!(p.vars(), &["x1", "x2", "y1", "y2", "y3"]);

    // Inputs (15, 2): first three loop-head records.
    let run = interpret(&p, &big(&[15, 2]), "L", 100_000);
    assert!(!run.truncated && !run.assume_failed);
    assert_eq!(run.states[0].values, big(&[15, 2, 0, 0, 15]));
    assert_eq!(run.states[1].values, big(&[15, 2, 0, 1, 14]));
    assert_eq!(run.states[2].values, big(&[15, 2, 1, 0, 13]));
    // Pre-test recording includes the final failing test: 15 decrements
    // of y3 plus the initial visit.
    assert_eq!(run.states.len(), 16);
    let last = run.states.last().unwrap();
    assert_eq!(last.values, big(&[15, 2, 7, 1, 0]));

    // Inputs (4, 1).
    let run = interpret(&p, &big(&[4, 1]), "L", 100_000);
    assert_eq!(run.states[0].values, big(&[4, 1, 0, 0, 4]));
    assert_eq!(run.states[1].values, big(&[4, 1, 1, 0, 3]));

    // Inputs (0, 1): loop never runs, one record at the failing test.
    let run = interpret(&p, &big(&[0, 1]), "L", 100_000);
    assert_eq!(run.states.len(), 1);
    assert_eq!(run.states[0].values, big(&[0, 1, 0, 0, 0]));
}

#[test]
fn assume_failure_yields_no_states() {
    let p = parse(&idiv_src()).unwrap();
    let run = interpret(&p, &big(&[-1, 2]), "L", 100_000);
    assert!(run.assume_failed);
    assert!(run.states.is_empty());
    let run = interpret(&p, &big(&[5, 0]), "L", 100_000);
    assert!(run.assume_failed);
    assert!(run.states.is_empty());
}

#[test]
fn uninitialized_variables_read_zero() {
    let p = parse("fn f(a: int) {\n  int u;\n  int s = u + a;\n  @L;\n}\n").unwrap();
    let run = interpret(&p, &big(&[7]), "L", 100_000);
    assert_eq!(run.states[0].values, big(&[7, 0, 7]));
}

#[test]
fn pretty_print_round_trips_on_benchmarks() {
    for dir in ["nla", "complexity"] {
        let d = common::bench_path(dir);
        let mut found = 0;
        for entry in std::fs::read_dir(&d).expect("benchmarks dir") {
            let path = entry.unwrap().path();
            if path.extension().map(|e| e == "mvl") != Some(true) {
                continue;
            }
            found += 1;
            let text = std::fs::read_to_string(&path).unwrap();
            let p1 = parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let printed = pretty_print(&p1);
            let p2 = parse(&printed)
                .unwrap_or_else(|e| panic!("{} (reprinted): {e}", path.display()));
            assert_eq!(p1, p2, "round-trip mismatch for {}", path.display());
        }
        assert!(found >= 2, "no benchmarks found under {}", d.display());
    }
}

#[test]
fn pretty_print_round_trips_on_random_programs() {
    for seed in 0..100 {
        let (src, p1) = common::random_program(seed);
        let printed = pretty_print(&p1);
        let p2 = parse(&printed).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
        assert_eq!(p1, p2, "seed {seed}\n{src}");
    }
}

#[test]
fn standalone_marker_records_once_per_crossing() {
    let p = parse(
        "fn f(n: int) {\n  int i = 0;\n  while (i < 3) {\n    i = i + 1;\n  }\n  @E;\n}\n",
    )
    .unwrap();
    let run = interpret(&p, &big(&[9]), "E", 100_000);
    assert_eq!(run.states.len(), 1);
    assert_eq!(run.states[0].values, big(&[9, 3]));
}

#[test]
fn interpreter_fuel_truncates() {
    let p = parse("fn f(n: int) {\n  int i = 0;\n  @L;\n  while (i < 1000000) {\n    i = i + 1;\n  }\n}\n")
        .unwrap();
    let run = interpret(&p, &big(&[0]), "L", 100);
    assert!(run.truncated);
}
