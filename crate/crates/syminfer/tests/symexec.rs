//! Depth-bounded symbolic execution against a real solver: depth accounting
//! on the division example, incremental extension, and state contents.

mod common;

use num_bigint::BigInt;
use syminfer::lang::parse;
use syminfer::poly::Poly;
use syminfer::symexec::{exec_to_depth, ExecConfig, Executor, SymState};

fn idiv() -> syminfer::lang::Program {
    let src = std::fs::read_to_string(common::bench_path("nla/idiv.mvl")).unwrap();
    parse(&src).unwrap()
}

fn key(s: &SymState) -> (u32, String) {
    (s.depth, format!("{:?}", (&s.env, &s.pc)))
}

#[test]
fn idiv_depth_accounting() {
    let p = idiv();
    let mut solver = common::test_solver();
    let five = exec_to_depth(&p, "L", 5, ExecConfig::default(), &mut solver);
    assert_eq!(five.states.len(), 9, "depth-5 state count");
    let six = exec_to_depth(&p, "L", 6, ExecConfig::default(), &mut solver);
    assert_eq!(six.states.len(), 13, "depth-6 state count");
    assert!(six.states.iter().filter(|s| s.depth == 6).count() == 4);
}

#[test]
fn depth_zero_base_case() {
    let p = idiv();
    let mut solver = common::test_solver();
    let zero = exec_to_depth(&p, "L", 0, ExecConfig::default(), &mut solver);
    // The first loop-head visit costs no branch; deeper visits do.
    assert_eq!(zero.states.len(), 1);
    assert_eq!(zero.states[0].depth, 0);
}

#[test]
fn incremental_extension_matches_fresh_run() {
    let p = idiv();
    let mut solver = common::test_solver();

    let mut ex = Executor::new(&p, "L", ExecConfig::default());
    let five = ex.extend_to(5, &mut solver);
    let six_inc = ex.extend_to(6, &mut solver);
    // Shared prefix: the depth-5 states come first, unchanged.
    assert_eq!(six_inc.states[..five.states.len()], five.states[..]);

    // Two-step extension equals a fresh run, as a set.
    let seven_inc = ex.extend_to(7, &mut solver);
    let seven = exec_to_depth(&p, "L", 7, ExecConfig::default(), &mut solver);
    let mut a: Vec<_> = seven_inc.states.iter().map(key).collect();
    let mut b: Vec<_> = seven.states.iter().map(key).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn prefix_monotonicity() {
    let p = idiv();
    let mut solver = common::test_solver();
    let five = exec_to_depth(&p, "L", 5, ExecConfig::default(), &mut solver);
    let six = exec_to_depth(&p, "L", 6, ExecConfig::default(), &mut solver);
    let sixkeys: Vec<_> = six.states.iter().map(key).collect();
    for s in &five.states {
        assert!(sixkeys.contains(&key(s)), "state lost when deepening");
    }
}

#[test]
fn x2_equals_one_path_state_contents() {
    // After one full iteration on the x2 = 1 path: y1 = 1, y2 = 0,
    // y3 = X1 - 1.
    let p = idiv();
    let mut solver = common::test_solver();
    let six = exec_to_depth(&p, "L", 6, ExecConfig::default(), &mut solver);
    let n = 7; // 2 inputs + 5 variables
    let x1 = Poly::var(n, 0);
    let one = Poly::constant(n, BigInt::from(1));
    let zero = Poly::constant(n, BigInt::from(0));
    let found = six.states.iter().any(|s| {
        s.env[2].as_ref() == Some(&one)
            && s.env[3].as_ref() == Some(&zero)
            && s.env[4].as_ref() == Some(&x1.sub(&one))
    });
    assert!(found, "missing the post-first-iteration state of the x2=1 path");
}
