//! Acceptance gate: one test per criterion, each emitting a single
//! pass/fail line (run with `--nocapture` to see them on success).

mod common;

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use syminfer::cegir::{
    cegir_eqts, cegir_oct, remove_redundant, verify, Budget, Candidate, EqtsCfg, SymCache,
    VerifyCfg, VerifyStatus,
};
use syminfer::cstates::fuzz_states;
use syminfer::infer::{create_terms, infer_eqts, EqInvariant, Inequality, OctTerm};
use syminfer::lang::{interpret, parse, Program};
use syminfer::poly::{Monomial, Poly};
use syminfer::runner::{
    apply_overrides, check_expected, parse_sidecar, run_program, RunConfig,
};
use syminfer::smt::{Ctx, SmtVerdict};
use syminfer::symexec::ExecConfig;

fn gate(criterion: u32, name: &str, errors: Vec<String>) {
    if errors.is_empty() {
        println!("[acceptance] criterion {criterion} ({name}): PASS");
    } else {
        println!("[acceptance] criterion {criterion} ({name}): FAIL");
        panic!("criterion {criterion} ({name}) failed:\n  {}", errors.join("\n  "));
    }
}

fn load(rel: &str) -> Program {
    let src = std::fs::read_to_string(common::bench_path(rel)).expect("benchmark present");
    parse(&src).expect("benchmark parses")
}

fn mono(exps: &[u32]) -> Monomial {
    Monomial::from_exps(exps.to_vec())
}

/// x2*y1 - x1 + y2 + y3 over idiv's scope [x1, x2, y1, y2, y3].
fn idiv_invariant_poly() -> Poly {
    let n = 5;
    Poly::monomial(n, mono(&[0, 1, 1, 0, 0]), BigInt::from(1))
        .sub(&Poly::var(n, 0))
        .add(&Poly::var(n, 3))
        .add(&Poly::var(n, 4))
}

#[test]
fn criterion_1_idiv_end_to_end() {
    let started = Instant::now();
    let mut errors = Vec::new();
    let prog = load("nla/idiv.mvl");
    let mut solver = common::test_solver();
    let mut cache = SymCache::new(&prog, "L", ExecConfig::default());
    let budget = Budget::new(Duration::from_secs(60));

    let res = cegir_eqts(&mut cache, &EqtsCfg::default(), &mut solver, &budget)
        .expect("terms under cap");
    if res.invs.len() != 1 {
        errors.push(format!(
            "expected exactly one equality, got {:?}",
            res.invs.iter().map(|p| p.inv.render(&prog.vars().to_vec())).collect::<Vec<_>>()
        ));
    } else if res.invs[0].inv.to_poly() != idiv_invariant_poly() {
        errors.push(format!(
            "wrong equality class: {}",
            res.invs[0].inv.render(&prog.vars().to_vec())
        ));
    }

    // Injected spurious candidates must be refuted.
    let spurious = [
        // y1*y2*y3 = 0
        EqInvariant {
            nvars: 5,
            terms: vec![(mono(&[0, 0, 1, 1, 1]), BigInt::from(1))],
        },
        // x1*y3 - 12*y1*y3 - y2*y3 - y3^2 = 0
        EqInvariant {
            nvars: 5,
            terms: vec![
                (mono(&[1, 0, 0, 0, 1]), BigInt::from(1)),
                (mono(&[0, 0, 1, 0, 1]), BigInt::from(-12)),
                (mono(&[0, 0, 0, 1, 1]), BigInt::from(-1)),
                (mono(&[0, 0, 0, 0, 2]), BigInt::from(-1)),
            ],
        },
    ];
    for cand in spurious {
        let text = cand.render(&prog.vars().to_vec());
        let out = verify(
            &mut cache,
            &Candidate::Eq(cand),
            &[],
            &VerifyCfg::default(),
            &mut solver,
        );
        if out.status != VerifyStatus::Refuted {
            errors.push(format!("candidate {text} not refuted: {:?}", out.status));
        } else if out.cex.is_empty() {
            errors.push(format!("candidate {text} refuted without a model"));
        }
    }

    // Depth-6 states add nothing beyond depth 5: the real invariant settles
    // at depth 5 (depths 5 and 6 agree).
    let inv = EqInvariant {
        nvars: 5,
        terms: vec![
            (mono(&[0, 1, 1, 0, 0]), BigInt::from(1)),
            (mono(&[1, 0, 0, 0, 0]), BigInt::from(-1)),
            (mono(&[0, 0, 0, 1, 0]), BigInt::from(1)),
            (mono(&[0, 0, 0, 0, 1]), BigInt::from(1)),
        ],
    };
    let out = verify(
        &mut cache,
        &Candidate::Eq(inv),
        &[],
        &VerifyCfg {
            start_depth: 5,
            max_depth: 20,
        },
        &mut solver,
    );
    if out.status != VerifyStatus::Invariant || out.settled_depth != 5 {
        errors.push(format!(
            "invariant did not stabilize at depth 5: {:?} at {}",
            out.status, out.settled_depth
        ));
    }

    let elapsed = started.elapsed();
    if elapsed >= Duration::from_secs(60) {
        errors.push(format!("took {elapsed:?}, budget 60s"));
    }
    gate(1, "idiv end-to-end", errors);
}

#[test]
fn criterion_2_spurious_bound_refutation() {
    let mut errors = Vec::new();
    let prog = load("nla/idiv.mvl");
    let mut solver = common::test_solver();
    let mut cache = SymCache::new(&prog, "L", ExecConfig::default());
    let budget = Budget::new(Duration::from_secs(120));
    let cfg = VerifyCfg::default();

    // -x2 <= -1, i.e. x2 >= 1 — and never x2 >= 2 (bound -2).
    match cegir_oct(&mut cache, OctTerm::Neg(1), -10, 10, &[], &cfg, &mut solver, &budget) {
        Some(ineq) if ineq.bound == BigInt::from(-1) => {}
        other => errors.push(format!("x2 bound: expected -x2 <= -1, got {other:?}")),
    }
    // -x1 <= 0, i.e. x1 >= 0.
    match cegir_oct(&mut cache, OctTerm::Neg(0), -10, 10, &[], &cfg, &mut solver, &budget) {
        Some(ineq) if ineq.bound == BigInt::from(0) => {}
        other => errors.push(format!("x1 bound: expected -x1 <= 0, got {other:?}")),
    }
    gate(2, "spurious-bound refutation", errors);
}

#[test]
fn criterion_3_nla_subset() {
    let mut errors = Vec::new();
    for name in [
        "cohendiv", "manna", "hard", "sqrt", "cohencu", "ps2", "ps3", "ps4",
    ] {
        let path = common::bench_path(&format!("nla/{name}.mvl"));
        let mut cfg = RunConfig::new(&path);
        apply_overrides(&mut cfg, &path.with_extension("cfg"));
        let src = std::fs::read_to_string(&path).expect("benchmark present");
        let prog = parse(&src).expect("parses");
        let started = Instant::now();
        let outcome = match run_program(&prog, &cfg) {
            Ok(o) => o,
            Err(e) => {
                errors.push(format!("{name}: run failed: {e}"));
                continue;
            }
        };
        let elapsed = started.elapsed();
        if elapsed >= Duration::from_secs(300) {
            errors.push(format!("{name}: took {elapsed:?}, budget 300s"));
        }
        let expected = parse_sidecar(&path.with_extension("inv")).expect("sidecar parses");
        let mut solver = common::test_solver();
        for exp in &expected {
            match check_expected(&prog, &outcome, exp, &mut solver) {
                Ok((true, _)) => {}
                Ok((false, _)) => {
                    errors.push(format!("{name}: found set does not imply `{}`", exp.text))
                }
                Err(e) => errors.push(format!("{name}: implication check error: {e}")),
            }
        }
    }
    gate(3, "NLA subset", errors);
}

/// Mirror of the runner's complexity pipeline without the octagonal sweep.
fn counter_roots(prog: &Program, loc: &str, degree: u32, t: usize) -> Option<syminfer::bounds::BoundSolution> {
    let mut solver = common::test_solver();
    let mut cache = SymCache::new(prog, loc, ExecConfig::default());
    let budget = Budget::new(Duration::from_secs(110));
    let mut restrict: Vec<usize> = (0..prog.params.len()).collect();
    if !restrict.contains(&t) {
        restrict.push(t);
    }
    let cfg = EqtsCfg {
        degree,
        restrict_vars: Some(restrict),
        ..EqtsCfg::default()
    };
    let res = cegir_eqts(&mut cache, &cfg, &mut solver, &budget).expect("terms under cap");
    let mut best: Option<syminfer::bounds::BoundSolution> = None;
    for p in &res.invs {
        if let Ok(sol) = syminfer::bounds::solve_counter(&p.inv, t) {
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
    best
}

/// Check that `eq 's polynomial` equals c · t^pre · Π (t − rootᵢ) for the
/// constant c given by its leading t-coefficient — the exact-division
/// identity behind the roots.
fn roots_factor_exactly(sol: &syminfer::bounds::BoundSolution, eqs: &[Poly]) -> bool {
    let n = sol.nvars;
    let t = sol.t;
    let tvar = Poly::var(n, t);
    eqs.iter().any(|p| {
        let prod = sol
            .roots
            .iter()
            .fold(Poly::constant(n, BigInt::one()), |acc, r| {
                acc.mul(&tvar.sub(&r.expr))
            });
        // Leading t-coefficient of p must be a constant multiple of prod's.
        let pc = p.as_univariate_in(t);
        let qc = prod.as_univariate_in(t);
        if pc.len() != qc.len() {
            return false;
        }
        let c = pc.last().unwrap().as_constant();
        let one = qc.last().unwrap().as_constant();
        match (c, one) {
            (Some(c), Some(one)) if !one.is_zero() && (&c % &one).is_zero() => {
                prod.scale(&(c / one)) == *p
            }
            _ => false,
        }
    })
}

#[test]
fn criterion_4_complexity_bounds() {
    let mut errors = Vec::new();

    // pldi_fig2: roots {0, P+M+1, N−M(P−N)} at degree 4; scope is
    // [M, N, P, i, j, k, t].
    {
        let started = Instant::now();
        let prog = load("complexity/pldi_fig2.mvl");
        let t = prog.var_index("t").unwrap();
        match counter_roots(&prog, "L", 4, t) {
            Some(sol) => {
                let n = 7;
                let mut expected = vec![
                    Poly::zero(n),
                    // P + M + 1
                    Poly::var(n, 2).add(&Poly::var(n, 0)).add(&Poly::constant(n, BigInt::one())),
                    // N − M(P−N) = N − M·P + M·N
                    Poly::var(n, 1)
                        .sub(&Poly::var(n, 0).mul(&Poly::var(n, 2)))
                        .add(&Poly::var(n, 0).mul(&Poly::var(n, 1))),
                ];
                let mut got: Vec<Poly> = sol.roots.iter().map(|r| r.expr.clone()).collect();
                let key = |p: &Poly| format!("{p:?}");
                expected.sort_by_key(key);
                got.sort_by_key(key);
                if got != expected {
                    errors.push(format!("pldi_fig2 roots mismatch: {got:?}"));
                }
                if sol.residual.is_some() {
                    errors.push("pldi_fig2: unexpected residual factor".into());
                }
            }
            None => errors.push("pldi_fig2: no counter equality solved".into()),
        }
        let elapsed = started.elapsed();
        if elapsed >= Duration::from_secs(120) {
            errors.push(format!("pldi_fig2 took {elapsed:?}, budget 120s"));
        }
    }

    // cav09_fig1a: roots {m+100, 100} at degree 2; scope is [m, x, y, t].
    {
        let started = Instant::now();
        let prog = load("complexity/cav09_fig1a.mvl");
        let t = prog.var_index("t").unwrap();
        match counter_roots(&prog, "L", 2, t) {
            Some(sol) => {
                let n = 4;
                let mut expected = vec![
                    Poly::var(n, 0).add(&Poly::constant(n, BigInt::from(100))),
                    Poly::constant(n, BigInt::from(100)),
                ];
                let mut got: Vec<Poly> = sol.roots.iter().map(|r| r.expr.clone()).collect();
                let key = |p: &Poly| format!("{p:?}");
                expected.sort_by_key(key);
                got.sort_by_key(key);
                if got != expected {
                    errors.push(format!("cav09_fig1a roots mismatch: {got:?}"));
                }
                // Exact-division identity: (t−m−100)(t−100) reproduces the
                // degree-2 equality up to a constant.
                let eq = Poly::var(n, 3)
                    .mul(&Poly::var(n, 3))
                    .sub(&Poly::var(n, 0).mul(&Poly::var(n, 3)))
                    .sub(&Poly::var(n, 3).scale(&BigInt::from(200)))
                    .add(&Poly::var(n, 0).scale(&BigInt::from(100)))
                    .add(&Poly::constant(n, BigInt::from(10000)));
                if !roots_factor_exactly(&sol, &[eq]) {
                    errors.push("cav09_fig1a: root product does not reproduce the equality".into());
                }
            }
            None => errors.push("cav09_fig1a: no counter equality solved".into()),
        }
        let elapsed = started.elapsed();
        if elapsed >= Duration::from_secs(120) {
            errors.push(format!("cav09_fig1a took {elapsed:?}, budget 120s"));
        }
    }

    gate(4, "complexity bounds", errors);
}

/// Independent rational rank oracle (plain Gaussian elimination).
fn rank_oracle(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let (nr, nc) = (m.len(), m.first().map_or(0, |r| r.len()));
    let mut rank = 0;
    for col in 0..nc {
        let Some(piv) = (rank..nr).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let p = m[rank][col].clone();
        for r in 0..nr {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] / &p;
                for c in 0..nc {
                    let sub = &f * &m[rank][c];
                    m[r][c] = &m[r][c] - &sub;
                }
            }
        }
        rank += 1;
        if rank == nr {
            break;
        }
    }
    rank
}

#[test]
fn criterion_5_property_suites() {
    let mut errors = Vec::new();

    // (a) Nullspace soundness/completeness vs the rank oracle, 200 instances.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let mut done = 0;
    while done < 200 {
        let nvars = rng.gen_range(1..=6usize);
        let degree = rng.gen_range(1..=3u32);
        let Ok(terms) = create_terms(nvars, degree, 60) else {
            continue;
        };
        done += 1;
        let nstates = rng.gen_range(1..=terms.terms.len() + 5);
        let states: Vec<syminfer::lang::ConcreteState> = (0..nstates)
            .map(|_| syminfer::lang::ConcreteState {
                loc: "L".to_string(),
                values: (0..nvars).map(|_| BigInt::from(rng.gen_range(-5..=5))).collect(),
            })
            .collect();
        let invs = infer_eqts(&terms, &states);
        for inv in &invs {
            if states.iter().any(|s| !inv.eval(&s.values).is_zero()) {
                errors.push(format!("nullspace unsound on instance {done}"));
                break;
            }
        }
        // Completeness: dimension matches |terms| − rank over distinct rows.
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for s in &states {
            if seen.insert(s.values.clone()) {
                rows.push(
                    terms
                        .terms
                        .iter()
                        .map(|m| BigRational::from_integer(m.eval(&s.values)))
                        .collect(),
                );
            }
        }
        let expected_dim = terms.terms.len() - rank_oracle(&rows);
        if invs.len() != expected_dim {
            errors.push(format!(
                "nullspace dimension {} != oracle {} on instance {done}",
                invs.len(),
                expected_dim
            ));
        }
        if done == 200 {
            break;
        }
    }

    // (b) Cex validity: every sampled refutation replays through the
    // interpreter.
    let mut refutations = 0;
    let mut solver = common::test_solver();
    for seed in 0..30u64 {
        let (_, prog) = common::random_program(seed);
        let nvars = prog.scope_len("L").unwrap();
        let sample = fuzz_states(&prog, "L", 3, -20, 20, seed);
        if sample.states.is_empty() {
            continue;
        }
        let Ok(terms) = create_terms(nvars, 2, 100) else {
            continue;
        };
        let mut cache = SymCache::new(&prog, "L", ExecConfig::default());
        for cand in infer_eqts(&terms, &sample.states).into_iter().take(4) {
            let out = verify(
                &mut cache,
                &Candidate::Eq(cand.clone()),
                &[],
                &VerifyCfg::default(),
                &mut solver,
            );
            if out.status == VerifyStatus::Refuted {
                refutations += 1;
                if out.cex.is_empty() {
                    errors.push(format!("seed {seed}: refutation without cex states"));
                }
                if out.diagnostic.is_some() {
                    errors.push(format!(
                        "seed {seed}: refuting model not reproduced by the interpreter"
                    ));
                }
                if out.cex.iter().any(|s| Candidate::Eq(cand.clone()).holds(&s.values)) {
                    errors.push(format!("seed {seed}: cex does not violate the candidate"));
                }
            }
        }
    }
    if refutations < 10 {
        errors.push(format!("only {refutations} refutations sampled"));
    }

    // (c) cegir_oct equals the linear-scan oracle on width-40 ranges.
    for seed in 100..150u64 {
        let (_, prog) = common::random_program(seed);
        let nvars = prog.scope_len("L").unwrap();
        let mut cache = SymCache::new(&prog, "L", ExecConfig::default());
        let budget = Budget::new(Duration::from_secs(60));
        let cfg = VerifyCfg::default();
        let term = OctTerm::Pos(prog.var_index("x").unwrap().min(nvars - 1));
        let mut oracle = None;
        for b in -20..=20i64 {
            let out = verify(
                &mut cache,
                &Candidate::Ineq(Inequality {
                    term,
                    bound: BigInt::from(b),
                }),
                &[],
                &cfg,
                &mut solver,
            );
            if out.status == VerifyStatus::Invariant {
                oracle = Some(BigInt::from(b));
                break;
            }
        }
        let got = cegir_oct(&mut cache, term, -20, 20, &[], &cfg, &mut solver, &budget)
            .map(|i| i.bound);
        if got != oracle {
            errors.push(format!("seed {seed}: cegir_oct {got:?} != scan {oracle:?}"));
        }
    }

    // (d) Symexec prefix monotonicity and model-replay soundness.
    for seed in 200..250u64 {
        let (_, prog) = common::random_program(seed);
        let mut cache = SymCache::new(&prog, "L", ExecConfig::default());
        let ctx = cache.ctx.clone();
        let shallow = cache.at(3, &mut solver).clone();
        let deep = cache.at(5, &mut solver).clone();
        if deep.states[..shallow.states.len()] != shallow.states[..] {
            errors.push(format!("seed {seed}: depth-3 states are not a prefix of depth-5"));
        }
        for s in deep.states.iter().take(4) {
            let pc = syminfer::smt::Formula::And(s.pc.constraints.clone());
            if let Ok(SmtVerdict::Sat(model)) = solver.check_sat(&ctx, &pc) {
                let inputs = model[..ctx.n_inputs].to_vec();
                let want: Option<Vec<BigInt>> = s
                    .env
                    .iter()
                    .map(|p| p.as_ref().map(|p| p.eval(&model)))
                    .collect();
                let Some(want) = want else { continue };
                let run = interpret(&prog, &inputs, "L", 100_000);
                if !run.states.iter().any(|c| c.values == want) {
                    errors.push(format!(
                        "seed {seed}: symbolic state not reproduced on {inputs:?}"
                    ));
                }
            }
        }
    }

    // (e) remove_redundant fixpoint on random invariant sets.
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1F0);
    for case in 0..50 {
        let nvars = rng.gen_range(2..=3usize);
        let names: Vec<String> = (0..nvars).map(|i| format!("v{i}")).collect();
        let ctx = Ctx {
            n_inputs: 0,
            names: names.clone(),
        };
        let terms = create_terms(nvars, 2, 100).unwrap();
        let mut cands: Vec<Candidate> = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let coeffs: Vec<BigInt> = (0..terms.terms.len())
                .map(|_| BigInt::from(rng.gen_range(-2..=2)))
                .collect();
            if let Some(inv) = EqInvariant::from_coeffs(&terms, &coeffs) {
                cands.push(Candidate::Eq(inv));
            }
        }
        let octs = OctTerm::enumerate(nvars);
        for _ in 0..rng.gen_range(1..=4) {
            cands.push(Candidate::Ineq(Inequality {
                term: octs[rng.gen_range(0..octs.len())],
                bound: BigInt::from(rng.gen_range(-5..=5)),
            }));
        }
        let kept = remove_redundant(&cands, &ctx, nvars, &names, &mut solver);
        for i in 0..kept.len() {
            let others: Vec<syminfer::smt::Formula> = kept
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c.to_formula(&ctx, nvars))
                .collect();
            if others.is_empty() {
                continue;
            }
            let lhs = syminfer::smt::Formula::And(others);
            let rhs = kept[i].to_formula(&ctx, nvars);
            if let Ok(SmtVerdict::Unsat) = solver.check_implication(&ctx, &lhs, &rhs) {
                errors.push(format!(
                    "case {case}: survivor {} implied by the rest",
                    kept[i].render(&names)
                ));
            }
        }
    }

    gate(5, "property suites", errors);
}

#[test]
fn criterion_6_determinism() {
    let mut errors = Vec::new();
    for rel in [
        "nla/idiv.mvl",
        "nla/cohendiv.mvl",
        "nla/manna.mvl",
        "nla/hard.mvl",
        "nla/sqrt.mvl",
        "nla/cohencu.mvl",
        "nla/ps2.mvl",
        "nla/ps3.mvl",
        "nla/ps4.mvl",
        "complexity/pldi_fig2.mvl",
        "complexity/cav09_fig1a.mvl",
    ] {
        let path = common::bench_path(rel);
        let mut cfg = RunConfig::new(&path);
        apply_overrides(&mut cfg, &path.with_extension("cfg"));
        cfg.redact_timing = true;
        let src = std::fs::read_to_string(&path).expect("benchmark present");
        let prog = parse(&src).expect("parses");
        let render = |cfg: &RunConfig| -> Result<String, String> {
            run_program(&prog, cfg)
                .map(|o| serde_json::to_string_pretty(&o.report).expect("serializes"))
                .map_err(|e| e.to_string())
        };
        match (render(&cfg), render(&cfg)) {
            (Ok(a), Ok(b)) => {
                if a != b {
                    errors.push(format!("{rel}: reports differ between runs"));
                }
            }
            (Err(e), _) | (_, Err(e)) => errors.push(format!("{rel}: run failed: {e}")),
        }
    }
    gate(6, "determinism", errors);
}
