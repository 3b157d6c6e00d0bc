//! Concrete L-state generation: model extraction from symbolic states with
//! input-point blocking, and random-input fuzzing.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lang::{interpret, Cmp, ConcreteState, Program};
use crate::poly::Poly;
use crate::smt::{Ctx, Formula, SmtVerdict, Solver};
use crate::symexec::SymStateSet;

/// Already-used input points, excluded from future models.
#[derive(Clone, Debug, Default)]
pub struct BlockSet {
    points: Vec<Vec<BigInt>>,
    seen: BTreeSet<Vec<BigInt>>,
}

impl BlockSet {
    /// Returns false when the point was already blocked.
    pub fn add(&mut self, point: Vec<BigInt>) -> bool {
        if self.seen.insert(point.clone()) {
            self.points.push(point);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, point: &[BigInt]) -> bool {
        self.seen.contains(point)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `⋀_points ¬(⋀ Xᵢ = vᵢ)`: excludes every blocked input point.
    pub fn exclusion_formula(&self, ctx: &Ctx) -> Formula {
        let conj = self
            .points
            .iter()
            .map(|pt| {
                Formula::not(Formula::And(
                    pt.iter()
                        .enumerate()
                        .map(|(i, v)| {
                            Formula::cmp(
                                Cmp::Eq,
                                Poly::var(ctx.arity(), i),
                                Poly::constant(ctx.arity(), v.clone()),
                            )
                        })
                        .collect(),
                ))
            })
            .collect();
        Formula::And(conj)
    }
}

/// Output of a bootstrap pass: deduplicated L-states, each with the input
/// vector that produced it.
#[derive(Clone, Debug)]
pub struct StateSample {
    pub states: Vec<ConcreteState>,
    /// `provenance[i]` are the inputs whose run produced `states[i]`.
    pub provenance: Vec<Vec<BigInt>>,
    /// True when the input space ran dry before the requested count.
    pub exhausted: bool,
}

impl StateSample {
    fn push(&mut self, seen: &mut BTreeSet<Vec<BigInt>>, s: ConcreteState, inputs: &[BigInt]) {
        if seen.insert(s.values.clone()) {
            self.states.push(s);
            self.provenance.push(inputs.to_vec());
        }
    }
}

/// Generate concrete states from symbolic states (model extraction plus
/// blocking). Phase 1 extracts one model per satisfiable symbolic state;
/// phase 2 keeps drawing states uniformly at random until `n` distinct
/// L-state vectors are collected or the input space is exhausted.
///
/// Extracted inputs are replayed through the interpreter, so every returned
/// state is a real L-state even if the symbolic path condition was
/// over-approximate.
pub fn gen_states(
    p: &Program,
    loc: &str,
    n: usize,
    sym: &SymStateSet,
    ctx: &Ctx,
    solver: &mut Solver,
    block: &mut BlockSet,
    seed: u64,
) -> StateSample {
    assert!(n >= 1);
    let mut out = StateSample {
        states: Vec::new(),
        provenance: Vec::new(),
        exhausted: false,
    };
    let mut seen_vecs = BTreeSet::new();
    let fuel = 100_000;

    let replay = |out: &mut StateSample,
                      seen_vecs: &mut BTreeSet<Vec<BigInt>>,
                      inputs: &[BigInt]| {
        let run = interpret(p, inputs, loc, fuel);
        for s in run.states {
            out.push(seen_vecs, s, inputs);
        }
    };

    // Phase 1: one model per symbolic state.
    for s in &sym.states {
        let pc = Formula::And(s.pc.constraints.clone());
        match solver.check_sat(ctx, &pc) {
            Ok(SmtVerdict::Sat(model)) => {
                let inputs: Vec<BigInt> = model[..ctx.n_inputs].to_vec();
                if block.add(inputs.clone()) {
                    replay(&mut out, &mut seen_vecs, &inputs);
                }
            }
            _ => {}
        }
    }

    // Phase 2: random symbolic state, blocked model extraction.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..sym.states.len()).collect();
    while out.states.len() < n && !pool.is_empty() {
        let pick = rng.gen_range(0..pool.len());
        let si = pool[pick];
        let s = &sym.states[si];
        let mut conj = s.pc.constraints.clone();
        conj.push(block.exclusion_formula(ctx));
        match solver.check_sat(ctx, &Formula::And(conj)) {
            Ok(SmtVerdict::Sat(model)) => {
                let inputs: Vec<BigInt> = model[..ctx.n_inputs].to_vec();
                if block.add(inputs.clone()) {
                    replay(&mut out, &mut seen_vecs, &inputs);
                } else {
                    // Solver returned a blocked point; retire the state to
                    // guarantee progress.
                    pool.swap_remove(pick);
                }
            }
            _ => {
                // Unsat (this state's inputs exhausted) or unknown.
                pool.swap_remove(pick);
            }
        }
    }
    out.exhausted = out.states.len() < n;
    out
}

/// Draw uniform random inputs in `[lo, hi]`, run the interpreter, and
/// accumulate up to `n` distinct L-state vectors. Deterministic under `seed`.
pub fn fuzz_states(
    p: &Program,
    loc: &str,
    n: usize,
    lo: i64,
    hi: i64,
    seed: u64,
) -> StateSample {
    assert!(lo <= hi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = StateSample {
        states: Vec::new(),
        provenance: Vec::new(),
        exhausted: false,
    };
    let mut seen_vecs = BTreeSet::new();
    let fuel = 100_000;
    // Cap attempts so tiny (or assume-filtered) input spaces terminate.
    let attempts = (n as u64).saturating_mul(20).max(200);
    for _ in 0..attempts {
        if out.states.len() >= n {
            break;
        }
        let inputs: Vec<BigInt> = (0..p.params.len())
            .map(|_| BigInt::from(rng.gen_range(lo..=hi)))
            .collect();
        let run = interpret(p, &inputs, loc, fuel);
        for s in run.states {
            if out.states.len() >= n {
                break;
            }
            out.push(&mut seen_vecs, s, &inputs);
        }
    }
    out.exhausted = out.states.len() < n;
    out
}

/// CSV dump: header row of canonical variable names, one row per state.
pub fn to_csv(states: &[ConcreteState], vars: &[String]) -> String {
    let mut out = vars.join(",");
    out.push('\n');
    for s in states {
        let row: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Dedup helper for merging counterexample states into an inference set.
pub fn merge_states(into: &mut Vec<ConcreteState>, extra: &[ConcreteState]) -> usize {
    let mut seen: BTreeSet<Vec<BigInt>> = into.iter().map(|s| s.values.clone()).collect();
    let mut added = 0;
    for s in extra {
        if seen.insert(s.values.clone()) {
            into.push(s.clone());
            added += 1;
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn fuzz_is_deterministic() {
        let p = parse(
            "fn f(a: int, b: int) {\n  int s = a + b;\n  @L;\n}\n",
        )
        .unwrap();
        let a = fuzz_states(&p, "L", 10, -300, 300, 42);
        let b = fuzz_states(&p, "L", 10, -300, 300, 42);
        assert_eq!(a.states, b.states);
        assert_eq!(a.provenance, b.provenance);
        assert!(!a.states.is_empty());
        for (s, inp) in a.states.iter().zip(&a.provenance) {
            assert_eq!(s.values[2], &inp[0] + &inp[1]);
        }
    }

    #[test]
    fn fuzz_empty_on_failing_assume() {
        let p = parse(
            "fn f(x1: int, x2: int) {\n  assume(x1 >= 0 && x2 >= 1);\n  int y = x1;\n  @L;\n}\n",
        )
        .unwrap();
        let s = fuzz_states(&p, "L", 5, 0, 0, 7);
        // Inputs (0,0) always violate the assume.
        assert!(s.states.is_empty());
        assert!(s.exhausted);
    }

    #[test]
    fn blockset_rejects_duplicates() {
        let mut b = BlockSet::default();
        assert!(b.add(vec![BigInt::from(1), BigInt::from(2)]));
        assert!(!b.add(vec![BigInt::from(1), BigInt::from(2)]));
        assert_eq!(b.len(), 1);
        assert!(!b.is_empty());
    }
}
