//! The verification and refinement engine: adaptive-depth candidate
//! verification against the disjunction of symbolic states, the equality
//! CEGIR loop, the octagonal binary search, and redundancy elimination.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::cstates::{self, BlockSet, StateSample};
use crate::infer::{self, EqInvariant, Inequality, OctTerm};
use crate::lang::{interpret, ConcreteState, Program};
use crate::poly::Poly;
use crate::lang::Cmp;
use crate::smt::{encode_concrete_state, Ctx, Formula, SmtVerdict, Solver};
use crate::symexec::{ExecConfig, Executor, Feasibility, SymState, SymStateSet};

/// A candidate invariant under verification.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Candidate {
    Eq(EqInvariant),
    Ineq(Inequality),
}

impl Candidate {
    pub fn to_formula(&self, ctx: &Ctx, nvars: usize) -> Formula {
        match self {
            Candidate::Eq(e) => e.to_formula(ctx),
            Candidate::Ineq(i) => i.to_formula(ctx, nvars),
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        match self {
            Candidate::Eq(e) => e.render(names),
            Candidate::Ineq(i) => i.render(names),
        }
    }

    pub fn holds(&self, values: &[BigInt]) -> bool {
        match self {
            Candidate::Eq(e) => e.eval(values).is_zero(),
            Candidate::Ineq(i) => i.holds(values),
        }
    }

    /// `lhs ⋈ 0` shape over the program variables (Eq ↦ `= 0`, Ineq ↦ `≤ 0`).
    fn lhs_poly(&self, nvars: usize) -> (Poly, Cmp) {
        match self {
            Candidate::Eq(e) => (e.to_poly(), Cmp::Eq),
            Candidate::Ineq(i) => (
                i.term
                    .to_poly(nvars)
                    .sub(&Poly::constant(nvars, i.bound.clone())),
                Cmp::Le,
            ),
        }
    }
}

/// Negated candidate inside one symbolic state: program variables with a
/// defined environment are substituted by their polynomials over the inputs,
/// which keeps equality candidates linear for the solver even when the
/// candidate multiplies program variables.
fn negated_cand_in_state(ctx: &Ctx, cand: &Candidate, nvars: usize, s: &SymState) -> Formula {
    let (p, cmp) = cand.lhs_poly(nvars);
    let mut lifted = ctx.lift_var_poly(&p);
    for (i, env) in s.env.iter().enumerate().take(nvars) {
        if let Some(e) = env {
            lifted = lifted.subst(ctx.var_sym(i), e);
        }
    }
    Formula::Cmp(cmp, lifted).negated()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerifyStatus {
    Invariant,
    Refuted,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub status: VerifyStatus,
    /// Violating L-states; nonempty iff refuted.
    pub cex: Vec<ConcreteState>,
    /// Input vectors extracted from the refuting models, aligned with `cex`
    /// provenance (one entry per refuting model, not per state).
    pub cex_inputs: Vec<Vec<BigInt>>,
    /// Depth at which the verdict stabilized.
    pub settled_depth: u32,
    /// Transcript id of the deciding solver query.
    pub transcript_id: u64,
    /// True when the depth ceiling cut the loop short.
    pub hit_ceiling: bool,
    pub diagnostic: Option<String>,
}

/// Shared symbolic-state provider for one (program, location): all equality
/// and inequality checks reuse the same incrementally-extended executor.
pub struct SymCache<'a> {
    pub prog: &'a Program,
    pub loc: String,
    pub ctx: Ctx,
    ex: Executor<'a>,
    depth_reached: u32,
    sets: BTreeMap<u32, SymStateSet>,
    pub symexec_time: Duration,
}

impl<'a> SymCache<'a> {
    pub fn new(prog: &'a Program, loc: &str, cfg: ExecConfig) -> SymCache<'a> {
        let ex = Executor::new(prog, loc, cfg);
        SymCache {
            prog,
            loc: loc.to_string(),
            ctx: Ctx::for_program(prog),
            ex,
            depth_reached: 0,
            sets: BTreeMap::new(),
            symexec_time: Duration::ZERO,
        }
    }

    /// Symbolic states at depth ≤ `k`, extending the executor when needed.
    pub fn at(&mut self, k: u32, feas: &mut dyn Feasibility) -> &SymStateSet {
        if k > self.depth_reached || self.sets.is_empty() {
            let start = Instant::now();
            let set = self.ex.extend_to(k, feas);
            self.symexec_time += start.elapsed();
            self.depth_reached = k;
            self.sets.insert(k, set);
        }
        if !self.sets.contains_key(&k) {
            // Shallower than the deepest run: filter (monotone prefix).
            let deepest = self.sets.values().next_back().expect("nonempty").clone();
            let filtered = SymStateSet {
                loc: deepest.loc.clone(),
                depth: k,
                states: deepest
                    .states
                    .iter()
                    .filter(|s| s.depth <= k)
                    .cloned()
                    .collect(),
                truncated: deepest.truncated,
            };
            self.sets.insert(k, filtered);
        }
        &self.sets[&k]
    }

    /// True when every path has settled: deeper bounds add no states.
    pub fn exhausted(&self) -> bool {
        self.ex.exhausted()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyCfg {
    pub start_depth: u32,
    pub max_depth: u32,
}

impl Default for VerifyCfg {
    fn default() -> Self {
        VerifyCfg {
            start_depth: 10,
            max_depth: 20,
        }
    }
}

fn block_formula(ctx: &Ctx, block: &[ConcreteState]) -> Formula {
    Formula::And(
        block
            .iter()
            .map(|s| Formula::not(encode_concrete_state(ctx, s)))
            .collect(),
    )
}

/// Adaptive-depth verification of one candidate against the disjunction of
/// symbolic states, with counterexample states excluded by blocking.
///
/// The loop starts at `start_depth` and stops when two consecutive depths
/// agree (settled at the shallower one), when a refutation appears, or at the
/// depth ceiling.
pub fn verify(
    cache: &mut SymCache,
    cand: &Candidate,
    block: &[ConcreteState],
    cfg: &VerifyCfg,
    solver: &mut Solver,
) -> VerifyOutcome {
    let nvars = cache.prog.scope_len(&cache.loc).expect("known location");
    let ctx = cache.ctx.clone();
    let blk = block_formula(&ctx, block);
    // An initial Unknown matches this sentinel and settles immediately
    // (Unknown/Unknown is treated as settled-unknown).
    let mut prev = VerifyStatus::Unknown;
    let mut k = cfg.start_depth;
    loop {
        let states = cache.at(k, solver).clone();
        if states.states.is_empty() {
            if cache.exhausted() {
                return VerifyOutcome {
                    status: VerifyStatus::Unknown,
                    cex: Vec::new(),
                    cex_inputs: Vec::new(),
                    settled_depth: k,
                    transcript_id: solver.last_transcript_id(),
                    hit_ceiling: false,
                    diagnostic: Some(format!(
                        "location {} unreachable at any depth",
                        cache.loc
                    )),
                };
            }
            if k >= cfg.max_depth {
                return VerifyOutcome {
                    status: VerifyStatus::Unknown,
                    cex: Vec::new(),
                    cex_inputs: Vec::new(),
                    settled_depth: k,
                    transcript_id: solver.last_transcript_id(),
                    hit_ceiling: true,
                    diagnostic: Some(format!(
                        "location {} not reached within the depth ceiling",
                        cache.loc
                    )),
                };
            }
            k += 1;
            continue;
        }
        let disj = Formula::Or(
            states
                .states
                .iter()
                .map(|s| {
                    Formula::And(vec![
                        crate::smt::encode_state(&ctx, s),
                        negated_cand_in_state(&ctx, cand, nvars, s),
                    ])
                })
                .collect(),
        );
        let query = Formula::And(vec![disj, blk.clone()]);
        let verdict = solver.check_sat(&ctx, &query);
        let tid = solver.last_transcript_id();
        let status = match &verdict {
            Ok(SmtVerdict::Sat(model)) => {
                let inputs = model[..ctx.n_inputs].to_vec();
                let raw = ConcreteState {
                    loc: cache.loc.clone(),
                    values: (0..nvars).map(|i| model[ctx.var_sym(i)].clone()).collect(),
                };
                // Replay the model's inputs: interpreter-backed cex states
                // are guaranteed-real; the raw projection is kept as a
                // fallback so blocking always makes progress.
                let run = interpret(cache.prog, &inputs, &cache.loc, 100_000);
                let mut cex: Vec<ConcreteState> = run
                    .states
                    .into_iter()
                    .filter(|s| !cand.holds(&s.values))
                    .collect();
                cex.sort();
                cex.dedup();
                let mut diagnostic = None;
                if cex.is_empty() {
                    diagnostic =
                        Some("refuting model not reproduced by the interpreter".to_string());
                }
                if !cex.iter().any(|s| s == &raw) {
                    cex.push(raw);
                }
                return VerifyOutcome {
                    status: VerifyStatus::Refuted,
                    cex,
                    cex_inputs: vec![inputs],
                    settled_depth: k,
                    transcript_id: tid,
                    hit_ceiling: false,
                    diagnostic,
                };
            }
            Ok(SmtVerdict::Unsat) => VerifyStatus::Invariant,
            Ok(SmtVerdict::Unknown(_)) | Err(_) => VerifyStatus::Unknown,
        };
        // Exhausted executor: deeper bounds add no states, the verdict is
        // already final.
        if status == VerifyStatus::Invariant && cache.exhausted() {
            return VerifyOutcome {
                status,
                cex: Vec::new(),
                cex_inputs: Vec::new(),
                settled_depth: k,
                transcript_id: tid,
                hit_ceiling: false,
                diagnostic: None,
            };
        }
        if status == prev {
            return VerifyOutcome {
                status,
                cex: Vec::new(),
                cex_inputs: Vec::new(),
                settled_depth: k.saturating_sub(1),
                transcript_id: tid,
                hit_ceiling: false,
                diagnostic: None,
            };
        }
        if k >= cfg.max_depth {
            return VerifyOutcome {
                status,
                cex: Vec::new(),
                cex_inputs: Vec::new(),
                settled_depth: k,
                transcript_id: tid,
                hit_ceiling: true,
                diagnostic: None,
            };
        }
        prev = status;
        k += 1;
    }
}

/// Wall-clock budget shared across one run.
#[derive(Clone, Debug)]
pub struct Budget {
    start: Instant,
    limit: Duration,
}

impl Budget {
    pub fn new(limit: Duration) -> Budget {
        Budget {
            start: Instant::now(),
            limit,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.start.elapsed() >= self.limit
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Bootstrap {
    Symbolic,
    Fuzz,
}

#[derive(Clone, Debug)]
pub struct EqtsCfg {
    pub degree: u32,
    pub term_cap: usize,
    pub verify: VerifyCfg,
    pub seed: u64,
    /// Oversampling factor on the requested bootstrap count |terms|.
    pub oversample: f64,
    pub bootstrap: Bootstrap,
    pub fuzz_range: (i64, i64),
    /// When set, restrict terms to these variable indices (e.g. inputs plus
    /// a designated loop counter).
    pub restrict_vars: Option<Vec<usize>>,
    /// Safety cap on refinement iterations.
    pub max_iterations: usize,
}

impl Default for EqtsCfg {
    fn default() -> Self {
        EqtsCfg {
            degree: 2,
            term_cap: 500,
            verify: VerifyCfg::default(),
            seed: 1,
            oversample: 1.5,
            bootstrap: Bootstrap::Symbolic,
            fuzz_range: (-300, 300),
            restrict_vars: None,
            max_iterations: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProvedEq {
    pub inv: EqInvariant,
    pub settled_depth: u32,
    pub transcript_id: u64,
}

#[derive(Clone, Debug, Default)]
pub struct EqtsResult {
    pub invs: Vec<ProvedEq>,
    pub refuted: usize,
    pub iterations: usize,
    /// Final inference state set (bootstrap plus counterexamples).
    pub states: Vec<ConcreteState>,
    /// Counterexample block list used during verification.
    pub block: Vec<ConcreteState>,
    pub warnings: Vec<String>,
    pub budget_exhausted: bool,
}

/// The equality CEGIR loop: bootstrap concrete states, infer candidate
/// equalities, verify each against the symbolic states, feed counterexamples
/// back as both blocking clauses and inference rows, and repeat until no
/// counterexample appears.
pub fn cegir_eqts(
    cache: &mut SymCache,
    cfg: &EqtsCfg,
    solver: &mut Solver,
    budget: &Budget,
) -> Result<EqtsResult, infer::InferError> {
    let nvars = cache.prog.scope_len(&cache.loc).expect("known location");
    let terms = match &cfg.restrict_vars {
        Some(allowed) => infer::create_terms_over(nvars, allowed, cfg.degree, cfg.term_cap)?,
        None => infer::create_terms(nvars, cfg.degree, cfg.term_cap)?,
    };
    let mut out = EqtsResult::default();
    let want = ((terms.terms.len() as f64) * cfg.oversample).ceil() as usize;

    // Bootstrap.
    let sample = bootstrap_states(cache, cfg, want, solver);
    out.states = sample.states;
    if out.states.is_empty() {
        out.warnings
            .push("no concrete states reachable at the location".to_string());
        return Ok(out);
    }

    let mut proved: Vec<EqInvariant> = Vec::new();
    for iter in 0..cfg.max_iterations {
        out.iterations = iter + 1;
        let mut candidates = infer::infer_eqts(&terms, &out.states);
        candidates.retain(|c| !proved.contains(c));
        if candidates.is_empty() {
            break;
        }
        let mut new_cex: Vec<ConcreteState> = Vec::new();
        for cand in candidates {
            if budget.exhausted() {
                out.warnings.push("wall-clock budget exhausted".to_string());
                out.budget_exhausted = true;
                return Ok(out);
            }
            let outcome = verify(
                cache,
                &Candidate::Eq(cand.clone()),
                &out.block,
                &cfg.verify,
                solver,
            );
            match outcome.status {
                VerifyStatus::Invariant => {
                    if !proved.contains(&cand) {
                        proved.push(cand.clone());
                        out.invs.push(ProvedEq {
                            inv: cand,
                            settled_depth: outcome.settled_depth,
                            transcript_id: outcome.transcript_id,
                        });
                    }
                }
                VerifyStatus::Refuted => {
                    out.refuted += 1;
                    if let Some(d) = outcome.diagnostic {
                        out.warnings.push(d);
                    }
                    new_cex.extend(outcome.cex);
                }
                VerifyStatus::Unknown => {
                    out.warnings.push(format!(
                        "verification unknown for a candidate at depth {}",
                        outcome.settled_depth
                    ));
                    if let Some(d) = outcome.diagnostic {
                        out.warnings.push(d);
                    }
                }
            }
        }
        if new_cex.is_empty() {
            break;
        }
        cstates::merge_states(&mut out.block, &new_cex);
        cstates::merge_states(&mut out.states, &new_cex);
    }
    Ok(out)
}

fn bootstrap_states(
    cache: &mut SymCache,
    cfg: &EqtsCfg,
    want: usize,
    solver: &mut Solver,
) -> StateSample {
    match cfg.bootstrap {
        Bootstrap::Fuzz => cstates::fuzz_states(
            cache.prog,
            &cache.loc.clone(),
            want.max(1),
            cfg.fuzz_range.0,
            cfg.fuzz_range.1,
            cfg.seed,
        ),
        Bootstrap::Symbolic => {
            let depth = cfg.verify.start_depth;
            let sym = cache.at(depth, solver).clone();
            let ctx = cache.ctx.clone();
            let mut block = BlockSet::default();
            cstates::gen_states(
                cache.prog,
                &cache.loc.clone(),
                want.max(1),
                &sym,
                &ctx,
                solver,
                &mut block,
                cfg.seed,
            )
        }
    }
}

/// Octagonal bound search for one term via verified binary search over
/// `[min_v, max_v]`, reusing the cached symbolic states.
///
/// Pre-check: if `term ≤ max_v` cannot be proved, no bound in range exists
/// and the result is None. The search interval `[lo, hi]` maintains `hi`
/// proved and `lo` a known lower bound (from counterexample values);
/// refutations jump to the witnessed value, unknowns shrink conservatively.
pub fn cegir_oct(
    cache: &mut SymCache,
    term: OctTerm,
    min_v: i64,
    max_v: i64,
    block: &[ConcreteState],
    cfg: &VerifyCfg,
    solver: &mut Solver,
    budget: &Budget,
) -> Option<Inequality> {
    assert!(min_v <= max_v);
    let check = |cache: &mut SymCache, solver: &mut Solver, bound: i64| {
        verify(
            cache,
            &Candidate::Ineq(Inequality {
                term,
                bound: BigInt::from(bound),
            }),
            block,
            cfg,
            solver,
        )
    };
    match check(cache, solver, max_v).status {
        VerifyStatus::Invariant => {}
        _ => return None,
    }
    let mut lo = min_v;
    let mut hi = max_v;
    while hi - lo > 1 {
        if budget.exhausted() {
            return Some(Inequality {
                term,
                bound: BigInt::from(hi),
            });
        }
        let mid = (lo + hi + 1).div_euclid(2);
        let outcome = check(cache, solver, mid);
        match outcome.status {
            VerifyStatus::Invariant => hi = mid,
            VerifyStatus::Refuted => {
                // The counterexample witnesses term > mid; jump to its value.
                let c = outcome
                    .cex
                    .iter()
                    .map(|s| term.eval(&s.values))
                    .max()
                    .and_then(|v| i64::try_from(&v).ok())
                    .filter(|&v| v > mid && v <= hi);
                lo = c.unwrap_or(mid + 1);
            }
            VerifyStatus::Unknown => lo = mid + 1,
        }
    }
    if lo == hi {
        return Some(Inequality {
            term,
            bound: BigInt::from(hi),
        });
    }
    match check(cache, solver, lo).status {
        VerifyStatus::Invariant => Some(Inequality {
            term,
            bound: BigInt::from(lo),
        }),
        VerifyStatus::Refuted => Some(Inequality {
            term,
            bound: BigInt::from(hi),
        }),
        VerifyStatus::Unknown => None,
    }
}

/// Drop every candidate implied by the conjunction of the others. Candidates
/// are processed in canonical order (equalities first, then by rendering);
/// Unknown implication verdicts keep the candidate.
pub fn remove_redundant(
    cands: &[Candidate],
    ctx: &Ctx,
    nvars: usize,
    names: &[String],
    solver: &mut Solver,
) -> Vec<Candidate> {
    let mut sorted: Vec<Candidate> = cands.to_vec();
    sorted.sort_by_key(|c| {
        (
            match c {
                Candidate::Eq(_) => 0u8,
                Candidate::Ineq(_) => 1u8,
            },
            c.render(names),
        )
    });
    sorted.dedup();
    let mut keep: Vec<bool> = vec![true; sorted.len()];
    // Sweep to a fixpoint: a check that comes back unknown against a larger
    // set can succeed once the set has shrunk, so one pass is not enough.
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..sorted.len() {
            if !keep[i] {
                continue;
            }
            let others: Vec<Formula> = sorted
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i && keep[j])
                .map(|(_, c)| c.to_formula(ctx, nvars))
                .collect();
            if others.is_empty() {
                continue;
            }
            let lhs = Formula::And(others);
            let rhs = sorted[i].to_formula(ctx, nvars);
            if let Ok(SmtVerdict::Unsat) = solver.check_implication(ctx, &lhs, &rhs) {
                keep[i] = false;
                changed = true;
            }
        }
    }
    sorted
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(c, _)| c)
        .collect()
}
