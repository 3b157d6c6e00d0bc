//! Depth-bounded symbolic execution.
//!
//! Each path carries a symbolic environment (variables mapped to polynomials
//! over the input symbols), a path condition, and a semantic depth. Depth is
//! charged only at branches where *both* outcomes are feasible under the path
//! condition; a branch with a single feasible outcome is followed for free,
//! and `assume` never charges. A feasibility check whose outcome is unknown
//! is treated conservatively: both sides are explored and charged.
//!
//! A location marker records the environment each time control reaches it; a
//! loop-head marker records at every evaluation of the loop test, including
//! the final failing one.

use num_bigint::BigInt;

use crate::lang::{AExpr, BExpr, Program, Step};
use crate::poly::Poly;
use crate::smt::{Ctx, Formula, SmtVerdict, Solver};

/// Path condition: a conjunction of constraints over the input symbols.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PathCond {
    pub constraints: Vec<Formula>,
}

impl PathCond {
    pub fn render(&self, names: &[String]) -> Vec<String> {
        self.constraints.iter().map(|f| f.render(names)).collect()
    }
}

/// One symbolic L-state: values of the in-scope variables at `loc` under the
/// path condition, reached at semantic depth `depth`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymState {
    pub loc: String,
    /// Indexed by canonical variable order (a prefix of the program's
    /// variables). `None` marks an undefined (never-assigned) variable.
    pub env: Vec<Option<Poly>>,
    pub pc: PathCond,
    pub depth: u32,
}

/// All symbolic states collected at one location up to a depth bound.
#[derive(Clone, Debug)]
pub struct SymStateSet {
    pub loc: String,
    pub depth: u32,
    pub states: Vec<SymState>,
    /// True when some path hit the per-path step limit before settling.
    pub truncated: bool,
}

impl SymStateSet {
    /// Disjunction of the encoded states; `false` when empty.
    pub fn to_formula(&self, ctx: &Ctx) -> Formula {
        Formula::Or(
            self.states
                .iter()
                .map(|s| crate::smt::encode_state(ctx, s))
                .collect(),
        )
    }

    /// Cache document: states rendered over the symbol names of `ctx`
    /// (`ctx.names`), env keyed by in-scope variable name, undefined
    /// variables omitted.
    pub fn to_json(&self, ctx: &Ctx, scope: &[String]) -> serde_json::Value {
        serde_json::json!({
            "loc": self.loc,
            "depth": self.depth,
            "truncated": self.truncated,
            "states": self.states.iter().map(|s| {
                let env: serde_json::Map<String, serde_json::Value> = s
                    .env
                    .iter()
                    .enumerate()
                    .filter_map(|(i, p)| {
                        p.as_ref().map(|p| {
                            (scope[i].clone(), serde_json::Value::String(p.render(&ctx.names)))
                        })
                    })
                    .collect();
                serde_json::json!({
                    "loc": s.loc,
                    "depth": s.depth,
                    "env": env,
                    "pc": s.pc.render(&ctx.names),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// Feasibility of a formula, with a witness model when available.
#[derive(Clone, Debug)]
pub enum Feas {
    Yes(Option<Vec<BigInt>>),
    No,
    Unknown,
}

/// Source of feasibility answers during execution. The solver-backed
/// implementation is the real one; tests substitute cheaper oracles.
pub trait Feasibility {
    fn check(&mut self, ctx: &Ctx, f: &Formula) -> Feas;
}

impl Feasibility for Solver {
    fn check(&mut self, ctx: &Ctx, f: &Formula) -> Feas {
        match self.check_sat(ctx, f) {
            Ok(SmtVerdict::Sat(m)) => Feas::Yes(Some(m)),
            Ok(SmtVerdict::Unsat) => Feas::No,
            Ok(SmtVerdict::Unknown(_)) | Err(_) => Feas::Unknown,
        }
    }
}

/// Treats every branch as two-way feasible. Only useful for structural tests
/// that do not depend on depth accounting.
pub struct AssumeBothFeasible;

impl Feasibility for AssumeBothFeasible {
    fn check(&mut self, _ctx: &Ctx, _f: &Formula) -> Feas {
        Feas::Unknown
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExecConfig {
    /// Per-path bound on executed steps, guarding against non-terminating
    /// single-feasible loops.
    pub step_limit: u64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig { step_limit: 20_000 }
    }
}

/// Continuation item: a block of remaining steps, or a loop to re-test.
#[derive(Clone)]
enum K<'a> {
    Block(&'a [Step]),
    Loop(&'a Step),
}

#[derive(Clone)]
struct Path<'a> {
    k: Vec<K<'a>>,
    env: Vec<Option<Poly>>,
    pc: Vec<Formula>,
    /// Cached model satisfying `pc`, used to skip solver calls when it
    /// already decides a branch condition.
    model: Option<Vec<BigInt>>,
    depth: u32,
    steps_taken: u64,
    /// Set while suspended at a marked loop test whose head state was
    /// already recorded, so resuming does not record it again.
    recorded: bool,
}

enum Branch {
    /// Path is at the depth bound and the branch would charge; suspend it.
    Suspend,
    /// Neither side is feasible (only possible with unknown-polluted paths).
    Infeasible,
    /// Exactly one side is possible: (condition holds?, constraint, model).
    One(bool, Option<Formula>, Option<Vec<BigInt>>),
    /// Both sides possible and charged.
    Both {
        t_con: Option<Formula>,
        t_model: Option<Vec<BigInt>>,
        f_con: Option<Formula>,
        f_model: Option<Vec<BigInt>>,
    },
}

/// Incremental symbolic executor for one (program, location) pair. Paths
/// suspended at the depth bound are kept as a frontier, so raising the bound
/// resumes them instead of restarting.
pub struct Executor<'a> {
    prog: &'a Program,
    ctx: Ctx,
    loc: String,
    scope: usize,
    cfg: ExecConfig,
    frontier: Vec<Path<'a>>,
    collected: Vec<SymState>,
    limit: u32,
    truncated: bool,
}

impl<'a> Executor<'a> {
    pub fn new(prog: &'a Program, loc: &str, cfg: ExecConfig) -> Executor<'a> {
        let ctx = Ctx::for_program(prog);
        let scope = prog.scope_len(loc).expect("known location");
        let arity = ctx.arity();
        let mut env: Vec<Option<Poly>> = vec![None; prog.vars().len()];
        for i in 0..prog.params.len() {
            env[i] = Some(Poly::var(arity, i));
        }
        Executor {
            prog,
            ctx,
            loc: loc.to_string(),
            scope,
            cfg,
            frontier: vec![Path {
                k: vec![K::Block(prog.steps())],
                env,
                pc: Vec::new(),
                model: None,
                depth: 0,
                steps_taken: 0,
                recorded: false,
            }],
            collected: Vec::new(),
            limit: 0,
            truncated: false,
        }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    /// True when no suspended paths remain: deeper bounds add no states.
    pub fn exhausted(&self) -> bool {
        self.frontier.is_empty()
    }

    /// Run all paths up to semantic depth `limit` and return the states seen
    /// so far. Monotone: the result at `limit` contains the result at any
    /// smaller bound.
    pub fn extend_to(&mut self, limit: u32, feas: &mut dyn Feasibility) -> SymStateSet {
        assert!(limit >= self.limit, "depth bound must not decrease");
        self.limit = limit;
        let mut work = std::mem::take(&mut self.frontier);
        while let Some(path) = work.pop() {
            self.run_path(path, &mut work, feas);
        }
        // The worklist is LIFO; order states deterministically.
        let mut states = self.collected.clone();
        states.sort_by(|a, b| {
            a.depth
                .cmp(&b.depth)
                .then_with(|| format!("{:?}", a).cmp(&format!("{:?}", b)))
        });
        SymStateSet {
            loc: self.loc.clone(),
            depth: limit,
            states,
            truncated: self.truncated,
        }
    }

    fn record(&mut self, path: &Path<'a>) {
        self.collected.push(SymState {
            loc: self.loc.clone(),
            env: path.env[..self.scope].to_vec(),
            pc: PathCond {
                constraints: path.pc.clone(),
            },
            depth: path.depth,
        });
    }

    fn run_path(
        &mut self,
        mut path: Path<'a>,
        work: &mut Vec<Path<'a>>,
        feas: &mut dyn Feasibility,
    ) {
        loop {
            let item = match path.k.pop() {
                Some(item) => item,
                None => return, // path finished
            };
            if path.steps_taken >= self.cfg.step_limit {
                self.truncated = true;
                return;
            }
            path.steps_taken += 1;
            match item {
                K::Block(steps) => {
                    let (step, rest) = match steps.split_first() {
                        Some(x) => x,
                        None => continue,
                    };
                    match step {
                        Step::Assume(b) => {
                            if !rest.is_empty() {
                                path.k.push(K::Block(rest));
                            }
                            match self.sym_bexpr(b, &path.env) {
                                Some(f) => match self.feasible(&path, &f, feas) {
                                    Feas::No => return,
                                    Feas::Yes(m) => {
                                        if m.is_some() {
                                            path.model = m;
                                        }
                                        path.pc.push(f);
                                    }
                                    Feas::Unknown => {
                                        path.model = None;
                                        path.pc.push(f);
                                    }
                                },
                                // A condition over undefined variables
                                // constrains nothing expressible.
                                None => {}
                            }
                        }
                        Step::Init(idx, init) => {
                            if !rest.is_empty() {
                                path.k.push(K::Block(rest));
                            }
                            path.env[*idx] =
                                init.as_ref().and_then(|e| self.sym_aexpr(e, &path.env));
                        }
                        Step::Assign(idx, e) => {
                            if !rest.is_empty() {
                                path.k.push(K::Block(rest));
                            }
                            path.env[*idx] = self.sym_aexpr(e, &path.env);
                        }
                        Step::If(b, then, els) => {
                            match self.branch(&path, b, feas) {
                                Branch::Suspend => {
                                    // Resume from the If itself.
                                    path.k.push(K::Block(steps));
                                    path.steps_taken -= 1;
                                    self.frontier.push(path);
                                    return;
                                }
                                Branch::Infeasible => return,
                                Branch::One(taken, con, model) => {
                                    if !rest.is_empty() {
                                        path.k.push(K::Block(rest));
                                    }
                                    if let Some(f) = con {
                                        path.pc.push(f);
                                    }
                                    path.model = model;
                                    let body = if taken { then } else { els };
                                    if !body.is_empty() {
                                        path.k.push(K::Block(body));
                                    }
                                }
                                Branch::Both {
                                    t_con,
                                    t_model,
                                    f_con,
                                    f_model,
                                } => {
                                    if !rest.is_empty() {
                                        path.k.push(K::Block(rest));
                                    }
                                    let mut other = path.clone();
                                    if let Some(f) = t_con {
                                        path.pc.push(f);
                                    }
                                    path.model = t_model;
                                    path.depth += 1;
                                    if !then.is_empty() {
                                        path.k.push(K::Block(then));
                                    }
                                    if let Some(f) = f_con {
                                        other.pc.push(f);
                                    }
                                    other.model = f_model;
                                    other.depth += 1;
                                    if !els.is_empty() {
                                        other.k.push(K::Block(els));
                                    }
                                    work.push(other);
                                }
                            }
                        }
                        Step::While { .. } => {
                            if !rest.is_empty() {
                                path.k.push(K::Block(rest));
                            }
                            if self.loop_test(&mut path, step, work, feas) {
                                return;
                            }
                        }
                        Step::Mark(l) => {
                            if !rest.is_empty() {
                                path.k.push(K::Block(rest));
                            }
                            if *l == self.loc {
                                self.record(&path);
                            }
                        }
                    }
                }
                K::Loop(step) => {
                    if self.loop_test(&mut path, step, work, feas) {
                        return;
                    }
                }
            }
        }
    }

    /// Evaluate one loop test for `step` (a `Step::While`). Returns true when
    /// the caller should stop driving this path (suspended or infeasible).
    fn loop_test(
        &mut self,
        path: &mut Path<'a>,
        step: &'a Step,
        work: &mut Vec<Path<'a>>,
        feas: &mut dyn Feasibility,
    ) -> bool {
        let (mark, cond, body) = match step {
            Step::While { mark, cond, body } => (mark, cond, body),
            _ => unreachable!("loop_test takes a While step"),
        };
        let marked_here = mark.as_deref() == Some(self.loc.as_str());
        let already = std::mem::replace(&mut path.recorded, false);
        if marked_here && !already {
            self.record(path);
        }
        match self.branch(path, cond, feas) {
            Branch::Suspend => {
                // Resuming re-evaluates this test; remember the head state is
                // already recorded so it is not duplicated then.
                let mut p = path.clone();
                p.recorded = marked_here;
                p.steps_taken = p.steps_taken.saturating_sub(1);
                p.k.push(K::Loop(step));
                self.frontier.push(p);
                true
            }
            Branch::Infeasible => true,
            Branch::One(taken, con, model) => {
                if let Some(f) = con {
                    path.pc.push(f);
                }
                path.model = model;
                if taken {
                    path.k.push(K::Loop(step));
                    if !body.is_empty() {
                        path.k.push(K::Block(body));
                    }
                }
                false
            }
            Branch::Both {
                t_con,
                t_model,
                f_con,
                f_model,
            } => {
                let mut exit = path.clone();
                if let Some(f) = f_con {
                    exit.pc.push(f);
                }
                exit.model = f_model;
                exit.depth += 1;
                work.push(exit);
                if let Some(f) = t_con {
                    path.pc.push(f);
                }
                path.model = t_model;
                path.depth += 1;
                path.k.push(K::Loop(step));
                if !body.is_empty() {
                    path.k.push(K::Block(body));
                }
                false
            }
        }
    }

    fn feasible(&mut self, path: &Path<'a>, extra: &Formula, feas: &mut dyn Feasibility) -> Feas {
        if let Some(m) = &path.model {
            if extra.eval(m) {
                // The cached model already witnesses pc ∧ extra.
                return Feas::Yes(None);
            }
        }
        let mut conj: Vec<Formula> = path.pc.clone();
        conj.push(extra.clone());
        feas.check(&self.ctx, &Formula::And(conj))
    }

    /// Decide a two-way branch on `b` under the current path condition.
    fn branch(&mut self, path: &Path<'a>, b: &BExpr, feas: &mut dyn Feasibility) -> Branch {
        let f = match self.sym_bexpr(b, &path.env) {
            Some(f) => f,
            None => {
                // Unknown condition: both sides possible and charged, no
                // constraint recorded.
                if path.depth >= self.limit {
                    return Branch::Suspend;
                }
                return Branch::Both {
                    t_con: None,
                    t_model: None,
                    f_con: None,
                    f_model: None,
                };
            }
        };
        let nf = f.negated();
        let tf = self.feasible(path, &f, feas);
        let ff = self.feasible(path, &nf, feas);
        let resolve = |v: Feas, old: &Option<Vec<BigInt>>| -> Option<Vec<BigInt>> {
            match v {
                Feas::Yes(Some(m)) => Some(m),
                Feas::Yes(None) => old.clone(),
                _ => None,
            }
        };
        match (tf, ff) {
            (Feas::No, Feas::No) => Branch::Infeasible,
            (t @ (Feas::Yes(_) | Feas::Unknown), Feas::No) => {
                Branch::One(true, Some(f), resolve(t, &path.model))
            }
            (Feas::No, e @ (Feas::Yes(_) | Feas::Unknown)) => {
                Branch::One(false, Some(nf), resolve(e, &path.model))
            }
            (t, e) => {
                if path.depth >= self.limit {
                    return Branch::Suspend;
                }
                Branch::Both {
                    t_model: resolve(t, &path.model),
                    t_con: Some(f),
                    f_model: resolve(e, &path.model),
                    f_con: Some(nf),
                }
            }
        }
    }

    fn sym_aexpr(&self, e: &AExpr, env: &[Option<Poly>]) -> Option<Poly> {
        let arity = self.ctx.arity();
        match e {
            AExpr::Var(v) => {
                let idx = self.prog.var_index(v).expect("validated");
                env[idx].clone()
            }
            AExpr::Const(n) => Some(Poly::constant(arity, n.clone())),
            AExpr::Neg(a) => Some(self.sym_aexpr(a, env)?.neg()),
            AExpr::Add(a, b) => Some(self.sym_aexpr(a, env)?.add(&self.sym_aexpr(b, env)?)),
            AExpr::Sub(a, b) => Some(self.sym_aexpr(a, env)?.sub(&self.sym_aexpr(b, env)?)),
            AExpr::Mul(a, b) => Some(self.sym_aexpr(a, env)?.mul(&self.sym_aexpr(b, env)?)),
        }
    }

    fn sym_bexpr(&self, b: &BExpr, env: &[Option<Poly>]) -> Option<Formula> {
        match b {
            BExpr::Lit(v) => Some(Formula::Bool(*v)),
            BExpr::Cmp(op, l, r) => {
                let l = self.sym_aexpr(l, env)?;
                let r = self.sym_aexpr(r, env)?;
                Some(Formula::cmp(*op, l, r))
            }
            BExpr::Not(inner) => Some(self.sym_bexpr(inner, env)?.negated()),
            BExpr::And(a, b) => Some(Formula::And(vec![
                self.sym_bexpr(a, env)?,
                self.sym_bexpr(b, env)?,
            ])),
            BExpr::Or(a, b) => Some(Formula::Or(vec![
                self.sym_bexpr(a, env)?,
                self.sym_bexpr(b, env)?,
            ])),
        }
    }
}

/// Execute `prog` to semantic depth `limit`, collecting symbolic states at
/// `loc`.
pub fn exec_to_depth(
    prog: &Program,
    loc: &str,
    limit: u32,
    cfg: ExecConfig,
    feas: &mut dyn Feasibility,
) -> SymStateSet {
    let mut ex = Executor::new(prog, loc, cfg);
    ex.extend_to(limit, feas)
}
