//! SMT-LIB v2 encoding and the external solver client.
//!
//! Formulas are boolean combinations of polynomial comparisons against zero,
//! over a per-program symbol space: the input symbols `X1..Xn` followed by
//! the canonical program variables. Queries run one solver subprocess each:
//! the script is written to stdin, stdin is closed, and the reply is read to
//! EOF. This works with `z3 -in`, the bundled `z3shim`, and any SMT-LIB
//! compliant solver driven the same way.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::lang::{Cmp, ConcreteState, Program};
use crate::poly::Poly;
use crate::symexec::SymState;

/// Symbol space for one (program, location) context: input symbols first,
/// then every canonical program variable.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub n_inputs: usize,
    /// SMT symbol names, index-aligned with the polynomial variable space.
    pub names: Vec<String>,
}

impl Ctx {
    /// `X1..Xn` for the parameters, then the program variables. A program
    /// variable that collides with an input symbol name gets a `v!` prefix.
    pub fn for_program(p: &Program) -> Ctx {
        let n_inputs = p.params.len();
        let mut names: Vec<String> = (1..=n_inputs).map(|i| format!("X{}", i)).collect();
        for v in p.vars() {
            if names.contains(v) {
                names.push(format!("v!{}", v));
            } else {
                names.push(v.clone());
            }
        }
        Ctx { n_inputs, names }
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    /// Index of program variable `i` in the symbol space.
    pub fn var_sym(&self, i: usize) -> usize {
        self.n_inputs + i
    }

    /// Lift a polynomial over program variables into the symbol space.
    pub fn lift_var_poly(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero(self.arity());
        for (m, c) in p.terms() {
            let mut exps = vec![0u32; self.arity()];
            for (i, &e) in m.exps().iter().enumerate() {
                exps[self.var_sym(i)] = e;
            }
            out = out.add(&Poly::monomial(
                self.arity(),
                crate::poly::Monomial::from_exps(exps),
                c.clone(),
            ));
        }
        out
    }
}

/// Boolean combination of polynomial comparisons `p ⋈ 0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Formula {
    Bool(bool),
    /// `poly ⋈ 0`.
    Cmp(Cmp, Poly),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn cmp(op: Cmp, lhs: Poly, rhs: Poly) -> Formula {
        Formula::Cmp(op, lhs.sub(&rhs))
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        Formula::And(fs)
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        Formula::Or(fs)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// Structural negation, pushed down to the comparison atoms.
    pub fn negated(&self) -> Formula {
        match self {
            Formula::Bool(b) => Formula::Bool(!b),
            Formula::Cmp(op, p) => Formula::Cmp(op.negate(), p.clone()),
            Formula::Not(f) => (**f).clone(),
            Formula::And(fs) => Formula::Or(fs.iter().map(|f| f.negated()).collect()),
            Formula::Or(fs) => Formula::And(fs.iter().map(|f| f.negated()).collect()),
        }
    }

    /// Exact-integer evaluation at a full model point.
    pub fn eval(&self, point: &[BigInt]) -> bool {
        match self {
            Formula::Bool(b) => *b,
            Formula::Cmp(op, p) => op.eval(&p.eval(point), &BigInt::zero()),
            Formula::Not(f) => !f.eval(point),
            Formula::And(fs) => fs.iter().all(|f| f.eval(point)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(point)),
        }
    }

    /// Free symbol indices, in increasing order.
    pub fn free_syms(&self, acc: &mut Vec<bool>) {
        match self {
            Formula::Bool(_) => {}
            Formula::Cmp(_, p) => {
                for (m, _) in p.terms() {
                    for (i, &e) in m.exps().iter().enumerate() {
                        if e > 0 {
                            acc[i] = true;
                        }
                    }
                }
            }
            Formula::Not(f) => f.free_syms(acc),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.free_syms(acc);
                }
            }
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        match self {
            Formula::Bool(b) => b.to_string(),
            Formula::Cmp(op, p) => format!("{} {} 0", p.render(names), op.symbol()),
            Formula::Not(f) => format!("!({})", f.render(names)),
            Formula::And(fs) => fs
                .iter()
                .map(|f| format!("({})", f.render(names)))
                .collect::<Vec<_>>()
                .join(" && "),
            Formula::Or(fs) => fs
                .iter()
                .map(|f| format!("({})", f.render(names)))
                .collect::<Vec<_>>()
                .join(" || "),
        }
    }
}

/// Encode a symbolic state: its path condition conjoined with `var = env(var)`
/// for every defined in-scope variable. Undefined variables are omitted.
pub fn encode_state(ctx: &Ctx, s: &SymState) -> Formula {
    let mut conj = Vec::new();
    for c in &s.pc.constraints {
        conj.push(c.clone());
    }
    for (i, val) in s.env.iter().enumerate() {
        if let Some(e) = val {
            let var = Poly::var(ctx.arity(), ctx.var_sym(i));
            conj.push(Formula::cmp(Cmp::Eq, var, e.clone()));
        }
    }
    Formula::And(conj)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UnknownReason {
    Timeout,
    Incomplete,
}

/// Solver verdict for one query. `Sat` carries a total model over the
/// context's symbol space (unconstrained symbols default to 0).
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SmtVerdict {
    Sat(Vec<BigInt>),
    Unsat,
    Unknown(UnknownReason),
}

impl SmtVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            SmtVerdict::Sat(_) => "sat",
            SmtVerdict::Unsat => "unsat",
            SmtVerdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Error, Debug)]
pub enum SmtError {
    #[error("failed to spawn solver `{cmd}`: {source}")]
    Spawn {
        cmd: String,
        source: std::io::Error,
    },
    #[error("solver i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed solver reply: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug)]
pub struct SolverCfg {
    /// Solver argv, e.g. `["z3", "-in"]`.
    pub cmd: Vec<String>,
    pub timeout_ms: u64,
    /// When set, every emitted script is written here as `NNNNNN.smt2`.
    pub log_dir: Option<PathBuf>,
}

impl SolverCfg {
    pub fn new(cmd: Vec<String>) -> Self {
        SolverCfg {
            cmd,
            timeout_ms: 5000,
            log_dir: None,
        }
    }
}

/// Locate a usable solver command: the `SYMINFER_SOLVER_CMD` environment
/// variable (whitespace-split), `z3 -in` when `z3` is on PATH, else the
/// `z3shim` binary sitting next to the current executable.
pub fn default_solver_cmd() -> Option<Vec<String>> {
    if let Ok(s) = std::env::var("SYMINFER_SOLVER_CMD") {
        let argv: Vec<String> = s.split_whitespace().map(str::to_string).collect();
        if !argv.is_empty() {
            return Some(argv);
        }
    }
    if let Ok(path) = std::env::var("PATH") {
        for dir in std::env::split_paths(&path) {
            if dir.join("z3").is_file() {
                return Some(vec!["z3".into(), "-in".into()]);
            }
        }
    }
    // Test and example binaries live in target/{profile}/deps; the shim is
    // one or two levels up.
    if let Ok(exe) = std::env::current_exe() {
        let mut dir = exe.parent().map(|p| p.to_path_buf());
        for _ in 0..3 {
            if let Some(d) = dir {
                let cand = d.join("z3shim");
                if cand.is_file() {
                    return Some(vec![cand.to_string_lossy().into_owned()]);
                }
                dir = d.parent().map(|p| p.to_path_buf());
            } else {
                break;
            }
        }
    }
    None
}

/// External solver client. Owns transcript numbering; one subprocess per
/// query.
pub struct Solver {
    pub cfg: SolverCfg,
    queries: u64,
    /// Accumulated wall time spent inside solver subprocesses.
    pub solve_time: Duration,
}

impl Solver {
    pub fn new(cfg: SolverCfg) -> Self {
        Solver {
            cfg,
            queries: 0,
            solve_time: Duration::ZERO,
        }
    }

    /// Transcript id of the most recent query.
    pub fn last_transcript_id(&self) -> u64 {
        self.queries
    }

    pub fn queries_issued(&self) -> u64 {
        self.queries
    }

    /// Satisfiability of `f` over `ctx`. Only symbols free in `f` are
    /// declared; the returned model is padded to the full symbol space.
    pub fn check_sat(&mut self, ctx: &Ctx, f: &Formula) -> Result<SmtVerdict, SmtError> {
        let script = emit_script(ctx, f, self.cfg.timeout_ms);
        self.queries += 1;
        if let Some(dir) = &self.cfg.log_dir {
            let _ = std::fs::create_dir_all(dir);
            let _ = std::fs::write(dir.join(format!("{:06}.smt2", self.queries)), &script);
        }
        let start = Instant::now();
        let reply = self.run_subprocess(&script);
        self.solve_time += start.elapsed();
        parse_reply(ctx, &reply?)
    }

    /// Validity of `lhs ⟹ rhs`, checked as satisfiability of `lhs ∧ ¬rhs`.
    /// `Unsat` means the implication is valid.
    pub fn check_implication(
        &mut self,
        ctx: &Ctx,
        lhs: &Formula,
        rhs: &Formula,
    ) -> Result<SmtVerdict, SmtError> {
        let f = Formula::And(vec![lhs.clone(), Formula::not(rhs.clone())]);
        self.check_sat(ctx, &f)
    }

    fn run_subprocess(&self, script: &str) -> Result<String, SmtError> {
        let cmd_str = self.cfg.cmd.join(" ");
        let mut child = Command::new(&self.cfg.cmd[0])
            .args(&self.cfg.cmd[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| SmtError::Spawn {
                cmd: cmd_str,
                source,
            })?;
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(script.as_bytes())?;
        // stdin dropped here, signalling EOF to the solver.
        let deadline = Duration::from_millis(self.cfg.timeout_ms.saturating_mul(2) + 5000);
        wait_with_deadline(&mut child, deadline)
    }
}

fn wait_with_deadline(child: &mut Child, deadline: Duration) -> Result<String, SmtError> {
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    let start = Instant::now();
    loop {
        match child.try_wait()? {
            Some(_) => break,
            None => {
                if start.elapsed() > deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    let _ = reader.join();
                    return Ok("timeout".to_string());
                }
                std::thread::sleep(Duration::from_millis(2));
            }
        }
    }
    Ok(reader.join().unwrap_or_default())
}

fn smt_int(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", n.abs())
    } else {
        n.to_string()
    }
}

fn smt_poly(p: &Poly, names: &[String]) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    for (m, c) in p.terms() {
        let mut factors = Vec::new();
        for (i, &e) in m.exps().iter().enumerate() {
            for _ in 0..e {
                factors.push(names[i].clone());
            }
        }
        let s = if factors.is_empty() {
            smt_int(c)
        } else if c == &BigInt::from(1) {
            if factors.len() == 1 {
                factors[0].clone()
            } else {
                format!("(* {})", factors.join(" "))
            }
        } else {
            format!("(* {} {})", smt_int(c), factors.join(" "))
        };
        parts.push(s);
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn smt_formula(f: &Formula, names: &[String], out: &mut String) {
    match f {
        Formula::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Formula::Cmp(op, p) => {
            let ps = smt_poly(p, names);
            match op {
                Cmp::Eq => {
                    let _ = write!(out, "(= {} 0)", ps);
                }
                Cmp::Ne => {
                    let _ = write!(out, "(not (= {} 0))", ps);
                }
                Cmp::Lt => {
                    let _ = write!(out, "(< {} 0)", ps);
                }
                Cmp::Le => {
                    let _ = write!(out, "(<= {} 0)", ps);
                }
                Cmp::Gt => {
                    let _ = write!(out, "(> {} 0)", ps);
                }
                Cmp::Ge => {
                    let _ = write!(out, "(>= {} 0)", ps);
                }
            }
        }
        Formula::Not(inner) => {
            out.push_str("(not ");
            smt_formula(inner, names, out);
            out.push(')');
        }
        Formula::And(fs) => {
            if fs.is_empty() {
                out.push_str("true");
            } else if fs.len() == 1 {
                smt_formula(&fs[0], names, out);
            } else {
                out.push_str("(and");
                for f in fs {
                    out.push(' ');
                    smt_formula(f, names, out);
                }
                out.push(')');
            }
        }
        Formula::Or(fs) => {
            if fs.is_empty() {
                out.push_str("false");
            } else if fs.len() == 1 {
                smt_formula(&fs[0], names, out);
            } else {
                out.push_str("(or");
                for f in fs {
                    out.push(' ');
                    smt_formula(f, names, out);
                }
                out.push(')');
            }
        }
    }
}

/// Emit a complete one-shot script. Symbol ordering is the context's, so
/// identical formulas emit byte-identical scripts.
pub fn emit_script(ctx: &Ctx, f: &Formula, timeout_ms: u64) -> String {
    let mut used = vec![false; ctx.arity()];
    f.free_syms(&mut used);
    let mut s = String::new();
    s.push_str("(set-option :produce-models true)\n");
    let _ = writeln!(s, "(set-option :timeout {})", timeout_ms);
    s.push_str("(set-logic QF_NIA)\n");
    for (i, name) in ctx.names.iter().enumerate() {
        if used[i] {
            let _ = writeln!(s, "(declare-const {} Int)", name);
        }
    }
    s.push_str("(assert ");
    smt_formula(f, &ctx.names, &mut s);
    s.push_str(")\n(check-sat)\n(get-model)\n");
    s
}

fn parse_reply(ctx: &Ctx, reply: &str) -> Result<SmtVerdict, SmtError> {
    let mut verdict: Option<&str> = None;
    for tok in reply.split_whitespace() {
        match tok {
            "sat" => {
                verdict = Some("sat");
                break;
            }
            "unsat" => {
                verdict = Some("unsat");
                break;
            }
            "unknown" | "timeout" => {
                verdict = Some("unknown");
                break;
            }
            _ => {}
        }
    }
    match verdict {
        Some("unsat") => Ok(SmtVerdict::Unsat),
        Some("unknown") => {
            let reason = if reply.contains("timeout") || reply.contains("canceled") {
                UnknownReason::Timeout
            } else {
                UnknownReason::Incomplete
            };
            Ok(SmtVerdict::Unknown(reason))
        }
        Some("sat") => {
            let assignments = parse_model(reply)?;
            let mut model = vec![BigInt::zero(); ctx.arity()];
            for (i, name) in ctx.names.iter().enumerate() {
                if let Some(v) = assignments.get(name.as_str()) {
                    model[i] = v.clone();
                }
            }
            Ok(SmtVerdict::Sat(model))
        }
        _ => {
            if reply.trim().is_empty() {
                Ok(SmtVerdict::Unknown(UnknownReason::Incomplete))
            } else {
                Err(SmtError::Malformed(reply.chars().take(400).collect()))
            }
        }
    }
}

/// Extract `define-fun NAME () Int VALUE` entries from a get-model reply.
fn parse_model(reply: &str) -> Result<BTreeMap<String, BigInt>, SmtError> {
    let toks = tokenize(reply);
    let mut out = BTreeMap::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i] == "define-fun" {
            // define-fun NAME ( ) Int VALUE  — with VALUE either INT or ( - INT )
            if i + 4 >= toks.len() {
                return Err(SmtError::Malformed("truncated model entry".into()));
            }
            let name = toks[i + 1].clone();
            let mut j = i + 2;
            // skip "( )" parameter list and the sort
            if toks.get(j).map(String::as_str) == Some("(") {
                while j < toks.len() && toks[j] != ")" {
                    j += 1;
                }
                j += 1; // past ")"
            }
            j += 1; // past the sort
            let val = match toks.get(j).map(String::as_str) {
                Some("(") => {
                    // ( - INT )
                    let sign = toks.get(j + 1).map(String::as_str);
                    let num = toks.get(j + 2);
                    match (sign, num) {
                        (Some("-"), Some(n)) => {
                            let v: BigInt = n.parse().map_err(|_| {
                                SmtError::Malformed(format!("bad model integer `{}`", n))
                            })?;
                            j += 4;
                            -v
                        }
                        _ => {
                            return Err(SmtError::Malformed(
                                "unsupported model value form".into(),
                            ))
                        }
                    }
                }
                Some(tok) => {
                    let v: BigInt = tok
                        .parse()
                        .map_err(|_| SmtError::Malformed(format!("bad model integer `{}`", tok)))?;
                    j += 1;
                    v
                }
                None => return Err(SmtError::Malformed("truncated model value".into())),
            };
            out.insert(name, val);
            i = j;
        } else {
            i += 1;
        }
    }
    Ok(out)
}

fn tokenize(s: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(c.to_string());
            }
            '|' => {
                // quoted symbol
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                let mut name = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    name.push(c);
                }
                toks.push(name);
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

/// Concrete-state blocking clause: `⋀ var(i) = v_i` over the in-scope
/// variables, as used for cex blocking in verification conditions.
pub fn encode_concrete_state(ctx: &Ctx, s: &ConcreteState) -> Formula {
    let conj = s
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Formula::cmp(
                Cmp::Eq,
                Poly::var(ctx.arity(), ctx.var_sym(i)),
                Poly::constant(ctx.arity(), v.clone()),
            )
        })
        .collect();
    Formula::And(conj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_is_deterministic() {
        let ctx = Ctx {
            n_inputs: 1,
            names: vec!["X1".into(), "x".into()],
        };
        let f = Formula::cmp(Cmp::Le, Poly::var(2, 1), Poly::var(2, 0));
        let a = emit_script(&ctx, &f, 1000);
        let b = emit_script(&ctx, &f, 1000);
        assert_eq!(a, b);
        assert!(a.contains("(declare-const X1 Int)"));
        assert!(a.contains("(<= (+ x (* (- 1) X1)) 0)"), "{}", a);
    }

    #[test]
    fn model_parsing_handles_negatives() {
        let reply = "sat\n(model\n  (define-fun x () Int (- 7))\n  (define-fun X1 () Int 3)\n)";
        let m = parse_model(reply).unwrap();
        assert_eq!(m["x"], BigInt::from(-7));
        assert_eq!(m["X1"], BigInt::from(3));
    }
}
