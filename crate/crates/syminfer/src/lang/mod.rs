//! The mini imperative integer language: parsing, validation, pretty
//! printing, and concrete interpretation.
//!
//! Programs are written in `.mvl` syntax:
//!
//! ```text
//! fn idiv(x1: int, x2: int) {
//!   assume(x1 >= 0 && x2 >= 1);
//!   int y1 = 0, y2 = 0, y3 = x1;
//!   @L;
//!   while (y3 != 0) {
//!     if (y2 + 1 == x2) { y1 = y1 + 1; y2 = 0; y3 = y3 - 1; }
//!     else { y2 = y2 + 1; y3 = y3 - 1; }
//!   }
//! }
//! ```
//!
//! A location marker `@L;` records the values of in-scope variables each time
//! control reaches it. A marker written immediately before a `while` loop
//! marks the loop head: the state is recorded at every evaluation of the loop
//! test, including the final failing one.

pub mod ast;
mod interp;
mod parser;
mod printer;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use thiserror::Error;

pub use ast::{AExpr, BExpr, Cmp, Stmt};
pub use interp::{interpret, InterpRun};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("duplicate location label `{0}`")]
    DuplicateLocation(String),
    #[error("variable `{0}` used before declaration")]
    UseBeforeDecl(String),
    #[error("variable `{0}` declared twice")]
    Redeclaration(String),
    #[error("unknown location label `{0}`")]
    UnknownLocation(String),
}

/// Lowered statement form with loop-head markers attached to their loops.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Step {
    Assume(BExpr),
    Init(usize, Option<AExpr>),
    Assign(usize, AExpr),
    If(BExpr, Vec<Step>, Vec<Step>),
    While {
        mark: Option<String>,
        cond: BExpr,
        body: Vec<Step>,
    },
    Mark(String),
}

/// A concrete L-state: the values of the variables in scope at `loc`, in
/// canonical order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct ConcreteState {
    pub loc: String,
    pub values: Vec<BigInt>,
}

/// A parsed, validated program.
///
/// The canonical variable ordering is parameters first, then locals in
/// textual declaration order. The variables in scope at a location form a
/// prefix of that ordering.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Program {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    vars: Vec<String>,
    var_index: BTreeMap<String, usize>,
    locations: Vec<String>,
    scope_len: BTreeMap<String, usize>,
    steps: Vec<Step>,
}

impl Program {
    pub fn new(name: String, params: Vec<String>, body: Vec<Stmt>) -> Result<Self, LangError> {
        let mut vars = Vec::new();
        let mut var_index = BTreeMap::new();
        for p in &params {
            if var_index.insert(p.clone(), vars.len()).is_some() {
                return Err(LangError::Redeclaration(p.clone()));
            }
            vars.push(p.clone());
        }
        let mut prog = Program {
            name,
            params,
            body,
            vars,
            var_index,
            locations: Vec::new(),
            scope_len: BTreeMap::new(),
            steps: Vec::new(),
        };
        let body = prog.body.clone();
        prog.steps = prog.lower(&body)?;
        Ok(prog)
    }

    /// Canonical variable ordering: params first, then locals textually.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    /// Number of in-scope variables at `loc`; they are `vars()[..n]`.
    pub fn scope_len(&self, loc: &str) -> Result<usize, LangError> {
        self.scope_len
            .get(loc)
            .copied()
            .ok_or_else(|| LangError::UnknownLocation(loc.to_string()))
    }

    pub fn scope_vars(&self, loc: &str) -> Result<&[String], LangError> {
        Ok(&self.vars[..self.scope_len(loc)?])
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    fn check_aexpr(&self, e: &AExpr) -> Result<(), LangError> {
        match e {
            AExpr::Var(v) => {
                if self.var_index.contains_key(v) {
                    Ok(())
                } else {
                    Err(LangError::UseBeforeDecl(v.clone()))
                }
            }
            AExpr::Const(_) => Ok(()),
            AExpr::Neg(a) => self.check_aexpr(a),
            AExpr::Add(a, b) | AExpr::Sub(a, b) | AExpr::Mul(a, b) => {
                self.check_aexpr(a)?;
                self.check_aexpr(b)
            }
        }
    }

    fn check_bexpr(&self, e: &BExpr) -> Result<(), LangError> {
        match e {
            BExpr::Lit(_) => Ok(()),
            BExpr::Cmp(_, a, b) => {
                self.check_aexpr(a)?;
                self.check_aexpr(b)
            }
            BExpr::Not(b) => self.check_bexpr(b),
            BExpr::And(a, b) | BExpr::Or(a, b) => {
                self.check_bexpr(a)?;
                self.check_bexpr(b)
            }
        }
    }

    fn record_mark(&mut self, label: &str) -> Result<(), LangError> {
        if self.scope_len.contains_key(label) {
            return Err(LangError::DuplicateLocation(label.to_string()));
        }
        self.locations.push(label.to_string());
        self.scope_len.insert(label.to_string(), self.vars.len());
        Ok(())
    }

    /// Validates declarations/uses in textual order and resolves marker
    /// adjacency: `@L; while (..) {..}` becomes a loop-head marker.
    fn lower(&mut self, stmts: &[Stmt]) -> Result<Vec<Step>, LangError> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < stmts.len() {
            match &stmts[i] {
                Stmt::Assume(b) => {
                    self.check_bexpr(b)?;
                    out.push(Step::Assume(b.clone()));
                }
                Stmt::Decl(ds) => {
                    for (v, init) in ds {
                        if let Some(e) = init {
                            self.check_aexpr(e)?;
                        }
                        if self.var_index.contains_key(v) {
                            return Err(LangError::Redeclaration(v.clone()));
                        }
                        let idx = self.vars.len();
                        self.var_index.insert(v.clone(), idx);
                        self.vars.push(v.clone());
                        out.push(Step::Init(idx, init.clone()));
                    }
                }
                Stmt::Assign(v, e) => {
                    self.check_aexpr(e)?;
                    let idx = self
                        .var_index
                        .get(v)
                        .copied()
                        .ok_or_else(|| LangError::UseBeforeDecl(v.clone()))?;
                    out.push(Step::Assign(idx, e.clone()));
                }
                Stmt::While(b, body) => {
                    self.check_bexpr(b)?;
                    let body = self.lower(body)?;
                    out.push(Step::While { mark: None, cond: b.clone(), body });
                }
                Stmt::If(b, then, els) => {
                    self.check_bexpr(b)?;
                    let then = self.lower(then)?;
                    let els = self.lower(els)?;
                    out.push(Step::If(b.clone(), then, els));
                }
                Stmt::LocMark(l) => {
                    self.record_mark(l)?;
                    if let Some(Stmt::While(b, body)) = stmts.get(i + 1) {
                        self.check_bexpr(b)?;
                        let body = self.lower(body)?;
                        out.push(Step::While {
                            mark: Some(l.clone()),
                            cond: b.clone(),
                            body,
                        });
                        i += 2;
                        continue;
                    }
                    out.push(Step::Mark(l.clone()));
                }
            }
            i += 1;
        }
        Ok(out)
    }
}

/// Parse a `.mvl` source into a validated [`Program`].
pub fn parse(text: &str) -> Result<Program, LangError> {
    parser::Parser::new(text)?.program()
}

/// Parse a single boolean expression, as used in expected-invariant sidecar
/// files.
pub fn parse_bexpr(text: &str) -> Result<BExpr, LangError> {
    let mut p = parser::Parser::new(text)?;
    p.bexpr()
}

/// Canonical source text; `parse(pretty_print(p))` is structurally equal to
/// `p`.
pub fn pretty_print(p: &Program) -> String {
    printer::print(p)
}
