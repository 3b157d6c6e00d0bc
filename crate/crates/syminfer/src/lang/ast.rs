//! AST for the mini integer imperative language.

use num_bigint::BigInt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn eval(self, l: &BigInt, r: &BigInt) -> bool {
        match self {
            Cmp::Eq => l == r,
            Cmp::Ne => l != r,
            Cmp::Lt => l < r,
            Cmp::Le => l <= r,
            Cmp::Gt => l > r,
            Cmp::Ge => l >= r,
        }
    }

    pub fn negate(self) -> Cmp {
        match self {
            Cmp::Eq => Cmp::Ne,
            Cmp::Ne => Cmp::Eq,
            Cmp::Lt => Cmp::Ge,
            Cmp::Le => Cmp::Gt,
            Cmp::Gt => Cmp::Le,
            Cmp::Ge => Cmp::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AExpr {
    Var(String),
    Const(BigInt),
    Neg(Box<AExpr>),
    Add(Box<AExpr>, Box<AExpr>),
    Sub(Box<AExpr>, Box<AExpr>),
    Mul(Box<AExpr>, Box<AExpr>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BExpr {
    Lit(bool),
    Cmp(Cmp, AExpr, AExpr),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Stmt {
    Assume(BExpr),
    /// `int a = e, b;` — declarations with optional initializers.
    Decl(Vec<(String, Option<AExpr>)>),
    Assign(String, AExpr),
    While(BExpr, Vec<Stmt>),
    If(BExpr, Vec<Stmt>, Vec<Stmt>),
    /// `@L;` — a location marker; no runtime effect beyond state recording.
    LocMark(String),
}
