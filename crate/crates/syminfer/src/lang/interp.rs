//! Concrete interpreter over arbitrary-precision integers.

use num_bigint::BigInt;
use num_traits::Zero;

use super::ast::{AExpr, BExpr};
use super::{ConcreteState, Program, Step};

/// Result of one interpreter run.
#[derive(Clone, Debug)]
pub struct InterpRun {
    /// Every state observed at the target location, in execution order.
    /// Empty when an `assume` failed.
    pub states: Vec<ConcreteState>,
    /// True when the fuel budget ran out before the program finished.
    pub truncated: bool,
    /// True when an `assume` was unsatisfied by the inputs.
    pub assume_failed: bool,
}

struct Interp<'a> {
    prog: &'a Program,
    loc: &'a str,
    scope: usize,
    env: Vec<Option<BigInt>>,
    fuel: u64,
    states: Vec<ConcreteState>,
}

enum Stop {
    AssumeFailed,
    OutOfFuel,
}

impl<'a> Interp<'a> {
    fn aexpr(&self, e: &AExpr) -> BigInt {
        match e {
            AExpr::Var(v) => {
                let idx = self.prog.var_index(v).expect("validated");
                // Uninitialized variables read as 0 concretely; symbolic
                // execution tracks them as undefined instead.
                self.env[idx].clone().unwrap_or_else(BigInt::zero)
            }
            AExpr::Const(n) => n.clone(),
            AExpr::Neg(a) => -self.aexpr(a),
            AExpr::Add(a, b) => self.aexpr(a) + self.aexpr(b),
            AExpr::Sub(a, b) => self.aexpr(a) - self.aexpr(b),
            AExpr::Mul(a, b) => self.aexpr(a) * self.aexpr(b),
        }
    }

    fn bexpr(&self, e: &BExpr) -> bool {
        match e {
            BExpr::Lit(v) => *v,
            BExpr::Cmp(op, l, r) => op.eval(&self.aexpr(l), &self.aexpr(r)),
            BExpr::Not(b) => !self.bexpr(b),
            BExpr::And(a, b) => self.bexpr(a) && self.bexpr(b),
            BExpr::Or(a, b) => self.bexpr(a) || self.bexpr(b),
        }
    }

    fn charge(&mut self) -> Result<(), Stop> {
        if self.fuel == 0 {
            return Err(Stop::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn record(&mut self, label: &str) {
        if label == self.loc {
            let values = self.env[..self.scope]
                .iter()
                .map(|v| v.clone().unwrap_or_else(BigInt::zero))
                .collect();
            self.states.push(ConcreteState {
                loc: label.to_string(),
                values,
            });
        }
    }

    fn run(&mut self, steps: &[Step]) -> Result<(), Stop> {
        for step in steps {
            match step {
                Step::Assume(b) => {
                    self.charge()?;
                    if !self.bexpr(b) {
                        return Err(Stop::AssumeFailed);
                    }
                }
                Step::Init(idx, init) => {
                    self.charge()?;
                    self.env[*idx] = init.as_ref().map(|e| self.aexpr(e));
                }
                Step::Assign(idx, e) => {
                    self.charge()?;
                    self.env[*idx] = Some(self.aexpr(e));
                }
                Step::If(b, then, els) => {
                    self.charge()?;
                    if self.bexpr(b) {
                        self.run(then)?;
                    } else {
                        self.run(els)?;
                    }
                }
                Step::While { mark, cond, body } => loop {
                    self.charge()?;
                    if let Some(l) = mark {
                        self.record(l);
                    }
                    if !self.bexpr(cond) {
                        break;
                    }
                    self.run(body)?;
                },
                Step::Mark(l) => {
                    self.charge()?;
                    self.record(l);
                }
            }
        }
        Ok(())
    }
}

/// Run `p` on `inputs` and collect every state observed at `loc`. `fuel`
/// bounds the total number of statements executed.
pub fn interpret(p: &Program, inputs: &[BigInt], loc: &str, fuel: u64) -> InterpRun {
    assert_eq!(inputs.len(), p.params.len(), "input arity mismatch");
    let scope = p.scope_len(loc).expect("known location");
    let mut env: Vec<Option<BigInt>> = vec![None; p.vars().len()];
    for (i, v) in inputs.iter().enumerate() {
        env[i] = Some(v.clone());
    }
    let mut interp = Interp {
        prog: p,
        loc,
        scope,
        env,
        fuel,
        states: Vec::new(),
    };
    match interp.run(p.steps()) {
        Ok(()) => InterpRun {
            states: interp.states,
            truncated: false,
            assume_failed: false,
        },
        Err(Stop::AssumeFailed) => InterpRun {
            states: Vec::new(),
            truncated: false,
            assume_failed: true,
        },
        Err(Stop::OutOfFuel) => InterpRun {
            states: interp.states,
            truncated: true,
            assume_failed: false,
        },
    }
}
