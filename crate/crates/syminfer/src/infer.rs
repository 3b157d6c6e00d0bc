//! Candidate generation from concrete states: monomial term sets, equality
//! templates solved by exact rational nullspace computation, and octagonal
//! bound extraction.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lang::{Cmp, ConcreteState};
use crate::poly::{Monomial, Poly};
use crate::smt::{Ctx, Formula};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum InferError {
    #[error(
        "term set would have {count} terms (cap {cap}); lower the degree or the variable count"
    )]
    TermCap { count: usize, cap: usize },
}

/// Ordered monomial term set over the in-scope variables, graded-lex.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TermSet {
    pub nvars: usize,
    pub terms: Vec<Monomial>,
}

/// All monomials of degree ≤ `d` over `nvars` variables, in graded-lex
/// order; C(nvars+d, d) terms. Refuses to build sets larger than `cap`.
pub fn create_terms(nvars: usize, d: u32, cap: usize) -> Result<TermSet, InferError> {
    assert!(d >= 1);
    let count = binomial(nvars + d as usize, d as usize);
    if count > cap {
        return Err(InferError::TermCap { count, cap });
    }
    let mut terms = Vec::with_capacity(count);
    let mut exps = vec![0u32; nvars];
    gen_exps(&mut terms, &mut exps, 0, d);
    terms.sort();
    Ok(TermSet { nvars, terms })
}

/// Like [`create_terms`], but exponents are nonzero only on the `allowed`
/// variables (used when inference is restricted, e.g. to inputs plus a loop
/// counter). The monomials still live in the full `nvars` space.
pub fn create_terms_over(
    nvars: usize,
    allowed: &[usize],
    d: u32,
    cap: usize,
) -> Result<TermSet, InferError> {
    assert!(d >= 1);
    let count = binomial(allowed.len() + d as usize, d as usize);
    if count > cap {
        return Err(InferError::TermCap { count, cap });
    }
    let mut small = Vec::with_capacity(count);
    let mut exps = vec![0u32; allowed.len()];
    gen_exps(&mut small, &mut exps, 0, d);
    let mut terms: Vec<Monomial> = small
        .into_iter()
        .map(|m| {
            let mut full = vec![0u32; nvars];
            for (j, &v) in allowed.iter().enumerate() {
                full[v] = m.exps()[j];
            }
            Monomial::from_exps(full)
        })
        .collect();
    terms.sort();
    Ok(TermSet { nvars, terms })
}

fn gen_exps(out: &mut Vec<Monomial>, exps: &mut Vec<u32>, i: usize, budget: u32) {
    if i == exps.len() {
        out.push(Monomial::from_exps(exps.clone()));
        return;
    }
    for e in 0..=budget {
        exps[i] = e;
        gen_exps(out, exps, i + 1, budget - e);
    }
    exps[i] = 0;
}

fn binomial(n: usize, k: usize) -> usize {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    let v = num / den;
    v.to_string().parse().unwrap_or(usize::MAX)
}

/// An equality invariant `Σ cᵢ·tᵢ = 0` in canonical form: integer
/// coefficients with gcd 1 and positive leading (highest-monomial-first)
/// coefficient.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct EqInvariant {
    pub nvars: usize,
    /// Pairs (term, coefficient), nonzero coefficients only, grlex order.
    pub terms: Vec<(Monomial, BigInt)>,
}

impl EqInvariant {
    /// Build from a coefficient vector aligned with a TermSet, canonicalizing
    /// scale and sign. Returns None for the all-zero vector.
    pub fn from_coeffs(ts: &TermSet, coeffs: &[BigInt]) -> Option<EqInvariant> {
        let mut terms: Vec<(Monomial, BigInt)> = ts
            .terms
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        if terms.is_empty() {
            return None;
        }
        let mut g = BigInt::zero();
        for (_, c) in &terms {
            g = g.gcd(c);
        }
        let leading_neg = terms.last().map(|(_, c)| c.is_negative()).unwrap_or(false);
        if leading_neg {
            g = -g;
        }
        for (_, c) in &mut terms {
            *c = &*c / &g;
        }
        Some(EqInvariant {
            nvars: ts.nvars,
            terms,
        })
    }

    /// Left-hand-side polynomial over the program variables.
    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            p = p.add(&Poly::monomial(self.nvars, m.clone(), c.clone()));
        }
        p
    }

    /// Exact value of the left-hand side on a concrete state.
    pub fn eval(&self, values: &[BigInt]) -> BigInt {
        self.to_poly().eval(values)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn render(&self, names: &[String]) -> String {
        format!("{} == 0", self.to_poly().render(names))
    }

    /// `poly = 0` over the full symbol space.
    pub fn to_formula(&self, ctx: &Ctx) -> Formula {
        Formula::Cmp(Cmp::Eq, ctx.lift_var_poly(&self.to_poly()))
    }
}

/// Infer all equalities `Σ cᵢ·tᵢ = 0` that hold exactly on every state:
/// instantiate the |states|×|terms| valuation matrix and compute an exact
/// rational nullspace basis. Duplicate states collapse to one row.
pub fn infer_eqts(ts: &TermSet, states: &[ConcreteState]) -> Vec<EqInvariant> {
    assert!(!states.is_empty());
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut seen: BTreeSet<Vec<BigInt>> = BTreeSet::new();
    for s in states {
        assert_eq!(s.values.len(), ts.nvars, "state arity mismatch");
        if !seen.insert(s.values.clone()) {
            continue;
        }
        rows.push(
            ts.terms
                .iter()
                .map(|m| BigRational::from(m.eval(&s.values)))
                .collect(),
        );
    }
    let basis = nullspace(&rows, ts.terms.len());
    basis
        .iter()
        .filter_map(|v| {
            let ints = clear_denominators(v);
            EqInvariant::from_coeffs(ts, &ints)
        })
        .collect()
}

/// Nullspace basis of the row matrix, one vector per free column of the
/// reduced row echelon form. Deterministic for a given row order.
pub fn nullspace(rows: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let nrows = m.len();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        // Find a pivot in column c at/below row r.
        let mut pr = None;
        for i in r..nrows {
            if !m[i][c].is_zero() {
                pr = Some(i);
                break;
            }
        }
        let pr = match pr {
            Some(i) => i,
            None => continue,
        };
        m.swap(r, pr);
        let inv = m[r][c].recip();
        for x in &mut m[r] {
            *x *= &inv;
        }
        for i in 0..nrows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..ncols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    let pivot_set: BTreeSet<usize> = pivot_cols.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..ncols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![BigRational::zero(); ncols];
        v[free] = BigRational::one();
        for (ri, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[ri][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Scale a rational vector to coprime integers.
pub fn clear_denominators(v: &[BigRational]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    v.iter()
        .map(|x| x.numer() * (&lcm / x.denom()))
        .collect()
}

/// One octagonal term: ±v, v−w, v+w, or −v−w over canonical variables.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum OctTerm {
    /// +v
    Pos(usize),
    /// −v
    Neg(usize),
    /// v − w (v < w) and w − v encoded by order of the fields
    Diff(usize, usize),
    /// v + w (v < w)
    Sum(usize, usize),
    /// −v − w (v < w)
    NegSum(usize, usize),
}

impl OctTerm {
    /// All oct terms over `nvars` variables in deterministic order:
    /// 2·n + 4·C(n,2) of them.
    pub fn enumerate(nvars: usize) -> Vec<OctTerm> {
        let mut out = Vec::new();
        for v in 0..nvars {
            out.push(OctTerm::Pos(v));
            out.push(OctTerm::Neg(v));
        }
        for v in 0..nvars {
            for w in v + 1..nvars {
                out.push(OctTerm::Diff(v, w));
                out.push(OctTerm::Diff(w, v));
                out.push(OctTerm::Sum(v, w));
                out.push(OctTerm::NegSum(v, w));
            }
        }
        out
    }

    pub fn eval(&self, values: &[BigInt]) -> BigInt {
        match *self {
            OctTerm::Pos(v) => values[v].clone(),
            OctTerm::Neg(v) => -&values[v],
            OctTerm::Diff(v, w) => &values[v] - &values[w],
            OctTerm::Sum(v, w) => &values[v] + &values[w],
            OctTerm::NegSum(v, w) => -(&values[v] + &values[w]),
        }
    }

    /// Polynomial over the program variables (arity `nvars`).
    pub fn to_poly(&self, nvars: usize) -> Poly {
        let var = |i| Poly::var(nvars, i);
        match *self {
            OctTerm::Pos(v) => var(v),
            OctTerm::Neg(v) => var(v).neg(),
            OctTerm::Diff(v, w) => var(v).sub(&var(w)),
            OctTerm::Sum(v, w) => var(v).add(&var(w)),
            OctTerm::NegSum(v, w) => var(v).add(&var(w)).neg(),
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        match *self {
            OctTerm::Pos(v) => names[v].clone(),
            OctTerm::Neg(v) => format!("-{}", names[v]),
            OctTerm::Diff(v, w) => format!("{} - {}", names[v], names[w]),
            OctTerm::Sum(v, w) => format!("{} + {}", names[v], names[w]),
            OctTerm::NegSum(v, w) => format!("-{} - {}", names[v], names[w]),
        }
    }
}

/// `oct ≤ bound`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Inequality {
    pub term: OctTerm,
    pub bound: BigInt,
}

impl Inequality {
    pub fn render(&self, names: &[String]) -> String {
        format!("{} <= {}", self.term.render(names), self.bound)
    }

    pub fn holds(&self, values: &[BigInt]) -> bool {
        self.term.eval(values) <= self.bound
    }

    /// `term − bound ≤ 0` over the full symbol space.
    pub fn to_formula(&self, ctx: &Ctx, nvars: usize) -> Formula {
        let p = ctx
            .lift_var_poly(&self.term.to_poly(nvars))
            .sub(&Poly::constant(ctx.arity(), self.bound.clone()));
        Formula::Cmp(Cmp::Le, p)
    }
}

/// For each oct term, the max of its value over the states: the tightest
/// octagonal bounds consistent with the sample.
pub fn oct_bounds_from_states(states: &[ConcreteState], nvars: usize) -> Vec<Inequality> {
    assert!(!states.is_empty());
    OctTerm::enumerate(nvars)
        .into_iter()
        .map(|term| {
            let bound = states
                .iter()
                .map(|s| term.eval(&s.values))
                .max()
                .expect("nonempty states");
            Inequality { term, bound }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(vals: &[i64]) -> ConcreteState {
        ConcreteState {
            loc: "L".into(),
            values: vals.iter().map(|&v| BigInt::from(v)).collect(),
        }
    }

    #[test]
    fn term_counts() {
        assert_eq!(create_terms(3, 2, 500).unwrap().terms.len(), 10);
        assert_eq!(create_terms(1, 1, 500).unwrap().terms.len(), 2);
        assert_eq!(create_terms(4, 4, 500).unwrap().terms.len(), 70);
        assert_eq!(create_terms(5, 2, 500).unwrap().terms.len(), 21);
        assert!(matches!(
            create_terms(12, 5, 500),
            Err(InferError::TermCap { .. })
        ));
    }

    #[test]
    fn planted_relation_recovered() {
        // states satisfying x = y exactly
        let ts = create_terms(2, 1, 500).unwrap();
        let states = vec![st(&[1, 1]), st(&[2, 2]), st(&[-3, -3])];
        let eqs = infer_eqts(&ts, &states);
        let names = vec!["x".to_string(), "y".to_string()];
        assert!(eqs.iter().any(|e| e.render(&names) == "x - y == 0"));
        for e in &eqs {
            for s in &states {
                assert!(e.eval(&s.values).is_zero());
            }
        }
    }

    #[test]
    fn rank_nullity_bound() {
        let ts = create_terms(3, 2, 500).unwrap();
        let states = vec![st(&[1, 2, 3]), st(&[4, 5, 6]), st(&[7, 8, 10])];
        let eqs = infer_eqts(&ts, &states);
        assert!(eqs.len() >= ts.terms.len() - states.len());
    }

    #[test]
    fn oct_bounds_two_points() {
        let states = vec![st(&[1, 2]), st(&[3, 1])];
        let ineqs = oct_bounds_from_states(&states, 2);
        let names = vec!["x".to_string(), "y".to_string()];
        let rendered: Vec<String> = ineqs.iter().map(|i| i.render(&names)).collect();
        let expect = [
            "x <= 3",
            "-x <= -1",
            "y <= 2",
            "-y <= -1",
            "x - y <= 2",
            "y - x <= 1",
            "x + y <= 4",
            "-x - y <= -3",
        ];
        assert_eq!(rendered.len(), 8);
        for e in expect {
            assert!(rendered.contains(&e.to_string()), "missing {}", e);
        }
        // Tightness: each bound attained by some state.
        for i in &ineqs {
            assert!(states.iter().any(|s| i.term.eval(&s.values) == i.bound));
        }
    }

    #[test]
    fn canonical_form() {
        let ts = create_terms(2, 1, 500).unwrap();
        // -2x + 2y = 0 canonicalizes to gcd 1 with the leading (x)
        // coefficient positive: x - y = 0.
        let e = EqInvariant::from_coeffs(
            &ts,
            &[BigInt::zero(), BigInt::from(-2), BigInt::from(2)],
        )
        .unwrap();
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(e.render(&names), "x - y == 0");
    }
}
