//! Exact multivariate polynomials with arbitrary-precision integer
//! coefficients.
//!
//! Polynomials are kept in expanded normal form (a map from monomial to
//! nonzero coefficient), so structural equality is semantic equality. This is
//! the shared representation for symbolic values, candidate invariants, and
//! the complexity-bound solver.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exponent vector over a fixed set of variables. `exps[i]` is the exponent
/// of variable `i`; trailing entries may be zero.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn unit(arity: usize) -> Self {
        Monomial { exps: vec![0; arity] }
    }

    pub fn var(arity: usize, idx: usize) -> Self {
        let mut exps = vec![0; arity];
        exps[idx] = 1;
        Monomial { exps }
    }

    pub fn from_exps(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.exps.len(), other.exps.len());
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn eval(&self, point: &[BigInt]) -> BigInt {
        let mut acc = BigInt::one();
        for (i, &e) in self.exps.iter().enumerate() {
            for _ in 0..e {
                acc *= &point[i];
            }
        }
        acc
    }

    pub fn eval_rat(&self, point: &[BigRational]) -> BigRational {
        let mut acc = BigRational::one();
        for (i, &e) in self.exps.iter().enumerate() {
            for _ in 0..e {
                acc *= &point[i];
            }
        }
        acc
    }

    /// Render with the given variable names, e.g. `x*y^2`. The unit monomial
    /// renders as `1`.
    pub fn render(&self, names: &[String]) -> String {
        let mut parts = Vec::new();
        for (i, &e) in self.exps.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(names[i].clone()),
                _ => parts.push(format!("{}^{}", names[i], e)),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

/// Graded lexicographic order: lower total degree first, ties broken
/// lexicographically on the exponent vector.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in expanded normal form. The zero polynomial has an empty
/// term map.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    arity: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl Poly {
    pub fn zero(arity: usize) -> Self {
        Poly { arity, terms: BTreeMap::new() }
    }

    pub fn constant(arity: usize, c: impl Into<BigInt>) -> Self {
        let c: BigInt = c.into();
        let mut p = Poly::zero(arity);
        if !c.is_zero() {
            p.terms.insert(Monomial::unit(arity), c);
        }
        p
    }

    pub fn var(arity: usize, idx: usize) -> Self {
        assert!(idx < arity);
        let mut p = Poly::zero(arity);
        p.terms.insert(Monomial::var(arity, idx), BigInt::one());
        p
    }

    pub fn monomial(arity: usize, m: Monomial, c: BigInt) -> Self {
        let mut p = Poly::zero(arity);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Constant value if the polynomial is a constant, else None.
    pub fn as_constant(&self) -> Option<BigInt> {
        if self.terms.is_empty() {
            return Some(BigInt::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_unit() {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Highest exponent of variable `idx` across all terms.
    pub fn degree_in(&self, idx: usize) -> u32 {
        self.terms.keys().map(|m| m.exps()[idx]).max().unwrap_or(0)
    }

    pub fn mentions(&self, idx: usize) -> bool {
        self.terms.keys().any(|m| m.exps()[idx] > 0)
    }

    fn insert(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            arity: self.arity,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = Poly::zero(self.arity);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.arity);
        }
        Poly {
            arity: self.arity,
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(self.arity, 1);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, point: &[BigInt]) -> BigInt {
        assert_eq!(point.len(), self.arity);
        let mut acc = BigInt::zero();
        for (m, c) in &self.terms {
            acc += c * m.eval(point);
        }
        acc
    }

    pub fn eval_rat(&self, point: &[BigRational]) -> BigRational {
        assert_eq!(point.len(), self.arity);
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            acc += BigRational::from(c.clone()) * m.eval_rat(point);
        }
        acc
    }

    /// Substitute variable `idx` by `repl` (same arity).
    pub fn subst(&self, idx: usize, repl: &Poly) -> Poly {
        debug_assert_eq!(self.arity, repl.arity);
        let mut out = Poly::zero(self.arity);
        for (m, c) in &self.terms {
            let e = m.exps()[idx];
            let mut rest = m.exps().to_vec();
            rest[idx] = 0;
            let base = Poly::monomial(self.arity, Monomial::from_exps(rest), c.clone());
            out = out.add(&base.mul(&repl.pow(e)));
        }
        out
    }

    /// View as a univariate polynomial in variable `t`: returns coefficients
    /// `coeffs[j]` (polynomials with the exponent of `t` zeroed) such that
    /// `self = sum coeffs[j] * t^j`.
    pub fn as_univariate_in(&self, t: usize) -> Vec<Poly> {
        let d = self.degree_in(t) as usize;
        let mut coeffs = vec![Poly::zero(self.arity); d + 1];
        for (m, c) in &self.terms {
            let e = m.exps()[t] as usize;
            let mut rest = m.exps().to_vec();
            rest[t] = 0;
            coeffs[e].insert(Monomial::from_exps(rest), c.clone());
        }
        coeffs
    }

    /// Rebuild from univariate coefficients in `t` (inverse of
    /// `as_univariate_in` for coefficients not mentioning `t`).
    pub fn from_univariate_in(arity: usize, t: usize, coeffs: &[Poly]) -> Poly {
        let tv = Poly::var(arity, t);
        let mut out = Poly::zero(arity);
        for (j, c) in coeffs.iter().enumerate() {
            out = out.add(&c.mul(&tv.pow(j as u32)));
        }
        out
    }

    /// Render with the given variable names, e.g. `2*x*y - 3`.
    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        // Highest monomial first reads more naturally.
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            if m.is_unit() {
                let _ = write!(out, "{}", abs);
            } else if abs.is_one() {
                out.push_str(&m.render(names));
            } else {
                let _ = write!(out, "{}*{}", abs, m.render(names));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{}", i)).collect()
    }

    #[test]
    fn grlex_ordering() {
        let one = Monomial::unit(2);
        let x = Monomial::var(2, 0);
        let y = Monomial::var(2, 1);
        let xy = x.mul(&y);
        let x2 = x.mul(&x);
        // Degree first; ties broken lexicographically with earlier
        // variables ranking higher (x > y, x² > xy).
        assert!(one < y && y < x && x < xy && xy < x2);
    }

    #[test]
    fn normal_form_equality() {
        // (x + y)^2 == x^2 + 2xy + y^2
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let lhs = x.add(&y).pow(2);
        let rhs = x
            .mul(&x)
            .add(&x.mul(&y).scale(&BigInt::from(2)))
            .add(&y.mul(&y));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn subst_and_eval() {
        // p = t^2 - x*t, subst t := x gives 0
        let t = Poly::var(2, 0);
        let x = Poly::var(2, 1);
        let p = t.mul(&t).sub(&x.mul(&t));
        assert!(p.subst(0, &x).is_zero());
        let v = p.eval(&[BigInt::from(5), BigInt::from(3)]);
        assert_eq!(v, BigInt::from(10));
    }

    #[test]
    fn univariate_round_trip() {
        let t = Poly::var(3, 2);
        let x = Poly::var(3, 0);
        let p = t.pow(2).mul(&x).add(&t.scale(&BigInt::from(-3))).add(&x);
        let coeffs = p.as_univariate_in(2);
        assert_eq!(coeffs.len(), 3);
        let back = Poly::from_univariate_in(3, 2, &coeffs);
        assert_eq!(p, back);
    }

    #[test]
    fn render_signs() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&y).scale(&BigInt::from(2)).sub(&Poly::constant(2, 3));
        assert_eq!(p.render(&names(2)), "2*v0*v1 - 3");
    }
}
