//! Runtime-complexity post-processing: solve an equality invariant for a
//! designated loop-counter variable, recovering the disjunctive closed-form
//! bounds as exact polynomial roots.
//!
//! Factorization is sample-interpolate-verify: specialize the other
//! variables at many integer points, read off integer roots of each
//! specialized univariate polynomial, interpolate candidate root polynomials
//! of degree ≤ 2, and confirm candidates by exact synthetic division. Roots
//! are therefore sound (the division remainder must vanish identically);
//! completeness is limited to linear-in-counter factors with degree-≤2
//! coefficients, which is flagged via the residual.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::infer::EqInvariant;
use crate::lang::{Cmp, ConcreteState};
use crate::poly::{Monomial, Poly};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("the equality does not mention the counter variable")]
    NoCounter,
}

/// A simple comparison guard over the input variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Guard {
    /// `var ⋈ 0`
    VarZero(Cmp, usize),
    /// `var ⋈ var`
    VarVar(Cmp, usize, usize),
    /// Negation of the previous root's guard (decision-list tail).
    Negation(Box<Guard>),
    /// The root applies whenever the earlier guards do not.
    Otherwise,
}

impl Guard {
    pub fn holds(&self, values: &[BigInt]) -> bool {
        match self {
            Guard::VarZero(op, v) => op.eval(&values[*v], &BigInt::zero()),
            Guard::VarVar(op, v, w) => op.eval(&values[*v], &values[*w]),
            Guard::Negation(g) => !g.holds(values),
            Guard::Otherwise => true,
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        match self {
            Guard::VarZero(op, v) => format!("{} {} 0", names[*v], op.symbol()),
            Guard::VarVar(op, v, w) => format!("{} {} {}", names[*v], op.symbol(), names[*w]),
            Guard::Negation(g) => match g.as_ref() {
                Guard::VarZero(op, v) => {
                    format!("{} {} 0", names[*v], op.negate().symbol())
                }
                Guard::VarVar(op, v, w) => {
                    format!("{} {} {}", names[*v], op.negate().symbol(), names[*w])
                }
                other => format!("!({})", other.render(names)),
            },
            Guard::Otherwise => "otherwise".to_string(),
        }
    }
}

/// One closed-form root of the counter.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Root {
    /// Polynomial over the non-counter variables (counter exponent zero).
    pub expr: Poly,
    pub guard: Option<Guard>,
    /// True when some observed state matched this root and at least one
    /// other root simultaneously.
    pub ambiguous: bool,
}

/// Disjunctive bound solution for one equality.
#[derive(Clone, Debug)]
pub struct BoundSolution {
    /// Arity of the underlying polynomial space.
    pub nvars: usize,
    /// Index of the counter variable.
    pub t: usize,
    pub roots: Vec<Root>,
    /// Unfactored remainder still mentioning the counter, if any.
    pub residual: Option<Poly>,
}

/// Solve `eq = 0` for the counter variable `t`: extract the `t^a` factor
/// (root 0), then repeatedly find and divide out linear factors `t − r(vars)`
/// with `deg r ≤ 2`.
pub fn solve_counter(eq: &EqInvariant, t: usize) -> Result<BoundSolution, BoundsError> {
    let p = eq.to_poly();
    let n = eq.nvars;
    if !p.mentions(t) {
        return Err(BoundsError::NoCounter);
    }
    let mut roots: Vec<Root> = Vec::new();

    // Factor out t^a.
    let a = p
        .terms()
        .map(|(m, _)| m.exps()[t])
        .min()
        .unwrap_or(0);
    let mut q = if a > 0 {
        roots.push(Root {
            expr: Poly::zero(n),
            guard: None,
            ambiguous: false,
        });
        let mut out = Poly::zero(n);
        for (m, c) in p.terms() {
            let mut e = m.exps().to_vec();
            e[t] -= a;
            out = out.add(&Poly::monomial(n, Monomial::from_exps(e), c.clone()));
        }
        out
    } else {
        p.clone()
    };

    // Repeatedly peel off linear factors.
    while q.degree_in(t) >= 1 {
        match find_root(&q, t, n) {
            Some(r) => {
                let divided = divide_by_linear(&q, t, &r).expect("confirmed root divides");
                if !roots.iter().any(|x| x.expr == r) {
                    roots.push(Root {
                        expr: r,
                        guard: None,
                        ambiguous: false,
                    });
                }
                q = divided;
            }
            None => break,
        }
    }
    let residual = if q.degree_in(t) >= 1 { Some(q) } else { None };
    Ok(BoundSolution {
        nvars: n,
        t,
        roots,
        residual,
    })
}

/// Exact division of `p` by `(t − r)`; None when the remainder is nonzero.
pub fn divide_by_linear(p: &Poly, t: usize, r: &Poly) -> Option<Poly> {
    let coeffs = p.as_univariate_in(t);
    let d = coeffs.len() - 1;
    if d == 0 {
        return None;
    }
    // Synthetic division: q_{d-1} = c_d; q_{j-1} = c_j + r·q_j; rem = c_0 + r·q_0.
    let mut qc = vec![Poly::zero(p.arity()); d];
    qc[d - 1] = coeffs[d].clone();
    for j in (1..d).rev() {
        qc[j - 1] = coeffs[j].add(&r.mul(&qc[j]));
    }
    let rem = coeffs[0].add(&r.mul(&qc[0]));
    if !rem.is_zero() {
        return None;
    }
    Some(Poly::from_univariate_in(p.arity(), t, &qc))
}

/// Variables (other than `t`) actually appearing in `p`.
fn support(p: &Poly, t: usize) -> Vec<usize> {
    let mut used = vec![false; p.arity()];
    for (m, _) in p.terms() {
        for (i, &e) in m.exps().iter().enumerate() {
            if e > 0 && i != t {
                used[i] = true;
            }
        }
    }
    used.iter()
        .enumerate()
        .filter(|(_, &u)| u)
        .map(|(i, _)| i)
        .collect()
}

/// Integer roots of a univariate integer polynomial given by coefficients
/// (index = power), scanned over a bounded range.
fn integer_roots(coeffs: &[BigInt]) -> Vec<BigInt> {
    let mut out = Vec::new();
    if coeffs.iter().all(|c| c.is_zero()) {
        return out; // identically zero: every value is a root; skip sample
    }
    let cap = 1000i64;
    for r in -cap..=cap {
        let rv = BigInt::from(r);
        // Horner evaluation.
        let mut acc = BigInt::zero();
        for c in coeffs.iter().rev() {
            acc = acc * &rv + c;
        }
        if acc.is_zero() {
            out.push(rv);
        }
    }
    out
}

/// Find one linear-in-`t` factor `t − r(vars)` of `q` with `deg r ≤ 2`, by
/// sampling, interpolation, and exact-division confirmation.
fn find_root(q: &Poly, t: usize, n: usize) -> Option<Poly> {
    let vars = support(q, t);

    // Constant-in-vars roots first (covers the zero-variable case too).
    // Degree escalation: try interpolating bases of degree 0, 1, 2.
    for deg in 0..=2u32 {
        if let Some(r) = find_root_of_degree(q, t, n, &vars, deg) {
            return Some(r);
        }
    }
    None
}

/// Monomial basis over `vars` of total degree ≤ deg, embedded in arity `n`.
fn basis(n: usize, vars: &[usize], deg: u32) -> Vec<Monomial> {
    let mut out = vec![Monomial::unit(n)];
    if deg >= 1 {
        for &v in vars {
            out.push(Monomial::var(n, v));
        }
    }
    if deg >= 2 {
        for (i, &v) in vars.iter().enumerate() {
            for &w in &vars[i..] {
                out.push(Monomial::var(n, v).mul(&Monomial::var(n, w)));
            }
        }
    }
    out
}

fn find_root_of_degree(q: &Poly, t: usize, n: usize, vars: &[usize], deg: u32) -> Option<Poly> {
    let b = basis(n, vars, deg);
    let need = b.len() + 2; // extra points guard against coincidences
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + deg as u64);
    let mut samples: Vec<(Vec<BigInt>, Vec<BigInt>)> = Vec::new(); // (point, roots)
    let mut attempts = 0;
    while samples.len() < need && attempts < need * 40 {
        attempts += 1;
        let mut point = vec![BigInt::zero(); n];
        for &v in vars {
            point[v] = BigInt::from(rng.gen_range(-8i64..=8));
        }
        let coeffs: Vec<BigInt> = q
            .as_univariate_in(t)
            .iter()
            .map(|c| c.eval(&point))
            .collect();
        if coeffs.iter().all(|c| c.is_zero()) {
            continue; // degenerate specialization
        }
        let roots = integer_roots(&coeffs);
        if roots.is_empty() {
            // This specialization has no integer root at all, so no linear
            // factor with an integer-valued root polynomial exists... unless
            // the leading coefficient vanished; be conservative and skip.
            continue;
        }
        samples.push((point, roots));
    }
    if samples.len() < b.len() {
        return None;
    }

    // Choice search with incremental pruning: assign one root per sample;
    // once enough points are fixed, the coefficient vector is determined and
    // the remaining samples must agree.
    let mut choice: Vec<usize> = Vec::new();
    search(q, t, n, &b, &samples, &mut choice)
}

fn search(
    q: &Poly,
    t: usize,
    n: usize,
    b: &[Monomial],
    samples: &[(Vec<BigInt>, Vec<BigInt>)],
    choice: &mut Vec<usize>,
) -> Option<Poly> {
    if choice.len() >= b.len() {
        // Solve for the coefficients over the chosen points.
        let rows: Vec<Vec<BigRational>> = samples[..choice.len()]
            .iter()
            .map(|(pt, _)| b.iter().map(|m| BigRational::from(m.eval(pt))).collect())
            .collect();
        let rhs: Vec<BigRational> = samples[..choice.len()]
            .iter()
            .zip(choice.iter())
            .map(|((_, roots), &ci)| BigRational::from(roots[ci].clone()))
            .collect();
        if let Some(sol) = solve_exact(&rows, &rhs) {
            // Integer coefficients only (counter bounds are integer-valued
            // polynomials in these programs).
            let mut r = Poly::zero(n);
            for (m, c) in b.iter().zip(&sol) {
                if !c.denom().is_one() {
                    return None;
                }
                r = r.add(&Poly::monomial(n, m.clone(), c.numer().clone()));
            }
            // Verify on the held-out samples, then confirm exactly.
            for (pt, roots) in &samples[choice.len()..] {
                if !roots.contains(&r.eval(pt)) {
                    return None;
                }
            }
            if divide_by_linear(q, t, &r).is_some() {
                return Some(r);
            }
        }
        return None;
    }
    let (_, roots) = &samples[choice.len()];
    // Cap fanout to keep the search bounded.
    for ci in 0..roots.len().min(6) {
        choice.push(ci);
        if let Some(r) = search(q, t, n, b, samples, choice) {
            choice.pop();
            return Some(r);
        }
        choice.pop();
    }
    None
}

/// Exact solve of a square-ish linear system by Gaussian elimination; None
/// when inconsistent or underdetermined.
fn solve_exact(rows: &[Vec<BigRational>], rhs: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = rows.first()?.len();
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, v)| {
            let mut row = r.clone();
            row.push(v.clone());
            row
        })
        .collect();
    let nrows = m.len();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let pr = (r..nrows).find(|&i| !m[i][c].is_zero());
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
                for j in 0..=n {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    // Inconsistent rows.
    for i in r..nrows {
        if !m[i][n].is_zero() {
            return None;
        }
    }
    if pivots.len() < n {
        return None; // underdetermined
    }
    let mut sol = vec![BigRational::zero(); n];
    for (ri, &c) in pivots.iter().enumerate() {
        sol[c] = m[ri][n].clone();
    }
    Some(sol)
}

/// Attach guards by decision-list separation: for each root in order, find a
/// comparison over the input variables that exactly matches the states whose
/// counter value equals that root (among states not claimed by earlier
/// roots). Heuristic and flagged as such; the exact-division root identity is
/// the sound core.
pub fn attach_guards(
    mut sol: BoundSolution,
    states: &[ConcreteState],
    n_inputs: usize,
) -> BoundSolution {
    let t = sol.t;
    // Which roots does each state match?
    let matches: Vec<Vec<bool>> = states
        .iter()
        .map(|s| {
            sol.roots
                .iter()
                .map(|r| {
                    let mut point = s.values.clone();
                    point.resize(sol.nvars, BigInt::zero());
                    r.expr.eval(&point) == s.values[t]
                })
                .collect()
        })
        .collect();
    for (si, ms) in matches.iter().enumerate() {
        if ms.iter().filter(|&&b| b).count() > 1 {
            for (ri, &b) in ms.iter().enumerate() {
                if b {
                    sol.roots[ri].ambiguous = true;
                }
            }
            let _ = si;
        }
    }

    let mut remaining: Vec<usize> = (0..states.len()).collect();
    let nroots = sol.roots.len();
    let mut prev_guard: Option<Guard> = None;
    for ri in 0..nroots {
        if remaining.is_empty() {
            break;
        }
        let matched: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&si| matches[si][ri])
            .collect();
        if matched.is_empty() {
            continue;
        }
        if matched.len() == remaining.len() {
            // Root covers everything left: tail of the decision list.
            sol.roots[ri].guard = if ri == 0 && nroots == 1 {
                None // single root: unguarded
            } else if let Some(g) = prev_guard.take() {
                Some(Guard::Negation(Box::new(g)))
            } else {
                Some(Guard::Otherwise)
            };
            remaining.clear();
            continue;
        }
        // Find a comparison that separates matched from the rest.
        let guard = candidate_guards(n_inputs).into_iter().find(|g| {
            remaining
                .iter()
                .all(|&si| g.holds(&states[si].values) == matches[si][ri])
        });
        if let Some(g) = guard {
            remaining.retain(|&si| !matches[si][ri]);
            prev_guard = Some(g.clone());
            sol.roots[ri].guard = Some(g);
        } else {
            sol.roots[ri].guard = None; // no separator found: unguarded
        }
    }
    sol
}

/// Candidate guards in deterministic order: equalities first, then the
/// inequalities, single variables before pairs.
fn candidate_guards(n_inputs: usize) -> Vec<Guard> {
    let mut out = Vec::new();
    for v in 0..n_inputs {
        out.push(Guard::VarZero(Cmp::Eq, v));
    }
    for v in 0..n_inputs {
        for w in 0..n_inputs {
            if v != w {
                out.push(Guard::VarVar(Cmp::Eq, v, w));
            }
        }
    }
    for op in [Cmp::Le, Cmp::Lt, Cmp::Ge, Cmp::Gt] {
        for v in 0..n_inputs {
            out.push(Guard::VarZero(op, v));
        }
    }
    for op in [Cmp::Le, Cmp::Lt, Cmp::Ge, Cmp::Gt] {
        for v in 0..n_inputs {
            for w in 0..n_inputs {
                if v != w {
                    out.push(Guard::VarVar(op, v, w));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::{create_terms, EqInvariant};

    fn eq_from_poly(p: &Poly, nvars: usize, d: u32) -> EqInvariant {
        // Build via the TermSet path to exercise canonicalization.
        let ts = create_terms(nvars, d, 500).unwrap();
        let coeffs: Vec<BigInt> = ts
            .terms
            .iter()
            .map(|m| {
                p.terms()
                    .find(|(pm, _)| *pm == m)
                    .map(|(_, c)| c.clone())
                    .unwrap_or_else(BigInt::zero)
            })
            .collect();
        EqInvariant::from_coeffs(&ts, &coeffs).unwrap()
    }

    #[test]
    fn factored_input() {
        // t² − x·t = 0 over (x, t): roots {0, x}
        let x = Poly::var(2, 0);
        let t = Poly::var(2, 1);
        let p = t.pow(2).sub(&x.mul(&t));
        let eq = eq_from_poly(&p, 2, 2);
        let sol = solve_counter(&eq, 1).unwrap();
        assert!(sol.residual.is_none());
        let exprs: Vec<&Poly> = sol.roots.iter().map(|r| &r.expr).collect();
        assert_eq!(exprs.len(), 2);
        assert!(exprs.contains(&&Poly::zero(2)));
        assert!(exprs.contains(&&x));
    }

    #[test]
    fn cav09_style_roots() {
        // m·t − t² − 100m + 200t − 10000 = 0 over (m, t): roots {m+100, 100}
        let m = Poly::var(2, 0);
        let t = Poly::var(2, 1);
        let p = m
            .mul(&t)
            .sub(&t.pow(2))
            .sub(&m.scale(&BigInt::from(100)))
            .add(&t.scale(&BigInt::from(200)))
            .sub(&Poly::constant(2, 10_000));
        let eq = eq_from_poly(&p, 2, 2);
        let sol = solve_counter(&eq, 1).unwrap();
        assert!(sol.residual.is_none(), "residual: {:?}", sol.residual);
        let want1 = m.add(&Poly::constant(2, 100));
        let want2 = Poly::constant(2, 100);
        let exprs: Vec<&Poly> = sol.roots.iter().map(|r| &r.expr).collect();
        assert_eq!(exprs.len(), 2, "roots: {:?}", sol.roots);
        assert!(exprs.contains(&&want1));
        assert!(exprs.contains(&&want2));
    }

    #[test]
    fn no_counter_error() {
        let x = Poly::var(2, 0);
        let eq = eq_from_poly(&x, 2, 1);
        assert!(matches!(solve_counter(&eq, 1), Err(BoundsError::NoCounter)));
    }

    #[test]
    fn exact_division_rejects_non_root() {
        let x = Poly::var(2, 0);
        let t = Poly::var(2, 1);
        let p = t.pow(2).sub(&x.mul(&t)); // t(t − x)
        assert!(divide_by_linear(&p, 1, &Poly::constant(2, 5)).is_none());
        assert!(divide_by_linear(&p, 1, &x).is_some());
    }
}
