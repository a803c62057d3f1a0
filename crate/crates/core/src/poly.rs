//! Sparse multivariate polynomials with exact rational coefficients.

use crate::rational::{fmt_coeff_prefix, Q};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;

/// Sorted `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(usize, u32)>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Q>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut m: BTreeMap<usize, u32> = a.iter().copied().collect();
    for &(v, e) in b {
        *m.entry(v).or_insert(0) += e;
    }
    m.into_iter().collect()
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![], c);
        p
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn var(i: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![(i, 1)], Q::one());
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            r.add_term(m.clone(), c * s);
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                r.add_term(mono_mul(a, b), ca * cb);
            }
        }
        r
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().map(|x| x.1).sum()).max().unwrap_or(0)
    }

    pub fn variables(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().flat_map(|m| m.iter().map(|x| x.0)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        let mut s = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in m {
                t *= num::pow(x[v].clone(), e as usize);
            }
            s += t;
        }
        s
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| crate::rational::to_f64(c) * m.iter().map(|&(v, e)| x[v].powi(e as i32)).product::<f64>())
            .sum()
    }

    /// Replaces variable `i` by `subs[i]` (variables without an entry stay).
    pub fn substitute(&self, subs: &BTreeMap<usize, Poly>) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            for &(v, e) in m {
                let f = subs.get(&v).cloned().unwrap_or_else(|| Self::var(v));
                t = t.mul(&f.pow(e));
            }
            r = r.add(&t);
        }
        r
    }

    /// Linear coefficients when the polynomial is homogeneous of degree one.
    pub fn as_linear(&self) -> Option<BTreeMap<usize, Q>> {
        let mut out = BTreeMap::new();
        for (m, c) in &self.terms {
            match m.as_slice() {
                [(v, 1)] => {
                    out.insert(*v, c.clone());
                }
                _ => return None,
            }
        }
        Some(out)
    }

    /// Human-readable form with the given variable names, e.g. `O_w·O_wb − O_wb`.
    pub fn pretty(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        // highest degree first
        let mut ts: Vec<(&Monomial, &Q)> = self.terms.iter().collect();
        ts.sort_by(|a, b| {
            let da: u32 = a.0.iter().map(|x| x.1).sum();
            let db: u32 = b.0.iter().map(|x| x.1).sum();
            db.cmp(&da).then(a.0.cmp(b.0))
        });
        for (i, (m, c)) in ts.into_iter().enumerate() {
            let body: Vec<String> = m
                .iter()
                .map(|&(v, e)| if e == 1 { names(v) } else { format!("{}^{e}", names(v)) })
                .collect();
            let body = body.join("·");
            let (neg, a) = (c.is_negative(), c.abs());
            if i > 0 {
                out.push_str(if neg { " − " } else { " + " });
            } else if neg {
                out.push('−');
            }
            if body.is_empty() {
                out.push_str(&crate::rational::fmt_q(&a));
            } else {
                out.push_str(&fmt_coeff_prefix(&a));
                out.push_str(&body);
            }
        }
        out
    }
}

/// Solves `A x = b` over the rationals; free variables are set to zero.
/// `a` is row-major with `ncols` columns.
pub fn solve_linear(a: &[Vec<Q>], b: &[Q], ncols: usize) -> Option<Vec<Q>> {
    let rows = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivots = vec![];
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = Q::one() / &m[row][col];
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=ncols {
                    let d = &m[row][c] * &f;
                    m[r][c] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    if m[row..].iter().any(|r| !r[ncols].is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][ncols].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn arithmetic() {
        let x = Poly::var(0);
        let p = x.mul(&x.sub(&Poly::one()));
        assert_eq!(p.eval(&[q(5)]), q(20));
        assert_eq!(p.degree(), 2);
        assert_eq!(p.pretty(&|_| "n".into()), "n^2 − n");
    }

    #[test]
    fn linear_solve() {
        let a = vec![vec![q(1), q(1)], vec![q(1), q(-1)]];
        assert_eq!(solve_linear(&a, &[q(3), q(1)], 2), Some(vec![q(2), q(1)]));
        let s = vec![vec![q(1), q(1)], vec![q(2), q(2)]];
        assert_eq!(solve_linear(&s, &[q(1), q(3)], 2), None);
    }
}
