//! Sparse multivariate polynomials over a coefficient ring.

use super::coeff::Coeff;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Sparse multivariate polynomial: exponent vector -> coefficient.
///
/// The exponent vector always has length `nvars`; zero-coefficient terms
/// are never stored. `BTreeMap` keeps term order deterministic so that
/// serialized output is reproducible.
#[derive(Clone, PartialEq)]
pub struct Polynomial<C: Coeff> {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, C>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    /// The coordinate polynomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(
            i < nvars,
            "variable index {i} out of range for {nvars} vars"
        );
        let mut exps = vec![0u16; nvars];
        exps[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(exps, C::one());
        p
    }

    /// Build from monomial terms `(coefficient, exponents)`.
    pub fn from_terms(
        nvars: usize,
        terms: impl IntoIterator<Item = (C, Vec<u16>)>,
    ) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (c, exps) in terms {
            if exps.len() != nvars {
                return Err(Error::structural(format!(
                    "exponent vector length {} does not match {} variables",
                    exps.len(),
                    nvars
                )));
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &C)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, exps: Vec<u16>, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(existing) => {
                let sum = existing.add(&c);
                if sum.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.nvars, rhs.nvars, "polynomial variable count mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.nvars, rhs.nvars, "polynomial variable count mismatch");
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let exps: Vec<u16> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, k)| (e.clone(), k.mul(c)))
                .collect(),
        }
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.nvars, "variable index out of range");
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let k = e[i];
            if k == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[i] = k - 1;
            out.add_term(exps, c.mul(&C::from_int(k as i64)));
        }
        out
    }

    /// Evaluate at a point of the coefficient ring.
    pub fn eval(&self, x: &[C]) -> C {
        assert_eq!(x.len(), self.nvars, "evaluation point dimension mismatch");
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    term = term.mul(xi);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Evaluate at an `f64` point, converting coefficients on the fly.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "evaluation point dimension mismatch");
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut term = c.to_f64();
            for (xi, &k) in x.iter().zip(e) {
                term *= xi.powi(k as i32);
            }
            acc += term;
        }
        acc
    }

    /// Substitute polynomials for the variables (polynomial composition).
    pub fn compose(&self, args: &[Polynomial<C>]) -> Polynomial<C> {
        assert_eq!(args.len(), self.nvars, "composition arity mismatch");
        let out_vars = args.first().map(|p| p.nvars()).unwrap_or(0);
        let mut acc = Polynomial::zero(out_vars);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(out_vars, c.clone());
            for (arg, &k) in args.iter().zip(e) {
                for _ in 0..k {
                    term = term.mul(arg);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Re-express over `new_nvars >= nvars` variables (extra variables unused).
    pub fn extend_vars(&self, new_nvars: usize) -> Self {
        assert!(new_nvars >= self.nvars);
        Polynomial {
            nvars: new_nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut exps = e.clone();
                    exps.resize(new_nvars, 0);
                    (exps, c.clone())
                })
                .collect(),
        }
    }

    /// Convert coefficients into another ring (e.g. `f64` -> exact rational).
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Largest coefficient magnitude, as `f64`.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

impl<C: Coeff> fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:?}")?;
            for (i, &k) in e.iter().enumerate() {
                if k == 1 {
                    write!(f, "*x{}", i + 1)?;
                } else if k > 1 {
                    write!(f, "*x{}^{}", i + 1, k)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::coeff::Rational;

    fn x(i: usize) -> Polynomial<Rational> {
        Polynomial::var(3, i)
    }

    #[test]
    fn product_and_derivative_are_exact() {
        // p = (x1 + x2)^2 = x1^2 + 2 x1 x2 + x2^2
        let p = x(0).add(&x(1)).mul(&x(0).add(&x(1)));
        assert_eq!(p.total_degree(), 2);
        // dp/dx1 = 2 x1 + 2 x2
        let d = p.partial(0);
        let expected = x(0).add(&x(1)).scale(&Rational::from_int(2));
        assert_eq!(d, expected);
        // d^2 p / dx1 dx2 = 2
        let dd = d.partial(1);
        assert_eq!(dd, Polynomial::constant(3, Rational::from_int(2)));
    }

    #[test]
    fn zero_terms_are_not_stored() {
        let p = x(0).sub(&x(0));
        assert!(p.is_zero());
        assert_eq!(p.terms.len(), 0);
    }

    #[test]
    fn eval_matches_eval_f64() {
        let p = x(0).mul(&x(1)).add(&x(2).scale(&Rational::from_int(5)));
        let pt = [2.0, 3.0, -1.0];
        let exact = p.eval(&pt.map(<Rational as Coeff>::from_f64));
        assert_eq!(exact.to_f64(), p.eval_f64(&pt));
        assert_eq!(p.eval_f64(&pt), 1.0);
    }

    #[test]
    fn composition_substitutes_variables() {
        // p(u) = u^2 with u = x1 + x2 over 2 vars
        let p = Polynomial::<Rational>::var(1, 0);
        let p2 = p.mul(&p);
        let u = Polynomial::<Rational>::var(2, 0).add(&Polynomial::var(2, 1));
        let q = p2.compose(&[u]);
        assert_eq!(q.eval_f64(&[1.0, 2.0]), 9.0);
    }
}
