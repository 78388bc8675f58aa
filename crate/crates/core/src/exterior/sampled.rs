//! Sampled-coefficient fallback for forms whose coefficients are not
//! polynomial (generic callable Hamiltonians).
//!
//! The exterior derivative is taken by central finite differences with a
//! configurable step. Evaluations whose difference stencil had to be
//! clamped against the domain boundary are flagged as reduced accuracy.

use super::coeff::Coeff;
use super::form::Form;
use super::multi_index::MultiIndex;
use super::MAX_DIM;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Default finite-difference step for sampled exterior derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A coefficient function `R^m -> R`.
pub type CoeffFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Result of evaluating a sampled form: the value and whether any
/// finite-difference stencil was degraded near the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledValue {
    pub value: f64,
    pub reduced_accuracy: bool,
}

/// A degree-`k` form on `R^m` with sampled (callable) coefficients.
///
/// `domain`, when set, bounds where coefficients may be sampled;
/// derivatives near the boundary fall back to one-sided differences and
/// mark their results as reduced accuracy.
#[derive(Clone)]
pub struct SampledForm {
    dim: usize,
    degree: usize,
    terms: BTreeMap<MultiIndex, CoeffFn>,
    domain: Option<Vec<(f64, f64)>>,
    fd_step: f64,
}

impl SampledForm {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::cap(format!(
                "R^{dim} exceeds the dense multi-index cap of R^{MAX_DIM}"
            )));
        }
        Ok(SampledForm {
            dim,
            degree,
            terms: BTreeMap::new(),
            domain: None,
            fd_step: DEFAULT_FD_STEP,
        })
    }

    pub fn with_domain(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.dim {
            return Err(Error::structural(format!(
                "domain has {} intervals on R^{}",
                bounds.len(),
                self.dim
            )));
        }
        self.domain = Some(bounds);
        Ok(self)
    }

    pub fn with_term(mut self, indices: &[u8], f: CoeffFn) -> Result<Self> {
        let idx = MultiIndex::new(indices.to_vec())?;
        if idx.degree() != self.degree {
            return Err(Error::structural(format!(
                "multi-index degree {} on a degree-{} form",
                idx.degree(),
                self.degree
            )));
        }
        self.terms.insert(idx, f);
        Ok(self)
    }

    /// Lift an exact polynomial form into sampled mode.
    pub fn from_form<C: Coeff>(form: &Form<C>) -> Result<Self> {
        let mut out = SampledForm::new(form.dim(), form.degree())?;
        for (idx, p) in form.terms() {
            let poly = p.map_coeffs(|c| c.to_f64());
            out.terms
                .insert(idx.clone(), Arc::new(move |x: &[f64]| poly.eval_f64(x)));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn wedge(&self, rhs: &SampledForm) -> Result<SampledForm> {
        if self.dim != rhs.dim {
            return Err(Error::structural(format!(
                "wedge of forms on R^{} and R^{}",
                self.dim, rhs.dim
            )));
        }
        let mut out = SampledForm::new(self.dim, self.degree + rhs.degree)?;
        out.domain = intersect_domains(&self.domain, &rhs.domain);
        out.fd_step = self.fd_step.max(rhs.fd_step);
        if out.degree > self.dim {
            return Ok(out);
        }
        for (ia, fa) in &self.terms {
            for (ib, fb) in &rhs.terms {
                if let Some((sign, idx)) = ia.wedge(ib) {
                    let (fa, fb) = (Arc::clone(fa), Arc::clone(fb));
                    let s = sign as f64;
                    let term: CoeffFn = Arc::new(move |x: &[f64]| s * fa(x) * fb(x));
                    merge_term(&mut out.terms, idx, term);
                }
            }
        }
        Ok(out)
    }

    /// Contraction with a sampled vector field.
    pub fn interior(&self, v: &[CoeffFn]) -> Result<SampledForm> {
        if v.len() != self.dim {
            return Err(Error::structural(format!(
                "contraction vector has {} components on R^{}",
                v.len(),
                self.dim
            )));
        }
        let mut out = SampledForm::new(self.dim, self.degree.saturating_sub(1))?;
        out.domain = self.domain.clone();
        out.fd_step = self.fd_step;
        if self.degree == 0 {
            return Ok(out);
        }
        for (idx, f) in &self.terms {
            for pos in 0..idx.degree() {
                let axis = idx.indices()[pos] as usize;
                let (sign, reduced) = idx.remove_at(pos);
                let (f, vi) = (Arc::clone(f), Arc::clone(&v[axis]));
                let s = sign as f64;
                let term: CoeffFn = Arc::new(move |x: &[f64]| s * f(x) * vi(x));
                merge_term(&mut out.terms, reduced, term);
            }
        }
        Ok(out)
    }

    /// Finite-difference exterior derivative with the given step.
    ///
    /// Coefficients of the result differentiate the parent coefficients by
    /// central differences; where `x ± step` leaves the domain the stencil
    /// degrades to a one-sided difference and evaluation reports reduced
    /// accuracy.
    pub fn exterior_derivative(&self, step: f64) -> Result<SampledForm> {
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::structural(format!(
                "finite-difference step must be positive and finite, got {step}"
            )));
        }
        let mut out = SampledForm::new(self.dim, self.degree + 1)?;
        out.domain = self.domain.clone();
        out.fd_step = self.fd_step.max(step);
        if out.degree > self.dim {
            return Ok(out);
        }
        for (idx, f) in &self.terms {
            for axis in 0..self.dim {
                if idx.contains(axis as u8) {
                    continue;
                }
                let Some((sign, widx)) = MultiIndex::single(axis as u8).wedge(idx) else {
                    continue;
                };
                let f = Arc::clone(f);
                let domain = self.domain.clone();
                let s = sign as f64;
                let term: CoeffFn =
                    Arc::new(move |x: &[f64]| s * fd_partial(&f, x, axis, step, domain.as_deref()));
                merge_term(&mut out.terms, widx, term);
            }
        }
        Ok(out)
    }

    /// Evaluate on `degree` tangent vectors at `x`, flagging evaluations
    /// close enough to the domain boundary that difference stencils were
    /// (or would be) clamped.
    pub fn evaluate(&self, x: &[f64], vectors: &[Vec<f64>]) -> Result<SampledValue> {
        if x.len() != self.dim {
            return Err(Error::structural(format!(
                "point has {} components on R^{}",
                x.len(),
                self.dim
            )));
        }
        if vectors.len() != self.degree {
            return Err(Error::structural(format!(
                "degree-{} form evaluated on {} vectors",
                self.degree,
                vectors.len()
            )));
        }
        let mut acc = 0.0;
        for (idx, f) in &self.terms {
            let k = idx.degree();
            let mut minor = vec![0.0; k * k];
            for (r, &axis) in idx.indices().iter().enumerate() {
                for (c, v) in vectors.iter().enumerate() {
                    minor[r * k + c] = v[axis as usize];
                }
            }
            acc += f(x) * det_f64(&mut minor, k);
        }
        Ok(SampledValue {
            value: acc,
            reduced_accuracy: self.near_boundary(x),
        })
    }

    /// Largest coefficient magnitude at `x`, with the boundary flag.
    pub fn max_abs_at(&self, x: &[f64]) -> Result<SampledValue> {
        if x.len() != self.dim {
            return Err(Error::structural(format!(
                "point has {} components on R^{}",
                x.len(),
                self.dim
            )));
        }
        let value = self.terms.values().map(|f| f(x).abs()).fold(0.0, f64::max);
        Ok(SampledValue {
            value,
            reduced_accuracy: self.near_boundary(x),
        })
    }

    fn near_boundary(&self, x: &[f64]) -> bool {
        match &self.domain {
            None => false,
            Some(bounds) => x
                .iter()
                .zip(bounds)
                .any(|(&xi, &(lo, hi))| xi - self.fd_step < lo || xi + self.fd_step > hi),
        }
    }
}

fn intersect_domains(
    a: &Option<Vec<(f64, f64)>>,
    b: &Option<Vec<(f64, f64)>>,
) -> Option<Vec<(f64, f64)>> {
    match (a, b) {
        (None, None) => None,
        (Some(d), None) | (None, Some(d)) => Some(d.clone()),
        (Some(da), Some(db)) => Some(
            da.iter()
                .zip(db)
                .map(|(&(alo, ahi), &(blo, bhi))| (alo.max(blo), ahi.min(bhi)))
                .collect(),
        ),
    }
}

fn merge_term(terms: &mut BTreeMap<MultiIndex, CoeffFn>, idx: MultiIndex, f: CoeffFn) {
    match terms.remove(&idx) {
        Some(existing) => {
            let combined: CoeffFn = Arc::new(move |x: &[f64]| existing(x) + f(x));
            terms.insert(idx, combined);
        }
        None => {
            terms.insert(idx, f);
        }
    }
}

/// Central finite difference, degrading to one-sided at the boundary.
fn fd_partial(
    f: &CoeffFn,
    x: &[f64],
    axis: usize,
    step: f64,
    domain: Option<&[(f64, f64)]>,
) -> f64 {
    let (lo, hi) = domain
        .map(|d| d[axis])
        .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    let can_plus = x[axis] + step <= hi;
    let can_minus = x[axis] - step >= lo;
    match (can_plus, can_minus) {
        (true, true) => {
            plus[axis] += step;
            minus[axis] -= step;
            (f(&plus) - f(&minus)) / (2.0 * step)
        }
        (true, false) => {
            plus[axis] += step;
            (f(&plus) - f(x)) / step
        }
        (false, true) => {
            minus[axis] -= step;
            (f(x) - f(&minus)) / step
        }
        (false, false) => 0.0,
    }
}

fn det_f64(m: &mut [f64], k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut det = 1.0;
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&a, &b| {
                m[a * k + col]
                    .abs()
                    .partial_cmp(&m[b * k + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot_row * k + col] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            for c in 0..k {
                m.swap(pivot_row * k + c, col * k + c);
            }
            det = -det;
        }
        let pivot = m[col * k + col];
        det *= pivot;
        for r in (col + 1)..k {
            let factor = m[r * k + col] / pivot;
            for c in col..k {
                m[r * k + c] -= factor * m[col * k + c];
            }
        }
    }
    det
}
