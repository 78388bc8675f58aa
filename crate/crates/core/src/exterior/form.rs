//! Exterior forms with polynomial coefficients.

use super::coeff::Coeff;
use super::multi_index::MultiIndex;
use super::poly::Polynomial;
use super::MAX_DIM;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// A degree-`k` exterior form on `R^m` with polynomial coefficients.
///
/// Coefficients are stored sparsely against canonical basis labels. All
/// operations are pure; forms are immutable once built, so concurrent
/// reads and batched evaluation need no synchronisation.
///
/// A degree larger than `m` is allowed only for the zero form, which is
/// what wedge products return when they overflow the top degree.
#[derive(Clone, PartialEq)]
pub struct Form<C: Coeff> {
    dim: usize,
    degree: usize,
    terms: BTreeMap<MultiIndex, Polynomial<C>>,
}

impl<C: Coeff> Form<C> {
    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Form {
            dim,
            degree,
            terms: BTreeMap::new(),
        })
    }

    /// A degree-0 form (a scalar field).
    pub fn scalar(dim: usize, value: Polynomial<C>) -> Result<Self> {
        check_dim(dim)?;
        if value.nvars() != dim {
            return Err(Error::structural(format!(
                "scalar coefficient over {} variables on R^{}",
                value.nvars(),
                dim
            )));
        }
        let mut f = Form::zero(dim, 0)?;
        f.insert(MultiIndex::empty(), value);
        Ok(f)
    }

    /// The constant basis form `dx^{i1} ∧ … ∧ dx^{ik}`.
    pub fn basis(dim: usize, indices: &[u8]) -> Result<Self> {
        check_dim(dim)?;
        let idx = MultiIndex::new(indices.to_vec())?;
        if let Some(max) = idx.max_index() {
            if max as usize >= dim {
                return Err(Error::structural(format!(
                    "axis {max} out of range on R^{dim}"
                )));
            }
        }
        let mut f = Form::zero(dim, idx.degree())?;
        f.insert(idx, Polynomial::one(dim));
        Ok(f)
    }

    /// The volume form `dx^1 ∧ … ∧ dx^m`.
    pub fn volume(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut f = Form::zero(dim, dim)?;
        f.insert(MultiIndex::full(dim), Polynomial::one(dim));
        Ok(f)
    }

    /// Build from `(multi-index, coefficient)` pairs of equal degree.
    pub fn from_terms(
        dim: usize,
        degree: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Polynomial<C>)>,
    ) -> Result<Self> {
        let mut f = Form::zero(dim, degree)?;
        for (idx, p) in terms {
            if idx.degree() != degree {
                return Err(Error::structural(format!(
                    "multi-index {:?} has degree {}, expected {}",
                    idx.indices(),
                    idx.degree(),
                    degree
                )));
            }
            if let Some(max) = idx.max_index() {
                if max as usize >= dim {
                    return Err(Error::structural(format!(
                        "axis {max} out of range on R^{dim}"
                    )));
                }
            }
            if p.nvars() != dim {
                return Err(Error::structural(format!(
                    "coefficient over {} variables on R^{dim}",
                    p.nvars()
                )));
            }
            f.insert_add(idx, p);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Polynomial<C>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> Option<&Polynomial<C>> {
        self.terms.get(idx)
    }

    fn insert(&mut self, idx: MultiIndex, p: Polynomial<C>) {
        if !p.is_zero() {
            self.terms.insert(idx, p);
        }
    }

    fn insert_add(&mut self, idx: MultiIndex, p: Polynomial<C>) {
        if p.is_zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(existing) => {
                let sum = existing.add(&p);
                if sum.is_zero() {
                    self.terms.remove(&idx);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(idx, p);
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim || (self.degree != rhs.degree && !self.is_zero() && !rhs.is_zero()) {
            return Err(Error::structural(format!(
                "cannot add a degree-{} form on R^{} and a degree-{} form on R^{}",
                self.degree, self.dim, rhs.degree, rhs.dim
            )));
        }
        let mut out = self.clone();
        out.degree = if self.is_zero() {
            rhs.degree
        } else {
            self.degree
        };
        for (idx, p) in &rhs.terms {
            out.insert_add(idx.clone(), p.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        Form {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, p)| (i.clone(), p.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Form {
                dim: self.dim,
                degree: self.degree,
                terms: BTreeMap::new(),
            };
        }
        Form {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, p)| (i.clone(), p.scale(c)))
                .collect(),
        }
    }

    /// Multiply by a scalar field (degree-0 coefficient).
    pub fn scale_poly(&self, p: &Polynomial<C>) -> Self {
        let mut out = Form {
            dim: self.dim,
            degree: self.degree,
            terms: BTreeMap::new(),
        };
        for (idx, q) in &self.terms {
            out.insert_add(idx.clone(), q.mul(p));
        }
        out
    }

    /// Graded-antisymmetric exterior product.
    ///
    /// Degrees add; past the top degree the result is the zero form.
    pub fn wedge(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::structural(format!(
                "wedge of forms on R^{} and R^{}",
                self.dim, rhs.dim
            )));
        }
        let degree = self.degree + rhs.degree;
        let mut out = Form {
            dim: self.dim,
            degree,
            terms: BTreeMap::new(),
        };
        if degree > self.dim {
            return Ok(out);
        }
        for (ia, pa) in &self.terms {
            for (ib, pb) in &rhs.terms {
                if let Some((sign, idx)) = ia.wedge(ib) {
                    let mut prod = pa.mul(pb);
                    if sign < 0 {
                        prod = prod.neg();
                    }
                    out.insert_add(idx, prod);
                }
            }
        }
        Ok(out)
    }

    /// Interior product (contraction) with the vector field `v`, given by
    /// one coefficient polynomial per axis. Degree drops by one; degree-0
    /// forms contract to zero.
    pub fn interior(&self, v: &[Polynomial<C>]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::structural(format!(
                "contraction vector has {} components on R^{}",
                v.len(),
                self.dim
            )));
        }
        let degree = self.degree.saturating_sub(1);
        let mut out = Form {
            dim: self.dim,
            degree,
            terms: BTreeMap::new(),
        };
        if self.degree == 0 {
            return Ok(out);
        }
        for (idx, p) in &self.terms {
            for pos in 0..idx.degree() {
                let axis = idx.indices()[pos] as usize;
                let vi = &v[axis];
                if vi.is_zero() {
                    continue;
                }
                let (sign, reduced) = idx.remove_at(pos);
                let mut prod = p.mul(vi);
                if sign < 0 {
                    prod = prod.neg();
                }
                out.insert_add(reduced, prod);
            }
        }
        Ok(out)
    }

    /// Exterior derivative; `d ∘ d = 0` holds coefficient-exactly.
    pub fn exterior_derivative(&self) -> Self {
        let degree = self.degree + 1;
        let mut out = Form {
            dim: self.dim,
            degree,
            terms: BTreeMap::new(),
        };
        if degree > self.dim {
            return out;
        }
        for (idx, p) in &self.terms {
            for axis in 0..self.dim {
                let dp = p.partial(axis);
                if dp.is_zero() {
                    continue;
                }
                if let Some((sign, widx)) = MultiIndex::single(axis as u8).wedge(idx) {
                    let term = if sign < 0 { dp.neg() } else { dp };
                    out.insert_add(widx, term);
                }
            }
        }
        out
    }

    /// Lie derivative along `v` by the Cartan formula
    /// `L_v a = d(v ⌟ a) + v ⌟ (d a)`.
    pub fn lie_derivative(&self, v: &[Polynomial<C>]) -> Result<Self> {
        let a = self.interior(v)?.exterior_derivative();
        let b = self.exterior_derivative().interior(v)?;
        a.add(&b)
    }

    /// Evaluate on `degree` tangent vectors at the point `x`.
    pub fn evaluate(&self, x: &[C], vectors: &[Vec<C>]) -> Result<C> {
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
        for v in vectors {
            if v.len() != self.dim {
                return Err(Error::structural(format!(
                    "tangent vector has {} components on R^{}",
                    v.len(),
                    self.dim
                )));
            }
        }
        let mut acc = C::zero();
        for (idx, p) in &self.terms {
            // minor of the vector matrix on the rows selected by idx
            let k = idx.degree();
            let mut minor = Vec::with_capacity(k * k);
            for &axis in idx.indices() {
                for v in vectors {
                    minor.push(v[axis as usize].clone());
                }
            }
            let det = det_in_place(&mut minor, k);
            acc = acc.add(&p.eval(x).mul(&det));
        }
        Ok(acc)
    }

    /// Largest coefficient magnitude over all terms, as `f64`.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|p| p.max_abs_coeff())
            .fold(0.0, f64::max)
    }

    /// Largest magnitude over all coefficients evaluated at `x`.
    pub fn max_abs_at(&self, x: &[C]) -> f64 {
        self.terms
            .values()
            .map(|p| p.eval(x).to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Convert coefficients into another ring.
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D + Copy) -> Form<D> {
        Form {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, p)| (i.clone(), p.map_coeffs(f)))
                .collect(),
        }
    }

    /// Re-embed on `R^{new_dim}` (new axes unused), e.g. phase space into
    /// extended phase space.
    pub fn extend_dim(&self, new_dim: usize) -> Result<Form<C>> {
        check_dim(new_dim)?;
        if new_dim < self.dim {
            return Err(Error::structural(
                "cannot shrink the ambient dimension of a form".to_string(),
            ));
        }
        Ok(Form {
            dim: new_dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, p)| (i.clone(), p.extend_vars(new_dim)))
                .collect(),
        })
    }
}

/// Determinant of a k-by-k matrix stored row-major, by Gaussian
/// elimination with pivot selection on `f64` magnitude.
fn det_in_place<C: Coeff>(m: &mut [C], k: usize) -> C {
    if k == 0 {
        return C::one();
    }
    let mut det = C::one();
    let mut negate = false;
    for col in 0..k {
        let pivot_row = (col..k)
            .filter(|&r| !m[r * k + col].is_zero())
            .max_by(|&a, &b| {
                let fa = m[a * k + col].to_f64().abs();
                let fb = m[b * k + col].to_f64().abs();
                fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(pr) = pivot_row else {
            return C::zero();
        };
        if pr != col {
            for c in 0..k {
                m.swap(pr * k + c, col * k + c);
            }
            negate = !negate;
        }
        let pivot = m[col * k + col].clone();
        det = det.mul(&pivot);
        for r in (col + 1)..k {
            let factor = m[r * k + col].div(&pivot);
            if factor.is_zero() {
                continue;
            }
            for c in col..k {
                let sub = m[col * k + c].mul(&factor);
                m[r * k + c] = m[r * k + c].sub(&sub);
            }
        }
    }
    if negate {
        det.neg()
    } else {
        det
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        return Err(Error::cap(format!(
            "R^{dim} exceeds the dense multi-index cap of R^{MAX_DIM}"
        )));
    }
    Ok(())
}

impl<C: Coeff> fmt::Debug for Form<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0 (degree {} on R^{})", self.degree, self.dim);
        }
        let mut first = true;
        for (idx, p) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({p:?})")?;
            for &i in idx.indices() {
                write!(f, " dx{}", i + 1)?;
            }
        }
        Ok(())
    }
}
