//! Hamiltonian triples and the hyperhamiltonian vector field.
//!
//! A triple of scalar functions `H^alpha` on `R^{4n}` defines the field
//! `f(x) = sum_alpha Y_alpha g^{-1} grad H^alpha(x)`; with the euclidean
//! metric and the standard positive structure this is
//! `sum_alpha K_alpha grad H^alpha`, the componentwise equations of
//! motion. Such fields are divergence free, and for quadratic triples the
//! odd-power trace test certifies when a linear field is Hamiltonian for
//! no symplectic structure at all.

use crate::error::{Error, Result};
use crate::exterior::Polynomial;
use crate::structures::QuaternionicStructure;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Default step for central finite differences.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Default base tolerance for the odd-trace certificate; scaled by
/// `|A|^{2k+1}` before comparison.
pub const DEFAULT_CERTIFICATE_TOL: f64 = 1e-9;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Radial Hamiltonian triple: three smooth functions of the block radii
/// `rho_p = |xi_p|^2 / 2` with their exact partials `A^alpha_p`.
#[derive(Clone)]
pub struct RadialTriple {
    n: usize,
    values: [ScalarFn; 3],
    partials: [GradientFn; 3],
    /// Present when the radial profiles are polynomial in the `rho_p`;
    /// enables exact second derivatives for the field Jacobian.
    polys: Option<[Polynomial<f64>; 3]>,
}

impl RadialTriple {
    /// Radial triple from callables. A central finite-difference
    /// consistency check between values and partials runs at
    /// construction on a few fixed sample points.
    pub fn new(n: usize, values: [ScalarFn; 3], partials: [GradientFn; 3]) -> Result<Self> {
        let triple = RadialTriple {
            n,
            values,
            partials,
            polys: None,
        };
        triple.consistency_check()?;
        Ok(triple)
    }

    /// Radial triple whose profiles are polynomials in `(rho_1, …, rho_n)`.
    pub fn from_polynomials(polys: [Polynomial<f64>; 3]) -> Result<Self> {
        let n = polys[0].nvars();
        if polys.iter().any(|p| p.nvars() != n) {
            return Err(Error::structural(
                "radial polynomials must share the same block count",
            ));
        }
        if n == 0 {
            return Err(Error::structural("radial triple needs at least one block"));
        }
        let values: [ScalarFn; 3] = std::array::from_fn(|alpha| {
            let p = polys[alpha].clone();
            let f: ScalarFn = Arc::new(move |rho: &[f64]| p.eval_f64(rho));
            f
        });
        let partials: [GradientFn; 3] = std::array::from_fn(|alpha| {
            let grads: Vec<Polynomial<f64>> = (0..n).map(|p| polys[alpha].partial(p)).collect();
            let f: GradientFn =
                Arc::new(move |rho: &[f64]| grads.iter().map(|g| g.eval_f64(rho)).collect());
            f
        });
        Ok(RadialTriple {
            n,
            values,
            partials,
            polys: Some(polys),
        })
    }

    pub fn block_count(&self) -> usize {
        self.n
    }

    pub fn value(&self, alpha: usize, rho: &[f64]) -> f64 {
        (self.values[alpha])(rho)
    }

    /// `A^alpha_p = dH^alpha / d rho_p` evaluated at `rho`.
    pub fn partial(&self, alpha: usize, rho: &[f64]) -> Vec<f64> {
        (self.partials[alpha])(rho)
    }

    pub fn polynomials(&self) -> Option<&[Polynomial<f64>; 3]> {
        self.polys.as_ref()
    }

    fn consistency_check(&self) -> Result<()> {
        let h = 1e-5;
        for sample in 0..3 {
            let rho: Vec<f64> = (0..self.n)
                .map(|p| 0.25 + 0.5 * ((p + 1) as f64) + 0.1 * (sample as f64))
                .collect();
            for alpha in 0..3 {
                let stated = self.partial(alpha, &rho);
                if stated.len() != self.n {
                    return Err(Error::structural(format!(
                        "radial partial of H{} returns {} entries for {} blocks",
                        alpha + 1,
                        stated.len(),
                        self.n
                    )));
                }
                for p in 0..self.n {
                    let mut plus = rho.clone();
                    let mut minus = rho.clone();
                    plus[p] += h;
                    minus[p] -= h;
                    let fd = (self.value(alpha, &plus) - self.value(alpha, &minus)) / (2.0 * h);
                    let scale = stated[p].abs().max(1.0);
                    if (fd - stated[p]).abs() > 1e-4 * scale {
                        return Err(Error::structural(format!(
                            "radial partial A^{}_{} = {} disagrees with finite difference {}",
                            alpha + 1,
                            p + 1,
                            stated[p],
                            fd
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Generic callable triple, with optional exact gradients; without them,
/// gradients come from central finite differences.
#[derive(Clone)]
pub struct GenericTriple {
    dim: usize,
    h: [ScalarFn; 3],
    grad: Option<[GradientFn; 3]>,
    fd_step: f64,
}

impl GenericTriple {
    pub fn new(dim: usize, h: [ScalarFn; 3]) -> Self {
        GenericTriple {
            dim,
            h,
            grad: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_gradients(mut self, grad: [GradientFn; 3]) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }
}

/// A triple of Hamiltonians `H^1, H^2, H^3` on `R^{dim}`.
#[derive(Clone)]
pub enum HamiltonianTriple {
    /// `H^alpha = (1/2) x^T D^alpha x` with symmetric `D^alpha`.
    Quadratic([DMatrix<f64>; 3]),
    /// Functions of the block radii `rho_p`.
    Radial(RadialTriple),
    /// Polynomials in the coordinates.
    Polynomial([Polynomial<f64>; 3]),
    /// Arbitrary callables.
    Generic(GenericTriple),
}

impl HamiltonianTriple {
    /// Quadratic triple, validating symmetry of each `D^alpha`.
    pub fn quadratic(d: [DMatrix<f64>; 3]) -> Result<Self> {
        let dim = d[0].nrows();
        for (alpha, m) in d.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::structural(format!(
                    "D{} is {}x{}, expected {dim}x{dim}",
                    alpha + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            let sym = (m - m.transpose()).abs().max();
            if sym > 0.0 {
                return Err(Error::structural(format!(
                    "D{} is not symmetric (|D - D^T| = {sym:.3e})",
                    alpha + 1
                )));
            }
        }
        Ok(HamiltonianTriple::Quadratic(d))
    }

    pub fn polynomial(h: [Polynomial<f64>; 3]) -> Result<Self> {
        let dim = h[0].nvars();
        if h.iter().any(|p| p.nvars() != dim) {
            return Err(Error::structural(
                "polynomial Hamiltonians must share one coordinate count",
            ));
        }
        Ok(HamiltonianTriple::Polynomial(h))
    }

    /// Phase-space dimension the triple is defined on.
    pub fn dim(&self) -> usize {
        match self {
            HamiltonianTriple::Quadratic(d) => d[0].nrows(),
            HamiltonianTriple::Radial(r) => 4 * r.block_count(),
            HamiltonianTriple::Polynomial(h) => h[0].nvars(),
            HamiltonianTriple::Generic(g) => g.dim,
        }
    }

    /// Value of `H^alpha` at `x`.
    pub fn value(&self, alpha: usize, x: &[f64]) -> f64 {
        match self {
            HamiltonianTriple::Quadratic(d) => {
                let v = nalgebra::DVector::from_column_slice(x);
                0.5 * (v.transpose() * &d[alpha] * &v)[(0, 0)]
            }
            HamiltonianTriple::Radial(r) => r.value(alpha, &block_radii(x, r.block_count())),
            HamiltonianTriple::Polynomial(h) => h[alpha].eval_f64(x),
            HamiltonianTriple::Generic(g) => (g.h[alpha])(x),
        }
    }

    /// Gradient of `H^alpha` at `x`: exact for quadratic (`D^alpha x`),
    /// radial (chain rule through the block radii) and polynomial kinds;
    /// central finite differences for generic callables without stated
    /// gradients.
    pub fn gradient(&self, alpha: usize, x: &[f64]) -> Result<Vec<f64>> {
        let grad = match self {
            HamiltonianTriple::Quadratic(d) => {
                let v = nalgebra::DVector::from_column_slice(x);
                (&d[alpha] * v).as_slice().to_vec()
            }
            HamiltonianTriple::Radial(r) => {
                let n = r.block_count();
                let rho = block_radii(x, n);
                let a = r.partial(alpha, &rho);
                let mut g = vec![0.0; 4 * n];
                for p in 0..n {
                    for i in 0..4 {
                        g[4 * p + i] = a[p] * x[4 * p + i];
                    }
                }
                g
            }
            HamiltonianTriple::Polynomial(h) => (0..h[alpha].nvars())
                .map(|i| h[alpha].partial(i).eval_f64(x))
                .collect(),
            HamiltonianTriple::Generic(g) => match &g.grad {
                Some(grads) => (grads[alpha])(x),
                None => fd_gradient(&g.h[alpha], x, g.fd_step),
            },
        };
        if let Some(i) = grad.iter().position(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!(
                "gradient of H{} has component {} = {} at x = {x:?}",
                alpha + 1,
                i + 1,
                grad[i]
            )));
        }
        Ok(grad)
    }
}

/// Block radii `rho_p = |xi_p|^2 / 2`.
pub fn block_radii(x: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|p| 0.5 * x[4 * p..4 * p + 4].iter().map(|v| v * v).sum::<f64>())
        .collect()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: &ScalarFn, x: &[f64], step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    for i in 0..x.len() {
        plus[i] = x[i] + step;
        minus[i] = x[i] - step;
        g[i] = (f(&plus) - f(&minus)) / (2.0 * step);
        plus[i] = x[i];
        minus[i] = x[i];
    }
    g
}

/// Richardson-refined central difference: combines steps `h` and `h/2`
/// to cancel the leading truncation term.
pub fn fd_gradient_richardson(f: &ScalarFn, x: &[f64], step: f64) -> Vec<f64> {
    let coarse = fd_gradient(f, x, step);
    let fine = fd_gradient(f, x, step / 2.0);
    fine.iter()
        .zip(&coarse)
        .map(|(f2, f1)| (4.0 * f2 - f1) / 3.0)
        .collect()
}

/// An evaluable vector field with an optional exact Jacobian.
#[derive(Clone)]
pub struct VectorFieldEvaluator {
    dim: usize,
    f: FieldFn,
    jacobian: Option<JacobianFn>,
    fd_step: f64,
}

impl VectorFieldEvaluator {
    pub fn from_fn(dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        VectorFieldEvaluator {
            dim,
            f: Arc::new(move |x| Ok(f(x))),
            jacobian: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    /// The linear field `x -> A x`, with exact Jacobian `A`.
    pub fn linear(a: DMatrix<f64>) -> Self {
        let dim = a.nrows();
        let a2 = a.clone();
        VectorFieldEvaluator {
            dim,
            f: Arc::new(move |x: &[f64]| {
                Ok((&a * nalgebra::DVector::from_column_slice(x))
                    .as_slice()
                    .to_vec())
            }),
            jacobian: Some(Arc::new(move |_x: &[f64]| a2.clone())),
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_exact_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::structural(format!(
                "field on R^{} evaluated at a point of R^{}",
                self.dim,
                x.len()
            )));
        }
        (self.f)(x)
    }

    /// `Df(x)`: the exact Jacobian when available, otherwise central
    /// finite differences of the field.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if let Some(jac) = &self.jacobian {
            return Ok(jac(x));
        }
        let h = self.fd_step;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        for j in 0..self.dim {
            plus[j] = x[j] + h;
            minus[j] = x[j] - h;
            let fp = self.eval(&plus)?;
            let fm = self.eval(&minus)?;
            for i in 0..self.dim {
                m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
            plus[j] = x[j];
            minus[j] = x[j];
        }
        Ok(m)
    }

    /// Divergence: the trace of `Df(x)`.
    pub fn divergence(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jacobian(x)?.trace())
    }
}

/// Assemble the hyperhamiltonian vector field
/// `f(x) = sum_alpha Y_alpha g^{-1} grad H^alpha(x)`.
///
/// The triple decomposes as `X = X_1 + X_2 + X_3` with
/// `X_alpha ⌟ omega_alpha = dH^alpha`; the assembled field carries an
/// exact Jacobian whenever the triple's second derivatives are available
/// (quadratic, polynomial and polynomial-radial kinds).
pub fn hyperfield(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<VectorFieldEvaluator> {
    let dim = structure.dim();
    if triple.dim() != dim {
        return Err(Error::structural(format!(
            "Hamiltonian triple on R^{} for a structure on R^{dim}",
            triple.dim()
        )));
    }
    // Y_alpha g^{-1}, precomputed
    let yg: [DMatrix<f64>; 3] =
        std::array::from_fn(|alpha| structure.y(alpha) * structure.metric_inv());
    let triple_cl = triple.clone();
    let yg_cl = yg.clone();
    let f = move |x: &[f64]| -> Result<Vec<f64>> {
        let mut out = nalgebra::DVector::zeros(dim);
        for alpha in 0..3 {
            let g = triple_cl.gradient(alpha, x)?;
            out += &yg_cl[alpha] * nalgebra::DVector::from_column_slice(&g);
        }
        Ok(out.as_slice().to_vec())
    };

    let jacobian = exact_jacobian(&yg, triple, dim);
    Ok(VectorFieldEvaluator {
        dim,
        f: Arc::new(f),
        jacobian,
        fd_step: DEFAULT_FD_STEP,
    })
}

fn exact_jacobian(
    yg: &[DMatrix<f64>; 3],
    triple: &HamiltonianTriple,
    dim: usize,
) -> Option<JacobianFn> {
    match triple {
        HamiltonianTriple::Quadratic(d) => {
            let mut a = DMatrix::zeros(dim, dim);
            for alpha in 0..3 {
                a += &yg[alpha] * &d[alpha];
            }
            Some(Arc::new(move |_x: &[f64]| a.clone()))
        }
        HamiltonianTriple::Polynomial(h) => {
            // Hessian entries as polynomials, contracted with Y g^{-1}
            let mut hessians = Vec::with_capacity(3);
            for ham in h.iter() {
                let rows: Vec<Vec<Polynomial<f64>>> = (0..dim)
                    .map(|i| (0..dim).map(|j| ham.partial(i).partial(j)).collect())
                    .collect();
                hessians.push(rows);
            }
            let yg = yg.clone();
            Some(Arc::new(move |x: &[f64]| {
                let mut m = DMatrix::zeros(dim, dim);
                for (alpha, hess) in hessians.iter().enumerate() {
                    let mut hx = DMatrix::zeros(dim, dim);
                    for i in 0..dim {
                        for j in 0..dim {
                            hx[(i, j)] = hess[i][j].eval_f64(x);
                        }
                    }
                    m += &yg[alpha] * hx;
                }
                m
            }))
        }
        HamiltonianTriple::Radial(r) => {
            let polys = r.polynomials()?.clone();
            let n = r.block_count();
            let yg = yg.clone();
            Some(Arc::new(move |x: &[f64]| {
                // grad H^alpha over block p is A^alpha_p xi_p, so the Hessian
                // is A^alpha_p delta_pq I_4 + (dA^alpha_p/d rho_q) xi_p xi_q^T
                let rho = block_radii(x, n);
                let mut m = DMatrix::zeros(4 * n, 4 * n);
                for (alpha, ham) in polys.iter().enumerate() {
                    let mut hess = DMatrix::zeros(4 * n, 4 * n);
                    for p in 0..n {
                        let ap = ham.partial(p);
                        let apv = ap.eval_f64(&rho);
                        for i in 0..4 {
                            hess[(4 * p + i, 4 * p + i)] += apv;
                        }
                        for q in 0..n {
                            let apq = ap.partial(q).eval_f64(&rho);
                            if apq == 0.0 {
                                continue;
                            }
                            for i in 0..4 {
                                for j in 0..4 {
                                    hess[(4 * p + i, 4 * q + j)] +=
                                        apq * x[4 * p + i] * x[4 * q + j];
                                }
                            }
                        }
                    }
                    m += &yg[alpha] * hess;
                }
                m
            }))
        }
        HamiltonianTriple::Generic(_) => None,
    }
}

/// Linearisation `A = sum_alpha Y_alpha g^{-1} D^alpha` of a quadratic
/// triple, so that the hyperhamiltonian field is exactly `x -> A x`.
pub fn linearize(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<DMatrix<f64>> {
    let HamiltonianTriple::Quadratic(d) = triple else {
        return Err(Error::structural(
            "linearize requires a quadratic Hamiltonian triple",
        ));
    };
    let dim = structure.dim();
    if d[0].nrows() != dim {
        return Err(Error::structural(format!(
            "quadratic triple on R^{} for a structure on R^{dim}",
            d[0].nrows()
        )));
    }
    let mut a = DMatrix::zeros(dim, dim);
    for alpha in 0..3 {
        a += structure.y(alpha) * structure.metric_inv() * &d[alpha];
    }
    Ok(a)
}

/// Verdict of the odd-power trace test on a linear field `x -> A x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    /// `Tr(A^{2k+1})` is nonzero: the field is Hamiltonian for no
    /// symplectic structure whatsoever.
    NonHamiltonian { k: usize, trace: f64 },
    /// No nonzero odd trace up to `k_max`. This does NOT establish that
    /// the field is Hamiltonian; the test is one-directional.
    Inconclusive,
}

/// Run the odd-power trace test: find the smallest `k >= 1` with
/// `|Tr(A^{2k+1})|` above `tol * |A|_F^{2k+1}`.
///
/// Odd-power traces are determined by the spectrum, so `k_max` beyond the
/// matrix dimension adds no information; the default is `2 * dim`.
pub fn hamiltonianity_certificate(a: &DMatrix<f64>, k_max: usize, tol: f64) -> Certificate {
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Certificate::Inconclusive;
    }
    let a2 = a * a;
    let mut power = a * &a2; // A^3
    for k in 1..=k_max.max(1) {
        let trace = power.trace();
        if trace.abs() > tol * norm.powi(2 * k as i32 + 1) {
            return Certificate::NonHamiltonian { k, trace };
        }
        power = &power * &a2;
    }
    Certificate::Inconclusive
}

/// The full table of odd traces `Tr(A^{2k+1})`, `k = 1..=k_max`.
pub fn odd_trace_table(a: &DMatrix<f64>, k_max: usize) -> Vec<(usize, f64)> {
    let a2 = a * a;
    let mut power = a * &a2;
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        rows.push((k, power.trace()));
        power = &power * &a2;
    }
    rows
}

/// The quadratic triple from the non-Hamiltonianity example:
/// `H^1 = (1/2)[(x1)^2 - (x2)^2 + (x3)^2 - (x4)^2 + 2(x1 x4 - x2 x3)]`,
/// `H^2 = |x|^2 / 2`, `H^3 = 0`. Its linearisation has `Tr A = 0` but
/// `Tr(A^3) = -24`.
pub fn non_hamiltonian_example_triple() -> HamiltonianTriple {
    let d1 = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 1.0, //
            0.0, -1.0, -1.0, 0.0, //
            0.0, -1.0, 1.0, 0.0, //
            1.0, 0.0, 0.0, -1.0,
        ],
    );
    let d2 = DMatrix::identity(4, 4);
    let d3 = DMatrix::zeros(4, 4);
    HamiltonianTriple::quadratic([d1, d2, d3]).expect("example triple is symmetric")
}
