//! Hypersymplectic structures on `R^{4n}`: construction, validation,
//! classification and basis rotation.
//!
//! The standard structures are block reducible: each 4-dimensional block
//! carries either the self-dual triple `K` (positive type) or the
//! anti-self-dual triple `H` (negative type). The `K`/`H` matrices and the
//! `mu`/`eta` two-form bases are frozen to a fixed sign convention so the
//! matrices are reproducible entry by entry.

use crate::error::{Error, Result};
use crate::exterior::{Coeff, Form, MultiIndex, Polynomial};
use nalgebra::{DMatrix, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Orientation/type sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            '+' => Ok(Sign::Plus),
            '-' => Ok(Sign::Minus),
            other => Err(Error::structural(format!(
                "block sign must be '+' or '-', got '{other}'"
            ))),
        }
    }

    /// Parse a sign pattern like `"+-+"`.
    pub fn parse_pattern(s: &str) -> Result<Vec<Sign>> {
        s.chars().map(Sign::from_char).collect()
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if *self == Sign::Plus { '+' } else { '-' })
    }
}

/// The self-dual `K` triple: `K1 K2 = K3` and cyclic, `K^2 = -I`.
pub fn k_matrices() -> [Matrix4<f64>; 3] {
    [
        Matrix4::new(
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 0.0,
        ),
        Matrix4::new(
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, -1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0,
        ),
        Matrix4::new(
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        ),
    ]
}

/// The anti-self-dual `H` triple; commutes with every `K`.
pub fn h_matrices() -> [Matrix4<f64>; 3] {
    [
        Matrix4::new(
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, -1.0, 0.0, 0.0,
        ),
        Matrix4::new(
            0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0,
        ),
        Matrix4::new(
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 0.0,
        ),
    ]
}

fn block_triple(sign: Sign) -> [Matrix4<f64>; 3] {
    match sign {
        Sign::Plus => k_matrices(),
        Sign::Minus => h_matrices(),
    }
}

/// An element of the quaternionic span `Q`: coefficients on the admissible
/// basis `omega_alpha`, plus optional anti-self-dual coefficients used as
/// classification inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuaternionElement {
    pub coeffs: [f64; 3],
    pub anti: Option<[f64; 3]>,
}

impl QuaternionElement {
    pub fn new(coeffs: [f64; 3]) -> Self {
        QuaternionElement { coeffs, anti: None }
    }

    pub fn with_anti(coeffs: [f64; 3], anti: [f64; 3]) -> Self {
        QuaternionElement {
            coeffs,
            anti: Some(anti),
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// One validation check: name, worst residual, verdict at the tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

/// Result of [`QuaternionicStructure::validate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    fn push(&mut self, name: impl Into<String>, residual: f64) {
        self.checks.push(Check {
            name: name.into(),
            pass: residual <= self.tolerance,
            residual,
        });
    }
}

/// Default validation tolerance. The checks are exact algebraic
/// identities, so failures above this indicate construction bugs rather
/// than conditioning.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-10;

/// A hypersymplectic structure on `R^{4n}`: a metric together with three
/// symplectic matrices `J_alpha` whose complex structures
/// `Y_alpha = g^{-1} J_alpha` satisfy the quaternionic relations.
#[derive(Debug, Clone)]
pub struct QuaternionicStructure {
    n: usize,
    dim: usize,
    block_signs: Vec<Sign>,
    metric: DMatrix<f64>,
    metric_inv: DMatrix<f64>,
    j: [DMatrix<f64>; 3],
    y: [DMatrix<f64>; 3],
}

impl QuaternionicStructure {
    /// The standard block-reducible structure: block `p` carries the `K`
    /// triple where `block_signs[p]` is `+` and the `H` triple where `-`,
    /// with the euclidean metric.
    pub fn standard(n: usize, block_signs: &[Sign]) -> Result<Self> {
        if n == 0 {
            return Err(Error::structural("block count n must be positive"));
        }
        if block_signs.len() != n {
            return Err(Error::structural(format!(
                "{} block signs for n = {n}",
                block_signs.len()
            )));
        }
        let dim = 4 * n;
        let mut j = [
            DMatrix::zeros(dim, dim),
            DMatrix::zeros(dim, dim),
            DMatrix::zeros(dim, dim),
        ];
        for (p, &sign) in block_signs.iter().enumerate() {
            let triple = block_triple(sign);
            for alpha in 0..3 {
                j[alpha]
                    .view_mut((4 * p, 4 * p), (4, 4))
                    .copy_from(&triple[alpha]);
            }
        }
        let metric = DMatrix::identity(dim, dim);
        let y = j.clone();
        Ok(QuaternionicStructure {
            n,
            dim,
            block_signs: block_signs.to_vec(),
            metric_inv: metric.clone(),
            metric,
            j,
            y,
        })
    }

    /// A structure with explicit metric and symplectic matrices. The
    /// inputs are taken as-is; run [`validate`](Self::validate) to check
    /// the quaternionic relations.
    pub fn from_parts(
        n: usize,
        block_signs: Vec<Sign>,
        metric: DMatrix<f64>,
        j: [DMatrix<f64>; 3],
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::structural("block count n must be positive"));
        }
        let dim = 4 * n;
        if metric.nrows() != dim || metric.ncols() != dim {
            return Err(Error::structural(format!(
                "metric is {}x{}, expected {dim}x{dim}",
                metric.nrows(),
                metric.ncols()
            )));
        }
        for (alpha, m) in j.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::structural(format!(
                    "J{} is {}x{}, expected {dim}x{dim}",
                    alpha + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let metric_inv = metric.clone().try_inverse().ok_or_else(|| {
            Error::structural("metric is singular; a riemannian metric is required")
        })?;
        let y = [
            &metric_inv * &j[0],
            &metric_inv * &j[1],
            &metric_inv * &j[2],
        ];
        Ok(QuaternionicStructure {
            n,
            dim,
            block_signs,
            metric,
            metric_inv,
            j,
            y,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_signs(&self) -> &[Sign] {
        &self.block_signs
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn metric_inv(&self) -> &DMatrix<f64> {
        &self.metric_inv
    }

    pub fn is_euclidean(&self) -> bool {
        self.metric == DMatrix::identity(self.dim, self.dim)
    }

    /// Symplectic matrix of `omega_alpha` (`alpha` in `0..3`).
    pub fn j(&self, alpha: usize) -> &DMatrix<f64> {
        &self.j[alpha]
    }

    /// Complex structure `Y_alpha = g^{-1} J_alpha`.
    pub fn y(&self, alpha: usize) -> &DMatrix<f64> {
        &self.y[alpha]
    }

    /// The shared block sign: the positive/negative type label.
    /// Undefined (`None`) on mixed-sign structures.
    pub fn type_sign(&self) -> Option<Sign> {
        let first = *self.block_signs.first()?;
        self.block_signs
            .iter()
            .all(|&s| s == first)
            .then_some(first)
    }

    /// Sign of the top wedge power: `omega^{2n} = (2n)! s Omega` with
    /// `s` the product of the block signs. Coincides with the type sign
    /// for `n = 1` but not for every `n` (e.g. all-negative blocks with
    /// even `n` give `+1`).
    pub fn volume_sign(&self) -> Sign {
        let neg = self
            .block_signs
            .iter()
            .filter(|&&s| s == Sign::Minus)
            .count();
        if neg % 2 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    /// The two-form `omega_alpha = (1/2) (J_alpha)_{ij} dx^i ∧ dx^j` with
    /// coefficients converted exactly into the requested ring.
    pub fn omega_form<C: Coeff>(&self, alpha: usize) -> Result<Form<C>> {
        let j = &self.j[alpha];
        let mut terms = Vec::new();
        for i in 0..self.dim {
            for k in (i + 1)..self.dim {
                let entry = j[(i, k)];
                if entry != 0.0 {
                    let idx = MultiIndex::new(vec![i as u8, k as u8])?;
                    terms.push((idx, Polynomial::constant(self.dim, C::from_f64(entry))));
                }
            }
        }
        Form::from_terms(self.dim, 2, terms)
    }

    /// The canonical primitive `sigma_alpha = (1/2) (J_alpha)_{ij} x^i dx^j`,
    /// a global exact potential with `d sigma_alpha = omega_alpha`.
    pub fn sigma_form<C: Coeff>(&self, alpha: usize) -> Result<Form<C>> {
        let j = &self.j[alpha];
        let half = C::one().div(&C::from_int(2));
        let mut terms = Vec::new();
        for k in 0..self.dim {
            let mut coeff = Polynomial::zero(self.dim);
            for i in 0..self.dim {
                let entry = j[(i, k)];
                if entry != 0.0 {
                    let c = C::from_f64(entry).mul(&half);
                    coeff = coeff.add(&Polynomial::var(self.dim, i).scale(&c));
                }
            }
            if !coeff.is_zero() {
                terms.push((MultiIndex::single(k as u8), coeff));
            }
        }
        Form::from_terms(self.dim, 1, terms)
    }

    /// Check every defining identity and report per-check residuals:
    /// antisymmetry of the `J_alpha`, `Y^2 = -I`, the quaternionic
    /// relations, `g`-orthogonality, unimodularity with a shared type
    /// sign, and on block structures the per-block purity (each block in
    /// the self-dual or anti-self-dual span, never mixed) together with
    /// commutation of the two spans.
    pub fn validate(&self, tolerance: f64) -> ValidationReport {
        let mut report = ValidationReport {
            tolerance,
            checks: Vec::new(),
        };
        let dim = self.dim;
        let identity = DMatrix::<f64>::identity(dim, dim);

        for alpha in 0..3 {
            report.push(
                format!("antisymmetry_J{}", alpha + 1),
                max_abs(&(&self.j[alpha] + self.j[alpha].transpose())),
            );
        }
        for alpha in 0..3 {
            report.push(
                format!("complex_structure_Y{}", alpha + 1),
                max_abs(&(&self.y[alpha] * &self.y[alpha] + &identity)),
            );
        }
        // Y_a Y_b = eps_{abc} Y_c - delta_{ab} I
        let mut worst = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                let mut expected = DMatrix::<f64>::zeros(dim, dim);
                if a == b {
                    expected -= &identity;
                } else {
                    let (c, sign) = levi_civita_completion(a, b);
                    expected += self.y[c].scale(sign);
                }
                worst = worst.max(max_abs(&(&self.y[a] * &self.y[b] - expected)));
            }
        }
        report.push("quaternion_relations", worst);

        for alpha in 0..3 {
            report.push(
                format!("g_orthogonality_Y{}", alpha + 1),
                max_abs(
                    &(self.y[alpha].transpose() * &self.metric * &self.y[alpha] - &self.metric),
                ),
            );
        }

        // Unimodularity and shared type sign: each omega_alpha
        // must satisfy pf(J_alpha) = s sqrt(det g) with one s for all three.
        let sqrt_det_g = self.metric.determinant().max(0.0).sqrt();
        let pfaffians: Vec<f64> = (0..3).map(|a| pfaffian(&self.j[a])).collect();
        let unimodular_res = pfaffians
            .iter()
            .map(|p| (p.abs() - sqrt_det_g).abs())
            .fold(0.0, f64::max);
        report.push("unimodularity", unimodular_res);
        let sign_res = if pfaffians.iter().all(|p| *p > 0.0) || pfaffians.iter().all(|p| *p < 0.0) {
            0.0
        } else {
            pfaffians
                .iter()
                .map(|p| p.abs())
                .fold(f64::INFINITY, f64::min)
        };
        report.push("shared_type_sign", sign_res);

        if self.is_block_diagonal() {
            // Per-block: the three 4x4 blocks of J must sit purely in the
            // self-dual or purely in the anti-self-dual span.
            let mut purity = 0.0f64;
            for p in 0..self.n {
                for alpha in 0..3 {
                    let block = self.j[alpha].view((4 * p, 4 * p), (4, 4)).into_owned();
                    let b4: Matrix4<f64> = Matrix4::from_iterator(block.iter().copied());
                    if let Ok((a, b)) = so4_decompose(&b4, tolerance) {
                        let na = norm3(&a);
                        let nb = norm3(&b);
                        purity = purity.max(na.min(nb));
                    } else {
                        purity = f64::INFINITY;
                    }
                }
            }
            report.push("block_type_purity", purity);

            // The two spans commute: [K_a, H_b] = 0.
            let ks = k_matrices();
            let hs = h_matrices();
            let mut comm = 0.0f64;
            for ka in &ks {
                for hb in &hs {
                    comm = comm.max((ka * hb - hb * ka).abs().max());
                }
            }
            report.push("kh_commutation", comm);
        }

        report
    }

    fn is_block_diagonal(&self) -> bool {
        for j in &self.j {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    if r / 4 != c / 4 && j[(r, c)] != 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Pass to an equivalent admissible basis:
    /// `omega'_alpha = sum_beta R_{alpha beta} omega_beta` for a proper
    /// rotation `R` of the sphere in `Q`.
    pub fn rotate_basis(&self, r: &Matrix3<f64>, tol: f64) -> Result<Self> {
        let orth = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = r.determinant();
        if orth > tol || (det - 1.0).abs() > tol {
            return Err(Error::structural(format!(
                "R is not a rotation: |R^T R - I| = {orth:.3e}, det R = {det}"
            )));
        }
        let mut j = [
            DMatrix::zeros(self.dim, self.dim),
            DMatrix::zeros(self.dim, self.dim),
            DMatrix::zeros(self.dim, self.dim),
        ];
        for (alpha, out) in j.iter_mut().enumerate() {
            for beta in 0..3 {
                *out += self.j[beta].scale(r[(alpha, beta)]);
            }
        }
        let y = [
            &self.metric_inv * &j[0],
            &self.metric_inv * &j[1],
            &self.metric_inv * &j[2],
        ];
        Ok(QuaternionicStructure {
            n: self.n,
            dim: self.dim,
            block_signs: self.block_signs.clone(),
            metric: self.metric.clone(),
            metric_inv: self.metric_inv.clone(),
            j,
            y,
        })
    }

    /// Matrix representative `sum_alpha c_alpha Y_alpha` of an element of `Q`.
    pub fn element_matrix(&self, q: &QuaternionElement) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for alpha in 0..3 {
            m += self.y[alpha].scale(q.coeffs[alpha]);
        }
        m
    }
}

fn levi_civita_completion(a: usize, b: usize) -> (usize, f64) {
    debug_assert!(a != b);
    let c = 3 - a - b;
    let sign = match (a, b) {
        (0, 1) | (1, 2) | (2, 0) => 1.0,
        _ => -1.0,
    };
    (c, sign)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn norm3(v: &[f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Scalar product on `Q`: `(q1, q2) = a · b` on a shared admissible basis.
/// Agrees with `(4n)^{-1} Tr(Q1^T Q2)` on the matrix representatives.
pub fn scalar_product(
    q1: &QuaternionElement,
    q2: &QuaternionElement,
    _structure: &QuaternionicStructure,
) -> f64 {
    q1.coeffs.iter().zip(&q2.coeffs).map(|(a, b)| a * b).sum()
}

/// Outcome of the unimodularity classification on `R^4`: a
/// unimodular combination `Y = a·K + b·H` lies on exactly one of the two
/// unit spheres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnimodularClass {
    PositiveType,
    NegativeType,
    NotUnimodular,
}

/// Classify `Y = a·K + b·H` by the norms of the coefficient vectors:
/// positive type iff `|b| = 0, |a| = 1` within `tol`, negative type iff
/// `|a| = 0, |b| = 1`.
pub fn classify_unimodular(a: &[f64; 3], b: &[f64; 3], tol: f64) -> UnimodularClass {
    let na = norm3(a);
    let nb = norm3(b);
    if nb <= tol && (na - 1.0).abs() <= tol {
        UnimodularClass::PositiveType
    } else if na <= tol && (nb - 1.0).abs() <= tol {
        UnimodularClass::NegativeType
    } else {
        UnimodularClass::NotUnimodular
    }
}

/// Brute-force unimodularity check on the assembled matrix: whether
/// `Y = a·K + b·H` satisfies `Y^T Y = I` within `tol`, and if so of which
/// type (by dominance of the coefficient vectors).
pub fn classify_unimodular_brute_force(a: &[f64; 3], b: &[f64; 3], tol: f64) -> UnimodularClass {
    let ks = k_matrices();
    let hs = h_matrices();
    let mut y = Matrix4::<f64>::zeros();
    for alpha in 0..3 {
        y += ks[alpha].scale(a[alpha]) + hs[alpha].scale(b[alpha]);
    }
    let residual = (y.transpose() * y - Matrix4::identity()).abs().max();
    if residual > tol {
        return UnimodularClass::NotUnimodular;
    }
    if norm3(a) >= norm3(b) {
        UnimodularClass::PositiveType
    } else {
        UnimodularClass::NegativeType
    }
}

/// Decompose a 4x4 antisymmetric matrix as `a·K + b·H` (the
/// `so(4) = su(2)+ ⊕ su(2)-` split). The decomposition is unique; the
/// input must be antisymmetric within `tol`.
pub fn so4_decompose(m: &Matrix4<f64>, tol: f64) -> Result<([f64; 3], [f64; 3])> {
    let asym = (m + m.transpose()).abs().max();
    if asym > tol {
        return Err(Error::structural(format!(
            "matrix is not antisymmetric: |M + M^T| = {asym:.3e}"
        )));
    }
    let ks = k_matrices();
    let hs = h_matrices();
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    for alpha in 0..3 {
        a[alpha] = (ks[alpha].transpose() * m).trace() / 4.0;
        b[alpha] = (hs[alpha].transpose() * m).trace() / 4.0;
    }
    Ok((a, b))
}

/// Reassemble `a·K + b·H`.
pub fn so4_compose(a: &[f64; 3], b: &[f64; 3]) -> Matrix4<f64> {
    let ks = k_matrices();
    let hs = h_matrices();
    let mut m = Matrix4::zeros();
    for alpha in 0..3 {
        m += ks[alpha].scale(a[alpha]) + hs[alpha].scale(b[alpha]);
    }
    m
}

/// Pfaffian of an antisymmetric matrix of even order, by Laplace-style
/// expansion over index subsets with memoisation. Exact for integer
/// matrices (all intermediate values are integers).
pub fn pfaffian(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "pfaffian of a non-square matrix");
    if !n.is_multiple_of(2) {
        return 0.0;
    }
    if n == 0 {
        return 1.0;
    }
    assert!(n <= 32, "pfaffian mask width exceeded");
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut memo: HashMap<u32, f64> = HashMap::new();
    pf_rec(m, full, &mut memo)
}

fn pf_rec(m: &DMatrix<f64>, mask: u32, memo: &mut HashMap<u32, f64>) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & !(1u32 << i);
    let mut acc = 0.0;
    let mut sign = 1.0;
    let mut bits = rest;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let entry = m[(i, j)];
        if entry != 0.0 {
            acc += sign * entry * pf_rec(m, rest & !(1u32 << j), memo);
        }
        sign = -sign;
    }
    memo.insert(mask, acc);
    acc
}
