//! Closed-form quaternionic oscillators.
//!
//! For radial Hamiltonians `H^alpha(rho_1, …, rho_n)` on a standard
//! block-reducible structure, every block radius is conserved, so the
//! per-block coefficients `c^alpha_p = A^alpha_p(b_1, …, b_n)` freeze
//! along the flow and each block rotates rigidly:
//! `xi_p(t) = [cos(nu_p t) I + sin(nu_p t) L_p] xi_p(0)` with
//! `nu_p = |c_p|` and `L_p` the unit combination of the block triple
//! (`L_p^2 = -I`). Orbits are great circles per block; across blocks the
//! closure is a point, a circle or a torus depending on the rational
//! relations among the excited frequencies.

use crate::error::{Error, Result};
use crate::fields::{block_radii, HamiltonianTriple};
use crate::structures::{so4_decompose, QuaternionicStructure};
use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

/// Default parameters of the rational-relation test.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;
pub const DEFAULT_RESONANCE_QMAX: u64 = 1_000_000;

/// Closed-form solution data for one 4-dimensional block.
#[derive(Debug, Clone)]
pub struct BlockSolution {
    /// Initial block state `xi_p(0)`.
    pub xi0: Vector4<f64>,
    /// Conserved block radius `b_p = rho_p(0)`.
    pub b: f64,
    /// Frozen coefficients `c^alpha_p = A^alpha_p(b_1, …, b_n)`.
    pub c: [f64; 3],
    /// Frequency `nu_p = |c_p|`.
    pub nu: f64,
    /// Unit rotation generator (antisymmetric, `L^2 = -I`); absent for
    /// frozen blocks (`nu_p = 0`).
    pub generator: Option<Matrix4<f64>>,
}

impl BlockSolution {
    /// Block state at time `t`.
    pub fn at(&self, t: f64) -> Vector4<f64> {
        match &self.generator {
            Some(l) => {
                let angle = self.nu * t;
                self.xi0.scale(angle.cos()) + (l * self.xi0).scale(angle.sin())
            }
            None => self.xi0,
        }
    }

    /// Whether the block carries energy and actually rotates.
    pub fn is_excited(&self) -> bool {
        self.b > 0.0 && self.nu > 0.0
    }
}

/// Closed-form quaternionic oscillator solution.
#[derive(Debug, Clone)]
pub struct OscillatorSolution {
    blocks: Vec<BlockSolution>,
}

impl OscillatorSolution {
    pub fn blocks(&self) -> &[BlockSolution] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        4 * self.blocks.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.nu).collect()
    }

    pub fn conserved_radii(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.b).collect()
    }

    /// Full state at time `t`.
    pub fn evaluate_at(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for block in &self.blocks {
            out.extend(block.at(t).iter().copied());
        }
        out
    }

    /// States on a time grid.
    pub fn sample(&self, times: &[f64]) -> Vec<Vec<f64>> {
        times.iter().map(|&t| self.evaluate_at(t)).collect()
    }
}

/// Solve the quaternionic oscillator in closed form.
///
/// Requires a euclidean block-diagonal structure (the standard ones and
/// their basis rotations) and a radial triple; each block must carry a
/// pure self-dual or anti-self-dual triple.
pub fn solve(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
    x0: &[f64],
) -> Result<OscillatorSolution> {
    let HamiltonianTriple::Radial(radial) = triple else {
        return Err(Error::structural(
            "closed-form solutions require a radial Hamiltonian triple",
        ));
    };
    let n = structure.n();
    if radial.block_count() != n {
        return Err(Error::structural(format!(
            "radial triple with {} blocks on a structure with {n}",
            radial.block_count()
        )));
    }
    if x0.len() != 4 * n {
        return Err(Error::structural(format!(
            "initial state has {} components, expected {}",
            x0.len(),
            4 * n
        )));
    }
    if !structure.is_euclidean() {
        return Err(Error::unsupported(
            "closed-form solutions assume the euclidean metric",
        ));
    }

    // conserved radii fix the coefficients once and for all
    let b = block_radii(x0, n);
    let mut blocks = Vec::with_capacity(n);
    for p in 0..n {
        let c: [f64; 3] = std::array::from_fn(|alpha| radial.partial(alpha, &b)[p]);
        let nu = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        let xi0 = Vector4::from_column_slice(&x0[4 * p..4 * p + 4]);

        let generator = if nu > 0.0 {
            // L_p = (1/nu) sum_alpha c^alpha (block of Y_alpha)
            let mut l = Matrix4::zeros();
            for alpha in 0..3 {
                let block = structure.y(alpha).view((4 * p, 4 * p), (4, 4)).into_owned();
                let block4 = Matrix4::from_fn(|r, cidx| block[(r, cidx)]);
                // reject structures whose blocks are not pure K/H triples
                let (a_part, b_part) = so4_decompose(&block4, 1e-10)?;
                let na: f64 = a_part.iter().map(|v| v * v).sum::<f64>();
                let nb: f64 = b_part.iter().map(|v| v * v).sum::<f64>();
                if na.min(nb) > 1e-20 {
                    return Err(Error::unsupported(
                        "block mixes self-dual and anti-self-dual parts; not block reducible",
                    ));
                }
                l += block4.scale(c[alpha] / nu);
            }
            let involution = (l * l + Matrix4::identity()).abs().max();
            if involution > 1e-9 {
                return Err(Error::structural(format!(
                    "block generator fails L^2 = -I by {involution:.3e}"
                )));
            }
            Some(l)
        } else {
            None
        };

        blocks.push(BlockSolution {
            xi0,
            b: b[p],
            c,
            nu,
            generator,
        });
    }
    Ok(OscillatorSolution { blocks })
}

/// Largest norm, over the given states, of the component of each excited
/// block outside the plane spanned by `xi_p(0)` and `L_p xi_p(0)`. The
/// closed-form motion is a great circle in that plane, so this measures
/// how far a trajectory strays from it. Blocks with `xi_p(0) = 0`
/// contribute zero by convention.
pub fn great_circle_residual(sol: &OscillatorSolution, states: &[Vec<f64>]) -> Result<f64> {
    let dim = sol.dim();
    let mut worst: f64 = 0.0;
    for state in states {
        if state.len() != dim {
            return Err(Error::structural(format!(
                "state has {} components, expected {dim}",
                state.len()
            )));
        }
        for (p, block) in sol.blocks.iter().enumerate() {
            let norm0 = block.xi0.norm();
            if norm0 == 0.0 {
                continue;
            }
            let xi = Vector4::from_column_slice(&state[4 * p..4 * p + 4]);
            let u1 = block.xi0 / norm0;
            let residual = match &block.generator {
                Some(l) => {
                    let lxi0 = l * block.xi0;
                    let u2 = lxi0 / lxi0.norm();
                    (xi - u1.scale(xi.dot(&u1)) - u2.scale(xi.dot(&u2))).norm()
                }
                // frozen block: the "circle" degenerates to the point xi0
                None => (xi - u1.scale(xi.dot(&u1))).norm(),
            };
            worst = worst.max(residual);
        }
    }
    Ok(worst)
}

/// Orbit geometry classification.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OrbitClass {
    /// Number of excited blocks (`b_p > 0` and `nu_p > 0`).
    pub excited: usize,
    /// Number of rational-equivalence classes among the excited
    /// frequencies ("numerically rational" at the stated parameters).
    pub classes: usize,
    /// Parameters of the rational-relation test.
    pub tol: f64,
    pub q_max: u64,
}

impl OrbitClass {
    /// Invariant-manifold descriptor: the common level set of the block
    /// radii, a product of one three-sphere per excited block.
    pub fn manifold_descriptor(&self) -> String {
        match self.excited {
            0 => "point".to_string(),
            m => format!("V^{m} = {}", vec!["S^3"; m].join(" x ")),
        }
    }

    /// Orbit-closure descriptor: a circle when all excited frequencies
    /// are rationally related, a dense winding of a torus otherwise.
    pub fn closure_descriptor(&self) -> String {
        match (self.excited, self.classes) {
            (0, _) => "fixed point".to_string(),
            (_, 1) => "closed orbit (circle)".to_string(),
            (_, k) => format!("dense in a T^{k} torus"),
        }
    }
}

/// Classify the orbit of a closed-form solution: count excited blocks,
/// then partition their frequencies into rational classes.
///
/// Two frequencies are "numerically rational" when some continued-
/// fraction convergent `a/b` of their ratio with `b <= q_max` matches it
/// within `tol / b^2`. The denominator-squared scaling separates exact
/// rationals (error 0) from generic irrationals, whose best convergents
/// only ever achieve errors of order `1/b^2`.
pub fn classify_orbit(sol: &OscillatorSolution, tol: f64, q_max: u64) -> OrbitClass {
    let excited: Vec<f64> = sol
        .blocks
        .iter()
        .filter(|b| b.is_excited())
        .map(|b| b.nu)
        .collect();
    let mut representatives: Vec<f64> = Vec::new();
    for &nu in &excited {
        let related = representatives
            .iter()
            .any(|&rep| rationally_related(nu / rep, tol, q_max).is_some());
        if !related {
            representatives.push(nu);
        }
    }
    OrbitClass {
        excited: excited.len(),
        classes: representatives.len(),
        tol,
        q_max,
    }
}

/// Continued-fraction rational-relation test: the reduced fraction
/// `a/b`, `b <= q_max`, with `|r - a/b| <= tol / b^2`, if one exists.
pub fn rationally_related(r: f64, tol: f64, q_max: u64) -> Option<(i64, u64)> {
    if !r.is_finite() {
        return None;
    }
    let negative = r < 0.0;
    let mut x = r.abs();
    // convergents p_k / q_k of the continued fraction of |r|:
    // p_k = a_k p_{k-1} + p_{k-2}, seeded with p_{-2} = 0, p_{-1} = 1
    let (mut p_prev, mut p_curr): (i128, i128) = (0, 1);
    let (mut q_prev, mut q_curr): (i128, i128) = (1, 0);
    for _ in 0..64 {
        let a = x.floor();
        if a > i64::MAX as f64 {
            return None;
        }
        let ai = a as i128;
        let p_next = ai * p_curr + p_prev;
        let q_next = ai * q_curr + q_prev;
        if q_next > q_max as i128 {
            return None;
        }
        (p_prev, p_curr) = (p_curr, p_next);
        (q_prev, q_curr) = (q_curr, q_next);

        let num = p_curr as f64;
        let den = q_curr as f64;
        let err = (r.abs() - num / den).abs();
        if err <= tol / (den * den) {
            let sign = if negative { -1 } else { 1 };
            return Some((sign * p_curr as i64, q_curr as u64));
        }
        let frac = x - a;
        if frac <= f64::EPSILON * x.max(1.0) {
            return None; // expansion terminated without a match
        }
        x = 1.0 / frac;
    }
    None
}

/// The two conserved pair energies of the four-dimensional case with
/// `H^1 = |x|^2 / 2`: `E_a = ((x1)^2 + (x2)^2) / 2` and
/// `E_b = ((x3)^2 + (x4)^2) / 2`, the actions of the two harmonic
/// oscillators the flow reduces to.
pub fn harmonic_pair_energies(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() != 4 {
        return Err(Error::structural(format!(
            "pair energies are defined on R^4, got R^{}",
            x.len()
        )));
    }
    Ok((
        0.5 * (x[0] * x[0] + x[1] * x[1]),
        0.5 * (x[2] * x[2] + x[3] * x[3]),
    ))
}

/// Convenience: the radial triple `H^1 = sum_p w_p rho_p` (linear
/// profile, one weight per block), giving frequencies `|w_p|`.
pub fn linear_radial_triple(weights: &[f64]) -> Result<HamiltonianTriple> {
    use crate::exterior::Polynomial;
    let n = weights.len();
    let mut h1 = Polynomial::zero(n);
    for (p, &w) in weights.iter().enumerate() {
        h1 = h1.add(&Polynomial::var(n, p).scale(&w));
    }
    Ok(HamiltonianTriple::Radial(
        crate::fields::RadialTriple::from_polynomials([
            h1,
            Polynomial::zero(n),
            Polynomial::zero(n),
        ])?,
    ))
}
