//! Form-level conservation checks.
//!
//! For a polynomial triple on a standard structure, the engine builds the
//! closed (4n-1)-form `Theta = sum dH^alpha ∧ zeta_alpha` with
//! `zeta_alpha` the (2n-1)-fold wedge power of `omega_alpha`, converts
//! between vector fields and (4n-1)-forms through the volume form, forms
//! the bracket that conversion induces, and assembles the extended-phase-
//! space forms `phi` and `vartheta` whose kernel equation characterises
//! the flow. In rational mode every residual here is an exact zero; float
//! mode carries a documented 1e-10 tolerance.

use crate::error::{Error, Result};
use crate::exterior::{Coeff, Form, MultiIndex, Polynomial, MAX_DIM};
use crate::fields::{HamiltonianTriple, VectorFieldEvaluator};
use crate::structures::{QuaternionicStructure, Sign};

/// Documented residual tolerance for float-mode checks.
pub const FLOAT_MODE_TOL: f64 = 1e-10;

/// A vector field with polynomial components, the representation the
/// form-level checks work on.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField<C: Coeff> {
    dim: usize,
    components: Vec<Polynomial<C>>,
}

impl<C: Coeff> PolyField<C> {
    pub fn new(components: Vec<Polynomial<C>>) -> Result<Self> {
        let dim = components.len();
        if components.iter().any(|p| p.nvars() != dim) {
            return Err(Error::structural(
                "field components must be polynomials in dim variables",
            ));
        }
        Ok(PolyField { dim, components })
    }

    /// The linear field `x -> A x` with exactly converted entries.
    pub fn linear(a: &nalgebra::DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim {
            return Err(Error::structural("linear field matrix must be square"));
        }
        let components = (0..dim)
            .map(|i| {
                let mut p = Polynomial::zero(dim);
                for j in 0..dim {
                    let entry = a[(i, j)];
                    if entry != 0.0 {
                        p = p.add(&Polynomial::var(dim, j).scale(&C::from_f64(entry)));
                    }
                }
                p
            })
            .collect();
        Ok(PolyField { dim, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Polynomial<C>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|p| p.is_zero())
    }

    /// Vector-field commutator
    /// `[v, w]^i = v^j d_j w^i - w^j d_j v^i`, computed exactly.
    pub fn commutator(&self, other: &PolyField<C>) -> Result<PolyField<C>> {
        if self.dim != other.dim {
            return Err(Error::structural(format!(
                "commutator of fields on R^{} and R^{}",
                self.dim, other.dim
            )));
        }
        let mut components = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut acc = Polynomial::zero(self.dim);
            for j in 0..self.dim {
                acc = acc.add(&self.components[j].mul(&other.components[i].partial(j)));
                acc = acc.sub(&other.components[j].mul(&self.components[i].partial(j)));
            }
            components.push(acc);
        }
        Ok(PolyField {
            dim: self.dim,
            components,
        })
    }

    /// Wrap as an evaluable field (with exact polynomial Jacobian).
    pub fn to_evaluator(&self) -> VectorFieldEvaluator {
        let dim = self.dim;
        let comps: Vec<Polynomial<f64>> = self
            .components
            .iter()
            .map(|p| p.map_coeffs(|c| c.to_f64()))
            .collect();
        let jac_polys: Vec<Vec<Polynomial<f64>>> = comps
            .iter()
            .map(|p| (0..dim).map(|j| p.partial(j)).collect())
            .collect();
        let comps_eval = comps.clone();
        VectorFieldEvaluator::from_fn(dim, move |x: &[f64]| {
            comps_eval.iter().map(|p| p.eval_f64(x)).collect()
        })
        .with_jacobian(move |x: &[f64]| {
            nalgebra::DMatrix::from_fn(dim, dim, |i, j| jac_polys[i][j].eval_f64(x))
        })
    }
}

/// Convert a Hamiltonian triple into polynomials over the coefficient
/// ring `C`. Quadratic and coordinate-polynomial kinds convert exactly
/// (every `f64` is a rational); radial kinds compose their polynomial
/// profile with `rho_p(x)`; generic callables are rejected.
pub fn polynomial_triple<C: Coeff>(
    triple: &HamiltonianTriple,
    dim: usize,
) -> Result<[Polynomial<C>; 3]> {
    match triple {
        HamiltonianTriple::Quadratic(d) => {
            if d[0].nrows() != dim {
                return Err(Error::structural(format!(
                    "quadratic triple on R^{}, expected R^{dim}",
                    d[0].nrows()
                )));
            }
            let half = C::one().div(&C::from_int(2));
            Ok(std::array::from_fn(|alpha| {
                let mut p = Polynomial::zero(dim);
                for i in 0..dim {
                    for j in 0..dim {
                        let entry = d[alpha][(i, j)];
                        if entry != 0.0 {
                            let c = C::from_f64(entry).mul(&half);
                            let term = Polynomial::var(dim, i)
                                .mul(&Polynomial::var(dim, j))
                                .scale(&c);
                            p = p.add(&term);
                        }
                    }
                }
                p
            }))
        }
        HamiltonianTriple::Polynomial(h) => {
            if h[0].nvars() != dim {
                return Err(Error::structural(format!(
                    "polynomial triple on R^{}, expected R^{dim}",
                    h[0].nvars()
                )));
            }
            Ok(std::array::from_fn(|alpha| {
                h[alpha].map_coeffs(|c| C::from_f64(*c))
            }))
        }
        HamiltonianTriple::Radial(r) => {
            let Some(profiles) = r.polynomials() else {
                return Err(Error::unsupported(
                    "radial triple with callable profiles has no polynomial form",
                ));
            };
            let n = r.block_count();
            if 4 * n != dim {
                return Err(Error::structural(format!(
                    "radial triple with {n} blocks, expected R^{dim}"
                )));
            }
            let half = C::one().div(&C::from_int(2));
            // rho_p(x) = |xi_p|^2 / 2 as exact polynomials
            let rho: Vec<Polynomial<C>> = (0..n)
                .map(|p| {
                    let mut acc = Polynomial::zero(dim);
                    for i in 0..4 {
                        let v = Polynomial::var(dim, 4 * p + i);
                        acc = acc.add(&v.mul(&v));
                    }
                    acc.scale(&half)
                })
                .collect();
            Ok(std::array::from_fn(|alpha| {
                profiles[alpha]
                    .map_coeffs(|c| C::from_f64(*c))
                    .compose(&rho)
            }))
        }
        HamiltonianTriple::Generic(_) => Err(Error::unsupported(
            "generic callable triples have no polynomial form; use sampled mode",
        )),
    }
}

/// `zeta_alpha = omega_alpha ∧ … ∧ omega_alpha` with `2n - 1` factors,
/// a form of degree `4n - 2`. For `n = 1` this is `omega_alpha` itself.
pub fn build_zeta<C: Coeff>(structure: &QuaternionicStructure) -> Result<[Form<C>; 3]> {
    let dim = structure.dim();
    if dim > MAX_DIM {
        return Err(Error::cap(format!(
            "zeta on R^{dim} exceeds the form-engine cap of R^{MAX_DIM}"
        )));
    }
    let n = structure.n();
    let mut out = Vec::with_capacity(3);
    for alpha in 0..3 {
        let omega = structure.omega_form::<C>(alpha)?;
        let mut zeta = omega.clone();
        for _ in 1..(2 * n - 1) {
            zeta = zeta.wedge(&omega)?;
        }
        out.push(zeta);
    }
    out.try_into().map_err(|_| Error::structural("zeta triple"))
}

/// The conserved form `Theta = sum_alpha dH^alpha ∧ zeta_alpha` of degree
/// `4n - 1`; closed by construction (`d Theta = 0` coefficient-exactly).
pub fn build_theta<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<Form<C>> {
    let dim = structure.dim();
    let h = polynomial_triple::<C>(triple, dim)?;
    let zeta = build_zeta::<C>(structure)?;
    let mut theta = Form::zero(dim, dim - 1)?;
    for alpha in 0..3 {
        let dh = Form::scalar(dim, h[alpha].clone())?.exterior_derivative();
        theta = theta.add(&dh.wedge(&zeta[alpha])?)?;
    }
    Ok(theta)
}

/// The form `X ⌟ Omega` associated to a field through the volume form.
pub fn field_to_form<C: Coeff>(field: &PolyField<C>) -> Result<Form<C>> {
    let volume = Form::volume(field.dim())?;
    volume.interior(field.components())
}

/// Invert `X ⌟ Omega = chi`: recover the unique field from a form of
/// degree `dim - 1`.
pub fn form_to_field<C: Coeff>(chi: &Form<C>) -> Result<PolyField<C>> {
    let dim = chi.dim();
    if chi.degree() != dim - 1 {
        return Err(Error::structural(format!(
            "degree-{} form on R^{dim} is not in the image of the volume contraction",
            chi.degree()
        )));
    }
    // e_i ⌟ Omega = (-1)^i dx^{0..î..dim-1}
    let mut components = Vec::with_capacity(dim);
    for i in 0..dim {
        let full = MultiIndex::full(dim);
        let pos = full
            .indices()
            .iter()
            .position(|&a| a as usize == i)
            .expect("full index contains every axis");
        let (sign, reduced) = full.remove_at(pos);
        let coeff = chi
            .coefficient(&reduced)
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(dim));
        components.push(if sign < 0 { coeff.neg() } else { coeff });
    }
    PolyField::new(components)
}

/// The bracket on (4n-1)-forms induced by the field/form correspondence:
/// convert both forms to fields, commute, convert back.
pub fn bracket<C: Coeff>(chi: &Form<C>, psi: &Form<C>) -> Result<Form<C>> {
    let vchi = form_to_field(chi)?;
    let vpsi = form_to_field(psi)?;
    field_to_form(&vchi.commutator(&vpsi)?)
}

/// The hyperhamiltonian field of a polynomial triple, as exact
/// polynomials: `X = sum_alpha Y_alpha g^{-1} grad H^alpha`.
pub fn hyperfield_poly<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<PolyField<C>> {
    let dim = structure.dim();
    let h = polynomial_triple::<C>(triple, dim)?;
    let mut components = vec![Polynomial::zero(dim); dim];
    for alpha in 0..3 {
        let grad: Vec<Polynomial<C>> = (0..dim).map(|j| h[alpha].partial(j)).collect();
        // Y g^{-1} entries converted exactly from their f64 values
        let yg = structure.y(alpha) * structure.metric_inv();
        for i in 0..dim {
            for j in 0..dim {
                let entry = yg[(i, j)];
                if entry != 0.0 {
                    components[i] = components[i].add(&grad[j].scale(&C::from_f64(entry)));
                }
            }
        }
    }
    PolyField::new(components)
}

/// The extended-phase-space axis layout: coordinates `x^1..x^{4n}` then `t`.
fn extended_dim(structure: &QuaternionicStructure) -> Result<usize> {
    let ext = structure.dim() + 1;
    if ext > MAX_DIM {
        return Err(Error::cap(format!(
            "extended phase space R^{ext} exceeds the form-engine cap of R^{MAX_DIM}"
        )));
    }
    Ok(ext)
}

fn six_s_n<C: Coeff>(structure: &QuaternionicStructure) -> Result<C> {
    // The factor (6 s n) of the dt part: s is the sign in
    // omega^{2n} = (2n)! s Omega. On mixed-sign structures the type sign
    // is undefined and the construction is rejected.
    if structure.type_sign().is_none() {
        return Err(Error::unsupported(
            "mixed-sign structure: s undefined, cannot build the extended forms",
        ));
    }
    let s = match structure.volume_sign() {
        Sign::Plus => 1i64,
        Sign::Minus => -1i64,
    };
    Ok(C::from_int(6 * s * structure.n() as i64))
}

/// `phi = sum_alpha sigma_alpha ∧ zeta_alpha` on extended phase space,
/// with the canonical primitive `sigma_alpha = (1/2)(J_alpha)_{ij} x^i dx^j`.
/// `d phi` is proportional to the volume form of the spatial slice.
pub fn build_phi<C: Coeff>(structure: &QuaternionicStructure) -> Result<Form<C>> {
    if structure.type_sign().is_none() {
        return Err(Error::unsupported(
            "mixed-sign structure: s undefined, cannot build the extended forms",
        ));
    }
    let ext = extended_dim(structure)?;
    let zeta = build_zeta::<C>(structure)?;
    let mut phi = Form::zero(ext, structure.dim() - 1)?;
    for alpha in 0..3 {
        let sigma = structure.sigma_form::<C>(alpha)?.extend_dim(ext)?;
        let z = zeta[alpha].extend_dim(ext)?;
        phi = phi.add(&sigma.wedge(&z)?)?;
    }
    Ok(phi)
}

/// `vartheta = phi + (6 s n) sum_alpha H^alpha zeta_alpha ∧ dt` on
/// extended phase space (`t` is the last axis).
pub fn build_vartheta<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<Form<C>> {
    let ext = extended_dim(structure)?;
    let h = polynomial_triple::<C>(triple, structure.dim())?;
    let zeta = build_zeta::<C>(structure)?;
    let factor = six_s_n::<C>(structure)?;
    let dt = Form::basis(ext, &[(ext - 1) as u8])?;
    let mut theta = build_phi::<C>(structure)?;
    for alpha in 0..3 {
        let hz = zeta[alpha]
            .extend_dim(ext)?
            .scale_poly(&h[alpha].extend_vars(ext))
            .scale(&factor);
        theta = theta.add(&hz.wedge(&dt)?)?;
    }
    Ok(theta)
}

/// The extended field `Z = ∂_t + X` of a polynomial triple.
pub fn extended_field<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<PolyField<C>> {
    let ext = extended_dim(structure)?;
    let x = hyperfield_poly::<C>(structure, triple)?;
    let mut components: Vec<Polynomial<C>> =
        x.components().iter().map(|p| p.extend_vars(ext)).collect();
    components.push(Polynomial::one(ext));
    PolyField::new(components)
}

/// The form `Z ⌟ d(vartheta)`, identically zero exactly when `X` is the
/// hyperhamiltonian field of the triple.
pub fn flow_kernel_form<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<Form<C>> {
    let vartheta = build_vartheta::<C>(structure, triple)?;
    let z = extended_field::<C>(structure, triple)?;
    vartheta.exterior_derivative().interior(z.components())
}

/// Max-magnitude coefficient of `Z ⌟ d(vartheta)` evaluated at `(x, t)`.
/// Exactly zero in rational mode; at most [`FLOAT_MODE_TOL`] in float
/// mode on well-scaled inputs.
pub fn flow_kernel_residual<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
    x: &[f64],
    t: f64,
) -> Result<f64> {
    if x.len() != structure.dim() {
        return Err(Error::structural(format!(
            "point has {} components on R^{}",
            x.len(),
            structure.dim()
        )));
    }
    let residual_form = flow_kernel_form::<C>(structure, triple)?;
    let mut point: Vec<C> = x.iter().map(|v| C::from_f64(*v)).collect();
    point.push(C::from_f64(t));
    Ok(residual_form.max_abs_at(&point))
}

/// The form `L_X Theta`, identically zero for every triple.
pub fn theta_invariance_form<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
) -> Result<Form<C>> {
    let theta = build_theta::<C>(structure, triple)?;
    let x = hyperfield_poly::<C>(structure, triple)?;
    theta.lie_derivative(x.components())
}

/// Max-magnitude coefficient of `L_X Theta` evaluated at `x`.
pub fn theta_invariance_residual<C: Coeff>(
    structure: &QuaternionicStructure,
    triple: &HamiltonianTriple,
    x: &[f64],
) -> Result<f64> {
    if x.len() != structure.dim() {
        return Err(Error::structural(format!(
            "point has {} components on R^{}",
            x.len(),
            structure.dim()
        )));
    }
    let residual_form = theta_invariance_form::<C>(structure, triple)?;
    let point: Vec<C> = x.iter().map(|v| C::from_f64(*v)).collect();
    Ok(residual_form.max_abs_at(&point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Rational;
    use nalgebra::DMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn standard(n: usize, signs: &[Sign]) -> QuaternionicStructure {
        QuaternionicStructure::standard(n, signs).unwrap()
    }

    fn quadratic_identity_triple() -> HamiltonianTriple {
        HamiltonianTriple::quadratic([
            DMatrix::identity(4, 4),
            DMatrix::zeros(4, 4),
            DMatrix::zeros(4, 4),
        ])
        .unwrap()
    }

    fn constant_triple() -> HamiltonianTriple {
        HamiltonianTriple::polynomial([
            Polynomial::constant(4, 3.0),
            Polynomial::constant(4, -1.0),
            Polynomial::zero(4),
        ])
        .unwrap()
    }

    #[test]
    fn zeta_is_omega_for_n1() {
        let s = standard(1, &[Sign::Plus]);
        let zeta = build_zeta::<Rational>(&s).unwrap();
        for alpha in 0..3 {
            assert_eq!(zeta[alpha], s.omega_form::<Rational>(alpha).unwrap());
            let top = s
                .omega_form::<Rational>(alpha)
                .unwrap()
                .wedge(&zeta[alpha])
                .unwrap();
            let expected = Form::volume(4).unwrap().scale(&Rational::from_int(2));
            assert_eq!(top, expected);
        }
    }

    #[test]
    fn zeta_normalisation_for_n2() {
        // omega ∧ zeta = omega^{2n} = (2n)! s Omega with s the volume sign
        for signs in [
            [Sign::Plus, Sign::Plus],
            [Sign::Minus, Sign::Minus],
            [Sign::Plus, Sign::Minus],
        ] {
            let s = standard(2, &signs);
            let zeta = build_zeta::<Rational>(&s).unwrap();
            assert_eq!(zeta[0].degree(), 6);
            let top = s
                .omega_form::<Rational>(0)
                .unwrap()
                .wedge(&zeta[0])
                .unwrap();
            let factor = 24.0 * s.volume_sign().value(); // (2n)! = 24
            let expected = Form::volume(8)
                .unwrap()
                .scale(&<Rational as Coeff>::from_f64(factor));
            assert_eq!(top, expected, "signs {signs:?}");
        }
    }

    #[test]
    fn theta_of_constant_triple_is_zero() {
        let s = standard(1, &[Sign::Plus]);
        let theta = build_theta::<Rational>(&s, &constant_triple()).unwrap();
        assert!(theta.is_zero());
    }

    #[test]
    fn theta_equals_volume_contraction_of_field() {
        // n = 1: (2n-1)! = 1, so Theta = X ⌟ Omega exactly
        let s = standard(1, &[Sign::Plus]);
        let triple = quadratic_identity_triple();
        let theta = build_theta::<Rational>(&s, &triple).unwrap();
        let x = hyperfield_poly::<Rational>(&s, &triple).unwrap();
        assert_eq!(theta, field_to_form(&x).unwrap());
    }

    #[test]
    fn d_theta_vanishes_for_polynomial_triples() {
        let s = standard(1, &[Sign::Plus]);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let h: [Polynomial<f64>; 3] = std::array::from_fn(|_| random_poly(&mut rng, 4, 4));
            let triple = HamiltonianTriple::polynomial(h).unwrap();
            let theta = build_theta::<Rational>(&s, &triple).unwrap();
            assert!(theta.exterior_derivative().is_zero());
        }
    }

    #[test]
    fn field_form_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let components: Vec<Polynomial<Rational>> = (0..4)
            .map(|_| random_poly(&mut rng, 4, 3).map_coeffs(|c| Coeff::from_f64(*c)))
            .collect();
        let field = PolyField::new(components).unwrap();
        let chi = field_to_form(&field).unwrap();
        assert_eq!(form_to_field(&chi).unwrap(), field);
        // basis case: e_1 ⌟ Omega = dx^2 ∧ dx^3 ∧ dx^4
        let e1 = PolyField::<Rational>::new(
            (0..4)
                .map(|i| {
                    if i == 0 {
                        Polynomial::one(4)
                    } else {
                        Polynomial::zero(4)
                    }
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(
            field_to_form(&e1).unwrap(),
            Form::basis(4, &[1, 2, 3]).unwrap()
        );
    }

    #[test]
    fn form_to_field_rejects_wrong_degree() {
        let chi = Form::<Rational>::basis(4, &[0, 1]).unwrap();
        assert!(form_to_field(&chi).is_err());
    }

    #[test]
    fn bracket_of_rotation_forms() {
        // fields K1 x and K2 x; commutator (K2 K1 - K1 K2) x = -2 K3 x
        let k = crate::structures::k_matrices();
        let f1 =
            PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| k[0][(r, c)])).unwrap();
        let f2 =
            PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| k[1][(r, c)])).unwrap();
        let chi = field_to_form(&f1).unwrap();
        let psi = field_to_form(&f2).unwrap();
        let br = bracket(&chi, &psi).unwrap();
        let expected_field =
            PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| -2.0 * k[2][(r, c)]))
                .unwrap();
        assert_eq!(br, field_to_form(&expected_field).unwrap());
        // antisymmetry: {chi, chi} = 0
        assert!(bracket(&chi, &chi).unwrap().is_zero());
    }

    #[test]
    fn bracket_jacobi_identity_on_linear_forms() {
        let k = crate::structures::k_matrices();
        let forms: Vec<Form<Rational>> = (0..3)
            .map(|alpha| {
                let f =
                    PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| k[alpha][(r, c)]))
                        .unwrap();
                field_to_form(&f).unwrap()
            })
            .collect();
        let (a, b, c) = (&forms[0], &forms[1], &forms[2]);
        let cycle = bracket(&bracket(a, b).unwrap(), c)
            .unwrap()
            .add(&bracket(&bracket(b, c).unwrap(), a).unwrap())
            .unwrap()
            .add(&bracket(&bracket(c, a).unwrap(), b).unwrap())
            .unwrap();
        assert!(cycle.is_zero());
    }

    #[test]
    fn phi_and_vartheta_structure() {
        let s = standard(1, &[Sign::Plus]);
        // d sigma = omega exactly
        for alpha in 0..3 {
            let sigma = s.sigma_form::<Rational>(alpha).unwrap();
            assert_eq!(sigma.exterior_derivative(), s.omega_form(alpha).unwrap());
        }
        // d phi = 6 s Omega (spatial volume slice of the extended space)
        let phi = build_phi::<Rational>(&s).unwrap();
        let dphi = phi.exterior_derivative();
        let expected = Form::basis(5, &[0, 1, 2, 3])
            .unwrap()
            .scale(&Rational::from_int(6));
        assert_eq!(dphi, expected);
        // constant triple: vartheta - phi has only constant dt terms
        let vartheta = build_vartheta::<Rational>(&s, &constant_triple()).unwrap();
        let diff = vartheta.sub(&phi).unwrap();
        for (idx, coeff) in diff.terms() {
            assert!(idx.contains(4), "non-dt term {idx:?} in vartheta - phi");
            assert_eq!(coeff.total_degree(), 0);
        }
    }

    #[test]
    fn negative_type_dphi_sign() {
        let s = standard(1, &[Sign::Minus]);
        let phi = build_phi::<Rational>(&s).unwrap();
        let expected = Form::basis(5, &[0, 1, 2, 3])
            .unwrap()
            .scale(&Rational::from_int(-6));
        assert_eq!(phi.exterior_derivative(), expected);
    }

    #[test]
    fn mixed_sign_structures_are_rejected_for_extended_forms() {
        let s = standard(2, &[Sign::Plus, Sign::Minus]);
        assert!(build_phi::<Rational>(&s).is_err());
        let triple = HamiltonianTriple::polynomial([
            Polynomial::zero(8),
            Polynomial::zero(8),
            Polynomial::zero(8),
        ])
        .unwrap();
        assert!(build_vartheta::<Rational>(&s, &triple).is_err());
    }

    #[test]
    fn flow_kernel_exact_for_quadratic_triples() {
        let s = standard(1, &[Sign::Plus]);
        // H constant: X = 0, residual trivially zero
        assert!(flow_kernel_form::<Rational>(&s, &constant_triple())
            .unwrap()
            .is_zero());
        // H1 = |x|^2/2 and random quadratic triples: exact zero
        assert!(
            flow_kernel_form::<Rational>(&s, &quadratic_identity_triple())
                .unwrap()
                .is_zero()
        );
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..3 {
            let d: [DMatrix<f64>; 3] = std::array::from_fn(|_| random_symmetric(&mut rng));
            let triple = HamiltonianTriple::quadratic(d).unwrap();
            assert!(flow_kernel_form::<Rational>(&s, &triple).unwrap().is_zero());
            let r =
                flow_kernel_residual::<Rational>(&s, &triple, &[0.3, -1.2, 0.8, 2.0], 0.7).unwrap();
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn flow_kernel_float_mode_cubic_triple() {
        let s = standard(1, &[Sign::Plus]);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h: [Polynomial<f64>; 3] = std::array::from_fn(|_| random_poly(&mut rng, 4, 3));
        let triple = HamiltonianTriple::polynomial(h).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = rng.gen_range(0.0..1.0);
            let r = flow_kernel_residual::<f64>(&s, &triple, &x, t).unwrap();
            assert!(r <= FLOAT_MODE_TOL, "float-mode residual {r}");
        }
    }

    #[test]
    fn theta_invariance_exact_and_float() {
        let s = standard(1, &[Sign::Plus]);
        assert!(theta_invariance_form::<Rational>(&s, &constant_triple())
            .unwrap()
            .is_zero());
        assert!(
            theta_invariance_form::<Rational>(&s, &quadratic_identity_triple())
                .unwrap()
                .is_zero()
        );
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        // random quadratic triples: exact in rational mode
        for _ in 0..3 {
            let d: [DMatrix<f64>; 3] = std::array::from_fn(|_| random_symmetric(&mut rng));
            let triple = HamiltonianTriple::quadratic(d).unwrap();
            assert!(theta_invariance_form::<Rational>(&s, &triple)
                .unwrap()
                .is_zero());
            let r = theta_invariance_residual::<Rational>(&s, &triple, &[1.0, 2.0, -0.5, 0.25])
                .unwrap();
            assert_eq!(r, 0.0);
        }
        // cubic polynomial triple, float mode
        let h: [Polynomial<f64>; 3] = std::array::from_fn(|_| random_poly(&mut rng, 4, 3));
        let triple = HamiltonianTriple::polynomial(h).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = theta_invariance_residual::<f64>(&s, &triple, &x).unwrap();
            assert!(r <= FLOAT_MODE_TOL, "float-mode residual {r}");
        }
    }

    #[test]
    fn kernel_field_equals_assembled_field() {
        // the field extracted from Theta through the volume form equals
        // the assembled hyperhamiltonian field, coefficient-exactly (n=1)
        let s = standard(1, &[Sign::Plus]);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let h: [Polynomial<f64>; 3] = std::array::from_fn(|_| random_poly(&mut rng, 4, 4));
        let triple = HamiltonianTriple::polynomial(h).unwrap();
        let theta = build_theta::<Rational>(&s, &triple).unwrap();
        let from_theta = form_to_field(&theta).unwrap();
        let assembled = hyperfield_poly::<Rational>(&s, &triple).unwrap();
        assert_eq!(from_theta, assembled);
    }

    #[test]
    fn eq1_residual_for_radial_triples() {
        // radial triples compose to polynomial triples; Eq-1 form residual
        // X ⌟ Omega - Theta vanishes exactly
        let s = standard(1, &[Sign::Plus]);
        let profile = Polynomial::from_terms(1, [(0.5, vec![2])]).unwrap(); // rho^2/2
        let radial = crate::fields::RadialTriple::from_polynomials([
            profile,
            Polynomial::zero(1),
            Polynomial::zero(1),
        ])
        .unwrap();
        let triple = HamiltonianTriple::Radial(radial);
        let theta = build_theta::<Rational>(&s, &triple).unwrap();
        let x = hyperfield_poly::<Rational>(&s, &triple).unwrap();
        assert_eq!(field_to_form(&x).unwrap(), theta);
    }

    #[test]
    fn bracket_of_conserved_forms_is_conserved() {
        // X = K1 x; the fields H1 x and H2 x commute with it, so their
        // forms are conserved, and their bracket (the form of -2 H3 x)
        // must be conserved as well
        let s = standard(1, &[Sign::Plus]);
        let triple = quadratic_identity_triple(); // X = K1 x
        let x = hyperfield_poly::<Rational>(&s, &triple).unwrap();
        let h = crate::structures::h_matrices();
        let chi = field_to_form(
            &PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| h[0][(r, c)])).unwrap(),
        )
        .unwrap();
        let psi = field_to_form(
            &PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| h[1][(r, c)])).unwrap(),
        )
        .unwrap();
        assert!(chi.lie_derivative(x.components()).unwrap().is_zero());
        assert!(psi.lie_derivative(x.components()).unwrap().is_zero());
        let br = bracket(&chi, &psi).unwrap();
        assert!(!br.is_zero());
        let expected = field_to_form(
            &PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| -2.0 * h[2][(r, c)]))
                .unwrap(),
        )
        .unwrap();
        assert_eq!(br, expected);
        assert!(br.lie_derivative(x.components()).unwrap().is_zero());
    }

    #[test]
    fn volume_form_is_preserved_along_hyperhamiltonian_fields() {
        // L_X Omega = 0, coefficient-exactly, for polynomial triples
        let s = standard(1, &[Sign::Plus]);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..3 {
            let h: [Polynomial<f64>; 3] = std::array::from_fn(|_| random_poly(&mut rng, 4, 4));
            let triple = HamiltonianTriple::polynomial(h).unwrap();
            let x = hyperfield_poly::<Rational>(&s, &triple).unwrap();
            let omega = Form::<Rational>::volume(4).unwrap();
            assert!(omega.lie_derivative(x.components()).unwrap().is_zero());
        }
    }

    #[test]
    fn linear_rotation_preserves_its_own_two_form() {
        // L_X mu_1 = 0 for X = K1 x
        let s = standard(1, &[Sign::Plus]);
        let k = crate::structures::k_matrices();
        let x =
            PolyField::<Rational>::linear(&DMatrix::from_fn(4, 4, |r, c| k[0][(r, c)])).unwrap();
        let mu1 = s.omega_form::<Rational>(0).unwrap();
        assert!(mu1.lie_derivative(x.components()).unwrap().is_zero());
    }

    #[test]
    fn n2_form_checks_behind_cap() {
        // n = 2 is allowed (extended dimension 9 <= 12)
        let s = standard(2, &[Sign::Plus, Sign::Plus]);
        let triple = HamiltonianTriple::quadratic([
            DMatrix::identity(8, 8),
            DMatrix::zeros(8, 8),
            DMatrix::zeros(8, 8),
        ])
        .unwrap();
        assert!(flow_kernel_form::<Rational>(&s, &triple).unwrap().is_zero());
        assert!(theta_invariance_form::<Rational>(&s, &triple)
            .unwrap()
            .is_zero());
    }

    fn random_symmetric(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in i..4 {
                let v = rng.gen_range(-2.0..2.0);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    }

    fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, max_deg: u16) -> Polynomial<f64> {
        let mut terms = Vec::new();
        for _ in 0..5 {
            let mut exps = vec![0u16; nvars];
            let mut budget = max_deg;
            for e in exps.iter_mut() {
                let d = rng.gen_range(0..=budget.min(2));
                *e = d;
                budget -= d;
            }
            terms.push((rng.gen_range(-1.0..1.0f64), exps));
        }
        Polynomial::from_terms(nvars, terms).unwrap()
    }
}
