//! Exact exterior calculus on `R^m`.
//!
//! Forms carry sparse polynomial coefficients over an exact rational ring
//! by default ([`Rational`]), with `f64` as the float fallback; both
//! implement [`Coeff`]. Wedge products, contractions, exterior derivatives
//! and Lie derivatives are coefficient-exact in rational mode, which is
//! what makes the conservation-law checks in [`crate::invariants`]
//! identities rather than tolerance tests. Non-polynomial coefficients are
//! handled by [`SampledForm`] with finite-difference derivatives.
//!
//! Basis enumeration is dense in the degree, so the ambient dimension is
//! capped at [`MAX_DIM`].

mod coeff;
mod form;
mod multi_index;
mod poly;
mod sampled;

pub use coeff::{coeff_abs, Coeff, Rational};
pub use form::Form;
pub use multi_index::MultiIndex;
pub use poly::Polynomial;
pub use sampled::{CoeffFn, SampledForm, SampledValue, DEFAULT_FD_STEP};

/// Largest ambient dimension for dense forms. Every shipped check needs at
/// most `4n + 1` axes with `n <= 2`.
pub const MAX_DIM: usize = 12;
