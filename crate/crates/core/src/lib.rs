//! Hyperhamiltonian dynamics on `R^{4n}`.
//!
//! A hypersymplectic structure equips `R^{4n}` with an ordered triple of
//! symplectic forms whose complex structures satisfy the quaternionic
//! relations. A triple of Hamiltonians then defines a hyperhamiltonian
//! vector field; its flow preserves the volume form and a canonical
//! (4n-1)-form, and radial Hamiltonians integrate in closed form as
//! quaternionic oscillators.
//!
//! The crate is organised as:
//!
//! - [`exterior`]: exact exterior calculus (wedge, contraction, exterior
//!   derivative, Lie derivative) for forms with polynomial coefficients,
//!   rational by default with a float fallback, plus sampled coefficients
//!   for non-polynomial data;
//! - [`structures`]: construction, validation, classification and basis
//!   rotation of hypersymplectic structures;
//! - [`fields`]: Hamiltonian triples, assembly of the hyperhamiltonian
//!   vector field, divergence checks and the odd-trace
//!   non-Hamiltonianity certificate;
//! - [`integrate`]: RK4 / adaptive RK45 integration with flow-map
//!   Jacobians and invariant monitors;
//! - [`invariants`]: form-level conservation checks (the closed
//!   (4n-1)-form, the volume-form isomorphism between fields and forms,
//!   the bracket it induces, and the extended-phase-space residuals);
//! - [`oscillator`]: closed-form quaternionic oscillator solutions,
//!   orbit geometry and resonance classification.

// triple indices (alpha = 1..3) read better as indexed loops
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod exterior;
pub mod fields;
pub mod integrate;
pub mod invariants;
pub mod oscillator;
pub mod structures;

pub use error::{Error, Result};
