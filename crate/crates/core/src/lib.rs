//! Moment-based dynamics for quantum systems, classical ensembles and hybrid
//! classical-quantum systems.
//!
//! A state is described by its centroids `(q_i, p_i)` and the infinite tower
//! of central moments `Δ(q_1^{a_1} p_1^{b_1} …)`. The crate provides:
//!
//! - [`moment`]: degrees of freedom, moment keys and basis enumeration;
//! - [`algebra`]: exact sparse polynomials over the rationals with a formal
//!   `ħ²` symbol;
//! - [`bracket`]: the closed-form Poisson brackets between moments (quantum,
//!   classical and hybrid), K-coefficients and the Jacobiator;
//! - [`oracle`]: an independent operator-algebra implementation built only on
//!   the canonical commutation relation, used to verify [`bracket`];
//! - [`hamiltonian`]: effective Hamiltonians and truncated equations of motion;
//! - [`dynamics`]: numeric integration of the generated systems;
//! - [`oscillator`]: closed-form solution of a classical oscillator coupled to
//!   a quantum one.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod bracket;
pub mod dynamics;
mod error;
pub mod hamiltonian;
pub mod moment;
pub mod oracle;
pub mod oscillator;

pub use algebra::{MomentPolynomial, Poly, Rational, Symbol};
pub use bracket::BracketKind;
pub use error::Error;
pub use moment::{CanonicalKind, CentroidSymbol, MomentKey, Sector, SystemSignature};

pub type Result<T, E = Error> = core::result::Result<T, E>;
