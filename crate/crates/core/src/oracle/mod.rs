//! Independent verification layer.
//!
//! Everything here is computed from the canonical commutation relation, the
//! Weyl symmetrization, literal phase-space derivatives and the binomial
//! conversion between central and raw moments. None of it calls the
//! closed-form brackets of [`crate::bracket`], except the identity suite,
//! which uses the K-coefficients as the closed form under test.

pub mod hybrid;
pub mod identities;
pub mod moments;
pub mod operator;

pub use hybrid::{verify_r_properties, HybridAlgebra, HybridObservable, RPropertyReport};
pub use identities::{verify_reordering_identities, IdentityReport, IdentityResult};
pub use moments::{central_to_raw, oracle_moment_bracket, raw_to_central, Oracle, RawMoment, ORACLE_MAX_ORDER};
pub use operator::{normal_order, weyl_monomial, HbarSeries, Letter, OperatorAlgebra, OperatorExpression};
