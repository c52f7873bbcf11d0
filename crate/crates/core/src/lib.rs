//! Numerical exterior calculus for positive 3-forms on R^7: induced metrics
//! and Hodge stars, irreducible-type decompositions, torsion extraction with
//! its norm identities, homogeneous models with exact invariant differentials,
//! energy functionals and their negative-gradient flows as ODEs on invariant
//! forms, soliton detection, and linearized operators at nearly parallel
//! structures.
//!
//! The crate is organized bottom-up:
//! - [`basis`] / [`form`]: dense exterior algebra in a fixed lexicographic
//!   monomial basis (dimension 7 is hard-coded).
//! - [`structure`]: the metric, volume and star package induced by a positive
//!   3-form.
//! - [`decompose`]: type decompositions of 2- and 3-forms and the p/s/r maps.
//! - [`torsion`]: torsion forms, norm identities, distortion constants.
//! - [`homogeneous`]: coframe models with exact invariant d, energies and the
//!   L²-gradient of the weighted Dirichlet energies.
//! - [`dynamics`]: flow integration, monotonicity monitors, solitons,
//!   constrained critical points.
//! - [`linearized`]: linearization of the gradient map and of the soliton
//!   operator at nearly parallel basepoints.
//! - [`suite`]: the randomized identity suite backing `verify`.
//!
//! All numerics are 64-bit floating point; every operation is a pure function
//! of immutable inputs and safe to use across threads.

pub mod basis;
pub mod decompose;
pub mod dynamics;
pub mod error;
pub mod form;
pub mod homogeneous;
pub mod linearized;
pub mod models;
pub mod random;
pub mod standard;
pub mod structure;
pub mod suite;
pub mod torsion;

pub use error::Error;
pub use form::PForm;
pub use structure::{metric_from_form, Metric, PositiveThreeForm};
