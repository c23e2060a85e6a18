//! Numerical verification of an elliptic parameterization of integrable
//! models: Jacobi elliptic functions, spherical triangles, SU(2) rotation
//! identities, the Ising star-triangle relation, and Abel flows on
//! hyperelliptic curves with their conserved quantities.
//!
//! Every identity is exposed as an operation that returns a residual, so the
//! same code paths serve the library, the randomized suites in [`verify`] and
//! the command-line front end.

pub mod abel;
pub mod elliptic;
pub mod error;
pub mod ising;
pub mod spherical;
pub mod su2;
pub mod verify;

pub use error::{Error, Result};
