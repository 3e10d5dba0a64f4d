//! Numerical machinery for singular `(p(x), q(x))`-Laplacian systems.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! - [`grid`]: tensor grids over an interval, rectangle or disk, the exact
//!   distance-to-boundary field and quadrature that integrates powers of the
//!   distance which blow up at the boundary.
//! - [`expr`]: a small expression language for variable exponents and
//!   coefficients.
//! - [`plap`]: a damped Newton solver for the scalar Dirichlet problem
//!   `-div(|grad u|^(p-2) grad u) = h`, written as convex energy minimization.
//! - [`brackets`]: explicit sub/supersolution pairs with pointwise and weak-form
//!   certificates.
//! - [`system`]: hypothesis checks, the truncated fixed-point operators and the
//!   outer Picard iteration.
//!
//! IO, configuration files and the command line live in the `pqlap` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod brackets;
mod certificate;
pub mod error;
pub mod expr;
pub mod grid;
mod linalg;
pub(crate) mod math;
pub mod plap;
pub mod rng;
pub mod system;

pub use certificate::BoundCertificate;
pub use error::{Error, Result};
pub use expr::{ExprField, RangeSummary};
pub use grid::{Domain, Field, Grid};
