//! Deterministic integration over irregular paths sampled on dyadic grids.
//!
//! A path `g` on `[0, 1]` is approximated by staircase curves built from its
//! dyadic cell averages `h[k][n]`. Line integrals of `f(t, x) dx` along those
//! staircases converge, for paths whose multiresolution Lévy areas are
//! summable against the integrand's Hölder exponent, to a pathwise integral
//! that coincides with the Stratonovich integral on Brownian paths.
//!
//! The crate is `no_std` and only needs `alloc`. Modules:
//!
//! * [`path`]: [`DyadicPath`], the [`AveragePyramid`] of cell averages,
//!   Hölder seminorm scans.
//! * [`generate`]: Brownian (Lévy midpoint), high-frequency oscillation,
//!   non-summable counterexample and analytic path generators.
//! * [`diagnostics`]: Lévy areas, summability series, the `μ` functional and
//!   `G` norm, the operator constant, quadratic sums and the Wiener statistic.
//! * [`integrator`]: staircase line integrals, the convergence loop, the
//!   adversarial integrand and indefinite integrals.
//! * [`calculus`]: Green-formula evaluation, integration by parts and
//!   Itô/Stratonovich discretisations.
//! * [`ode`]: Picard fixed-point solver for `dy = F(t, y, x) dx`.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calculus;
pub mod diagnostics;
mod error;
pub mod generate;
pub mod integrator;
pub mod ode;
pub mod path;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
pub use integrator::{Dependence, Integrand, IntegralResult, ScalarField};
pub use path::{AveragePyramid, DyadicPath, HolderEstimate};
pub use quadrature::QuadratureConfig;
