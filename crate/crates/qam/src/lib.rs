//! Quasi-arithmetic composition of covariance functions.
//!
//! This crate builds covariance models by passing existing covariance
//! functions through a monotone generator φ:
//!
//! ```text
//! Q(x) = φ( Σᵢ θᵢ φ⁻¹( Cᵢ(xᵢ) ) )
//! ```
//!
//! and provides the machinery around that construction:
//!
//! - [`generator`]: the catalog of generators (φ, φ⁻¹) with their domains,
//!   weight rules and monotonicity flags;
//! - [`kernel`]: the `Kernel` trait and a library of base covariance models;
//! - [`compose`]: weighted and plain-sum composition, nesting, and ordering
//!   / subadditivity diagnostics;
//! - [`permissibility`]: numerical positive-definiteness checks — complete
//!   monotonicity, Bernstein-class and concavity probes, conditional
//!   negative-definiteness of variograms, and Gram-matrix eigenvalue tests;
//! - [`spacetime`]: parametric space-time covariance families built from the
//!   composition, with margins, anisotropy and a separability diagnostic;
//! - [`nonstationary`]: locally stationary covariances between pairs of
//!   locations with location-dependent anisotropy, including two closed
//!   forms (hypergeometric and Bessel) and their quadrature counterparts;
//! - [`qarf`]: random fields with product structure over coordinates —
//!   theoretical covariances, exact simulation, spectral densities and
//!   mean-square differentiability classification;
//! - [`cli`]: the batch command-line interface (`eval`, `gram`, `validate`,
//!   `simulate`, `nonstat`).

// Parameter and domain guards use `!(x > y)` rather than `x <= y` on purpose:
// the negated form rejects NaN, the rewritten form would wave it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Frozen reference values keep every digit of the independently computed
// expansions they were transcribed from, even where f64 rounds the literal
// to a shorter one.
#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod compose;
pub mod config;
pub mod error;
pub mod generator;
pub mod kernel;
pub mod nonstationary;
pub mod permissibility;
pub mod qarf;
pub mod quad;
pub mod report;
pub mod spacetime;
pub mod special;

pub use error::{QamError, Result};
