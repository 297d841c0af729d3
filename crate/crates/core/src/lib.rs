//! Heavy-tailed random band matrices: sampling, spectra, localization
//! diagnostics and reproducible Monte Carlo studies.
//!
//! The ensemble is an N x N real symmetric matrix whose entries vanish
//! outside a (cyclic) band of half-width ~ N^mu / 2 and are otherwise i.i.d.
//! with modulus tail L(x) x^{-alpha}. The crate provides:
//!
//! - [`heavy_tail`]: the entry law, norming constants, truncated moments and
//!   concentration of windowed sums;
//! - [`ensemble`]: band patterns, seeded sampling, ranked entries, row
//!   diagnostics, coordinate/binary import-export;
//! - [`spectral`]: an in-house dense symmetric eigensolver (Householder +
//!   implicit-shift QL), Lanczos with full reorthogonalization and certified
//!   residuals, semicircle distances, and principal-submatrix spectral radii;
//! - [`truncation`]: entry cut-offs, remainder norm bounds, trace-power
//!   moments and the log-space bound evaluators;
//! - [`localization`]: (L, eta) localization tests, two-coordinate overlaps
//!   and the delocalization scan;
//! - [`perturbation`]: eigenvalue/eigenvector perturbation checks and the
//!   largest-entry dominance machinery;
//! - [`extremes`]: Poisson point-process statistics of rescaled extremes;
//! - [`experiments`]: the config-driven, bit-reproducible study harness;
//! - [`verify`]: instance-wise verification sweeps shared by the CLI and the
//!   acceptance tests.
//!
//! Everything is deterministic given a root seed: replica generators are
//! derived by counter-based splitting, so a study produces bit-identical
//! records at any thread count.

pub mod dense;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod extremes;
pub mod heavy_tail;
pub mod localization;
pub mod perturbation;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod truncation;
pub mod verify;

pub use error::{Error, Result};
