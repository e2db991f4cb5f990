//! Rank-based tests of multivariate independence between two elliptical
//! random vectors, Wilks' Gaussian likelihood-ratio test, and the
//! asymptotic-efficiency machinery comparing them.
//!
//! The crate is organised bottom-up:
//!
//! - [`specialfn`]: gamma/beta families, chi-square quantiles, real-order
//!   Bessel `J`, adaptive quadrature and bracketed root finding.
//! - [`radial`]: radial families of spherical distributions, their scores,
//!   CDFs, quantiles, seeded sampling and the Konijn alternative generator.
//! - [`ranksigns`]: location/shape estimation and standardized spatial signs
//!   and ranks.
//! - [`testing`]: Wilks' test and the rank-score statistics (sign,
//!   Wilcoxon, van der Waerden, custom scores).
//! - [`efficiency`]: the `C_k` / `D_k` functionals, ARE formulas, the
//!   extremal Bessel-type family and the Hodges–Lehmann bound.
//! - [`montecarlo`]: reproducible size and power studies.

pub mod efficiency;
pub mod error;
pub mod montecarlo;
pub mod radial;
pub mod ranksigns;
pub mod rng;
pub mod specialfn;
pub mod testing;

pub use error::{Error, Result};
