//! Special functions and numerical building blocks.
//!
//! Everything here is pure: identical inputs give bit-identical outputs and
//! there is no shared mutable state.

mod bessel;
mod beta;
mod dd;
mod gamma;
mod quadrature;
mod roots;

pub use bessel::{bessel_j, BESSEL_MAX_ARG};
pub use beta::{f_cdf, reg_inc_beta};
pub use gamma::{
    chi2_cdf, chi2_pdf, chi2_quantile, chi2_quantile_upper, chi2_sf, ln_gamma, reg_lower_gamma,
    reg_upper_gamma,
};
pub use quadrature::{integrate, Evaluate, Integrand, QuadratureSpec};
pub use roots::find_root;
