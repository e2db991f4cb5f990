//! Asymptotic relative efficiencies of the rank-score tests against the
//! Wilks test.

mod extremal;
mod functionals;
mod tables;

pub use extremal::{
    bessel_critical, bessel_critical_residual, extremal_location_score, extremal_radial_cdf,
    extremal_radial_density, hl_lower_bound, omega, BoundResult, ExtremalLaw,
};
pub use functionals::{
    are_from_functionals, are_vdw, are_wilcoxon, c_functional, d_functional, functionals,
    verify_lemma1, verify_lemma2, AreMethod, AreResult, Functionals, Lemma1Report, Lemma2Report,
    ScoreKind,
};
pub use tables::{
    bound_trend, nu_label, table1, table2, table3, AreTable, BoundTable, TABLE_DIMS, TABLE_NUS,
    TABLE_P,
};
