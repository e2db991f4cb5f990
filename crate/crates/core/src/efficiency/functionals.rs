//! The functionals
//!
//! `C_k(w, f) = ∫₀¹ w(u) φ_f(F̃_k⁻¹(u)) du`,  `D_k(w, f) = ∫₀¹ w(u) F̃_k⁻¹(u) du`
//!
//! for Gaussian weights `w = Φ̃_k⁻¹` and uniform weights `w(u) = u`, and the
//! ARE formulas of the van der Waerden and Wilcoxon tests built from them.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::efficiency::bessel_critical;
use crate::efficiency::extremal::omega;
use crate::error::{Error, Result};
use crate::radial::{RadialFamily, RadialModel};
use crate::specialfn::{chi2_quantile, chi2_quantile_upper, integrate, Integrand, QuadratureSpec};

/// Weight function of a functional.
#[derive(Clone)]
pub enum ScoreKind {
    /// `w = Φ̃_k⁻¹`, the Gaussian radial quantile.
    Gauss,
    /// `w(u) = u`.
    Uniform,
    Custom {
        name: String,
        w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreKind::Gauss => f.write_str("Gauss"),
            ScoreKind::Uniform => f.write_str("Uniform"),
            ScoreKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ScoreKind {
    /// A custom weight; rejected unless `∫ w²` is finite and positive.
    pub fn custom(
        name: impl Into<String>,
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let w: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(w);
        let g = w.clone();
        let sq = Integrand::new(move |u: f64| g(u).powi(2)).singular_both();
        let norm = integrate(&sq, 0.0, 1.0, &QuadratureSpec::default())?;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain(format!(
                "weight must be square integrable with positive norm, got ∫w² = {norm}"
            )));
        }
        Ok(ScoreKind::Custom {
            name: name.into(),
            w,
        })
    }

    fn weight(&self, k: usize, u: f64, q: f64) -> Result<f64> {
        match self {
            ScoreKind::Gauss => {
                let x = if u <= 0.5 {
                    chi2_quantile(k as u32, u)?
                } else {
                    chi2_quantile_upper(k as u32, q)?
                };
                Ok(x.sqrt())
            }
            ScoreKind::Uniform => Ok(u),
            ScoreKind::Custom { w, .. } => Ok(w(u)),
        }
    }
}

fn functional_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_subdivisions: 4_000,
    }
}

/// `∫₀¹ g(u, 1−u) du` where `g` may fail; the first failure is returned.
fn integrate_unit(g: impl Fn(f64, f64) -> Result<f64>) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let f = Integrand::with_complement(|u: f64, q: f64| match g(u, q) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    })
    .singular_both();
    let result = integrate(&f, 0.0, 1.0, &functional_spec());
    match failure.into_inner() {
        Some(e) => Err(e),
        None => result,
    }
}

/// `C_k(w, f) = ∫₀¹ w(u) φ_f(F̃_k⁻¹(u)) du`.
pub fn c_functional(model: &RadialModel, kind: &ScoreKind) -> Result<f64> {
    let k = model.dim();
    integrate_unit(|u, q| {
        let (_, phi) = model.quantile_and_score(u, q)?;
        Ok(kind.weight(k, u, q)? * phi)
    })
}

/// `D_k(w, f) = ∫₀¹ w(u) F̃_k⁻¹(u) du`.
pub fn d_functional(model: &RadialModel, kind: &ScoreKind) -> Result<f64> {
    let k = model.dim();
    integrate_unit(|u, q| Ok(kind.weight(k, u, q)? * model.quantile_split(u, q)?))
}

/// `C_k` and `D_k` of one model under one weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    pub k: usize,
    pub c: f64,
    pub d: f64,
}

pub fn functionals(model: &RadialModel, kind: &ScoreKind) -> Result<Functionals> {
    Ok(Functionals {
        k: model.dim(),
        c: c_functional(model, kind)?,
        d: d_functional(model, kind)?,
    })
}

/// Which rank-score test an ARE refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AreMethod {
    Vdw,
    Wilcoxon,
}

impl AreMethod {
    pub fn score_kind(self) -> ScoreKind {
        match self {
            AreMethod::Vdw => ScoreKind::Gauss,
            AreMethod::Wilcoxon => ScoreKind::Uniform,
        }
    }
}

impl fmt::Display for AreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreMethod::Vdw => "vdw",
            AreMethod::Wilcoxon => "wilcoxon",
        })
    }
}

impl std::str::FromStr for AreMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vdw" => Ok(AreMethod::Vdw),
            "wilcoxon" => Ok(AreMethod::Wilcoxon),
            other => Err(Error::Domain(format!(
                "unknown ARE method '{other}' (expected vdw or wilcoxon)"
            ))),
        }
    }
}

/// ARE against Wilks' test with its components. `value = a + b` up to the
/// method's normalization: for vdW `value = (a + b)/(4p²q²)`, for Wilcoxon
/// `value = a + b` with the factor `9/(pq)` folded into both terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreResult {
    pub method: AreMethod,
    pub p: usize,
    pub q: usize,
    pub value: f64,
    pub c_p: f64,
    pub d_p: f64,
    pub c_q: f64,
    pub d_q: f64,
    pub a: f64,
    pub b: f64,
}

/// Assembles the ARE from precomputed functionals.
pub fn are_from_functionals(method: AreMethod, fp: Functionals, fq: Functionals) -> AreResult {
    let (p, q) = (fp.k, fq.k);
    let (pf, qf) = (p as f64, q as f64);
    let cross = fp.d * fq.c + fq.d * fp.c;
    let diff = fp.d * fq.c - fq.d * fp.c;
    let prod = fp.d * fp.c * fq.d * fq.c;
    let (value, a, b) = match method {
        AreMethod::Vdw => (
            cross * cross / (4.0 * pf * pf * qf * qf),
            4.0 * prod,
            diff * diff,
        ),
        AreMethod::Wilcoxon => {
            let factor = 9.0 / (4.0 * pf * qf);
            (
                factor * cross * cross,
                4.0 * factor * prod,
                factor * diff * diff,
            )
        }
    };
    AreResult {
        method,
        p,
        q,
        value,
        c_p: fp.c,
        d_p: fp.d,
        c_q: fq.c,
        d_q: fq.d,
        a,
        b,
    }
}

fn are(
    method: AreMethod,
    p: usize,
    f: &RadialFamily,
    q: usize,
    g: &RadialFamily,
) -> Result<AreResult> {
    let kind = method.score_kind();
    let fp = functionals(&RadialModel::new(p, f.clone())?, &kind)?;
    let fq = functionals(&RadialModel::new(q, g.clone())?, &kind)?;
    Ok(are_from_functionals(method, fp, fq))
}

/// ARE of the van der Waerden test relative to Wilks' test.
pub fn are_vdw(p: usize, f: &RadialFamily, q: usize, g: &RadialFamily) -> Result<AreResult> {
    are(AreMethod::Vdw, p, f, q, g)
}

/// ARE of the Wilcoxon test relative to Wilks' test.
pub fn are_wilcoxon(p: usize, f: &RadialFamily, q: usize, g: &RadialFamily) -> Result<AreResult> {
    are(AreMethod::Wilcoxon, p, f, q, g)
}

/// `D_k(Φ̃⁻¹, f) C_k(Φ̃⁻¹, f) ≥ k²`, with equality only at the Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub k: usize,
    pub c: f64,
    pub d: f64,
    pub product: f64,
    pub slack: f64,
}

pub fn verify_lemma1(k: usize, f: &RadialFamily) -> Result<Lemma1Report> {
    let fk = functionals(&RadialModel::new(k, f.clone())?, &ScoreKind::Gauss)?;
    let product = fk.c * fk.d;
    Ok(Lemma1Report {
        k,
        c: fk.c,
        d: fk.d,
        product,
        slack: product - (k * k) as f64,
    })
}

/// Attainment of the Wilcoxon infimum at the extremal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub k: usize,
    pub c_k: f64,
    pub omega: f64,
    /// `D_k(I, h_{k,1})`.
    pub d: f64,
    /// `C_k(I, h_{k,1})`.
    pub c: f64,
    pub product: f64,
    /// `(2c_k² + k − 1)² / (32 c_k²)`.
    pub closed_form: f64,
    /// `D_k(I, h_{k,ω_k})`, which should be 1.
    pub d_at_omega: f64,
}

pub fn verify_lemma2(k: usize) -> Result<Lemma2Report> {
    let c_k = bessel_critical(k)?;
    let om = omega(k, c_k);
    let unit = functionals(
        &RadialModel::new(k, RadialFamily::extremal(1.0))?,
        &ScoreKind::Uniform,
    )?;
    let d_at_omega = d_functional(
        &RadialModel::new(k, RadialFamily::extremal(om))?,
        &ScoreKind::Uniform,
    )?;
    let num = 2.0 * c_k * c_k + k as f64 - 1.0;
    Ok(Lemma2Report {
        k,
        c_k,
        omega: om,
        d: unit.d,
        c: unit.c,
        product: unit.c * unit.d,
        closed_form: num * num / (32.0 * c_k * c_k),
        d_at_omega,
    })
}
