//! Radial families of spherical distributions.
//!
//! A spherical law on `R^k` with radial function `f` has density
//! proportional to `f(‖x‖)`; the radius `‖X‖` then has density
//! `f̃_k(r) ∝ r^{k−1} f(r)` and CDF `F̃_k`. A [`RadialModel`] binds a
//! [`RadialFamily`] to a dimension and exposes `f`, the location score
//! `φ_f = −f'/f`, `F̃_k` and `F̃_k⁻¹`, plus seeded sampling. [`KonijnModel`]
//! builds the local dependence alternatives used in power studies.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::efficiency::ExtremalLaw;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::specialfn::{
    chi2_cdf, chi2_quantile, chi2_quantile_upper, find_root, integrate, reg_inc_beta, Integrand,
    QuadratureSpec,
};
use crate::testing::PairedSample;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied radial function with its location score.
#[derive(Clone)]
pub struct CustomRadial {
    name: String,
    density: RealFn,
    score: RealFn,
    moment_bound: f64,
}

impl CustomRadial {
    /// `moment_bound` is the supremum of the orders `j` with
    /// `∫ r^j f(r) dr < ∞` (`f64::INFINITY` for light tails).
    pub fn new(
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        score: impl Fn(f64) -> f64 + Send + Sync + 'static,
        moment_bound: f64,
    ) -> Self {
        CustomRadial {
            name: name.into(),
            density: Arc::new(density),
            score: Arc::new(score),
            moment_bound,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn moment_bound(&self) -> f64 {
        self.moment_bound
    }
}

/// Custom radial functions are equal only when they share the same
/// closures.
impl PartialEq for CustomRadial {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.moment_bound == other.moment_bound
            && Arc::ptr_eq(&self.density, &other.density)
            && Arc::ptr_eq(&self.score, &other.score)
    }
}

impl fmt::Debug for CustomRadial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRadial")
            .field("name", &self.name)
            .field("moment_bound", &self.moment_bound)
            .finish_non_exhaustive()
    }
}

/// A radial function type.
///
/// Student t is the shape-standard form `(1 + r²/ν)^{−(k+ν)/2}` and the
/// Gaussian with scale `a` is `exp(−(ar)²/2)`. `Scaled` maps `f` to
/// `f_a(r) = f(ar)` for any base family.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialFamily {
    Gaussian {
        scale: f64,
    },
    StudentT {
        nu: f64,
    },
    Extremal {
        sigma: f64,
    },
    Scaled {
        base: Box<RadialFamily>,
        factor: f64,
    },
    Custom(CustomRadial),
}

impl RadialFamily {
    pub fn gaussian() -> Self {
        RadialFamily::Gaussian { scale: 1.0 }
    }

    pub fn student(nu: f64) -> Self {
        RadialFamily::StudentT { nu }
    }

    pub fn extremal(sigma: f64) -> Self {
        RadialFamily::Extremal { sigma }
    }

    /// `f_a(r) = f(ar)`.
    pub fn scaled(self, factor: f64) -> Self {
        RadialFamily::Scaled {
            base: Box::new(self),
            factor,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Model(format!(
                    "{what} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            RadialFamily::Gaussian { scale } => positive("Gaussian scale", *scale),
            RadialFamily::StudentT { nu } => {
                if *nu > 2.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Model(format!(
                        "Student t needs finite nu > 2 for finite second moments, got {nu}"
                    )))
                }
            }
            RadialFamily::Extremal { sigma } => positive("extremal sigma", *sigma),
            RadialFamily::Scaled { base, factor } => {
                positive("scale factor", *factor)?;
                base.validate()
            }
            RadialFamily::Custom(_) => Ok(()),
        }
    }
}

impl fmt::Display for RadialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFamily::Gaussian { scale } if *scale == 1.0 => write!(f, "gauss"),
            RadialFamily::Gaussian { scale } => write!(f, "gauss:{scale}"),
            RadialFamily::StudentT { nu } => write!(f, "t:{nu}"),
            RadialFamily::Extremal { sigma } if *sigma == 1.0 => write!(f, "extremal"),
            RadialFamily::Extremal { sigma } => write!(f, "extremal:{sigma}"),
            RadialFamily::Scaled { base, factor } => write!(f, "{base}@{factor}"),
            RadialFamily::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for RadialFamily {
    type Err = Error;

    /// Grammar: `gauss[:a]`, `t:<nu>`, `extremal[:sigma]`, each optionally
    /// followed by `@<factor>` for an extra scale change.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((base, factor)) = s.rsplit_once('@') {
            let family = RadialFamily::from_str(base)?.scaled(parse_number(factor, s)?);
            family.validate()?;
            return Ok(family);
        }
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s, None),
        };
        let family = match (name.to_ascii_lowercase().as_str(), arg) {
            ("gauss" | "gaussian" | "normal", None) => RadialFamily::gaussian(),
            ("gauss" | "gaussian" | "normal", Some(a)) => RadialFamily::Gaussian {
                scale: parse_number(a, s)?,
            },
            ("t", Some(nu)) => RadialFamily::StudentT {
                nu: parse_number(nu, s)?,
            },
            ("extremal", None) => RadialFamily::extremal(1.0),
            ("extremal", Some(sigma)) => RadialFamily::Extremal {
                sigma: parse_number(sigma, s)?,
            },
            _ => {
                return Err(Error::Domain(format!(
                    "unknown radial family '{s}' (expected gauss[:a], t:<nu> or extremal[:sigma])"
                )))
            }
        };
        family.validate()?;
        Ok(family)
    }
}

fn parse_number(text: &str, whole: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::Domain(format!("bad number '{text}' in radial family '{whole}'")))
}

impl Serialize for RadialFamily {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RadialFamily {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Unit-scale kernel a model evaluates at `scale · r`.
#[derive(Debug, Clone)]
enum Kernel {
    Gaussian,
    Student { nu: f64 },
    Extremal(ExtremalLaw),
    Custom { radial: CustomRadial, norm: f64 },
}

/// A radial family bound to a dimension `k`.
#[derive(Debug, Clone)]
pub struct RadialModel {
    dim: usize,
    family: RadialFamily,
    kernel: Kernel,
    scale: f64,
}

fn quad_spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

impl RadialModel {
    pub fn new(k: usize, family: RadialFamily) -> Result<Self> {
        if k == 0 {
            return Err(Error::Model("dimension must be >= 1".into()));
        }
        family.validate()?;
        let (kernel, scale) = Self::resolve(k, &family)?;
        Ok(RadialModel {
            dim: k,
            family,
            kernel,
            scale,
        })
    }

    fn resolve(k: usize, family: &RadialFamily) -> Result<(Kernel, f64)> {
        Ok(match family {
            RadialFamily::Gaussian { scale } => (Kernel::Gaussian, *scale),
            RadialFamily::StudentT { nu } => (Kernel::Student { nu: *nu }, 1.0),
            RadialFamily::Extremal { sigma } => (Kernel::Extremal(ExtremalLaw::new(k)?), *sigma),
            RadialFamily::Scaled { base, factor } => {
                let (kernel, scale) = Self::resolve(k, base)?;
                (kernel, scale * factor)
            }
            RadialFamily::Custom(radial) => {
                if !(radial.moment_bound > k as f64 + 1.0) {
                    return Err(Error::Model(format!(
                        "custom family '{}' needs finite moments of order k+1 = {}, declared bound {}",
                        radial.name,
                        k + 1,
                        radial.moment_bound
                    )));
                }
                let norm = custom_mass(radial, k, f64::INFINITY)?;
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(Error::Model(format!(
                        "custom family '{}' has non-normalizable radius density",
                        radial.name
                    )));
                }
                (
                    Kernel::Custom {
                        radial: radial.clone(),
                        norm,
                    },
                    1.0,
                )
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &RadialFamily {
        &self.family
    }

    /// Overall scale `a` such that the model is the unit kernel at `a·r`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_radius(r: f64) -> Result<()> {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "radius must be positive and finite, got {r}"
            )))
        }
    }

    /// Radial function `f(r)` in the family's fixed normalization.
    pub fn density(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        let x = self.scale * r;
        let k = self.dim as f64;
        match &self.kernel {
            Kernel::Gaussian => Ok((-0.5 * x * x).exp()),
            Kernel::Student { nu } => Ok((1.0 + x * x / nu).powf(-0.5 * (k + nu))),
            Kernel::Extremal(law) => law.radial_function(x),
            Kernel::Custom { radial, .. } => Ok((radial.density)(x)),
        }
    }

    /// Location score `φ_f(r) = −f'(r)/f(r)`.
    pub fn location_score(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        let a = self.scale;
        let x = a * r;
        let k = self.dim as f64;
        let unit = match &self.kernel {
            Kernel::Gaussian => x,
            Kernel::Student { nu } => (k + nu) * x / (nu + x * x),
            Kernel::Extremal(law) => law.location_score(x)?,
            Kernel::Custom { radial, .. } => (radial.score)(x),
        };
        Ok(a * unit)
    }

    /// Radius CDF `F̃_k(r)`.
    pub fn radial_cdf(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!(
                "radius must be nonnegative, got {r}"
            )));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        if r.is_infinite() {
            return Ok(1.0);
        }
        let x = self.scale * r;
        let k = self.dim;
        match &self.kernel {
            Kernel::Gaussian => chi2_cdf(k as u32, x * x),
            Kernel::Student { nu } => student_cdf(k as f64, *nu, x),
            Kernel::Extremal(law) => law.cdf(x),
            Kernel::Custom { radial, norm } => {
                Ok((custom_mass(radial, k, x)? / norm).clamp(0.0, 1.0))
            }
        }
    }

    /// Radius quantile `F̃_k⁻¹(u)` for `u ∈ (0, 1)`.
    pub fn radial_quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!(
                "quantile level must lie in (0, 1), got {u}"
            )));
        }
        self.quantile_split(u, 1.0 - u)
    }

    /// Upper quantile `F̃_k⁻¹(1 − q)`, accurate for `q` far below machine
    /// epsilon.
    pub fn radial_quantile_upper(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "upper quantile level must lie in (0, 1), got {q}"
            )));
        }
        self.quantile_split(1.0 - q, q)
    }

    /// Quantile at `u` with exact complement `q = 1 − u`.
    pub(crate) fn quantile_split(&self, u: f64, q: f64) -> Result<f64> {
        let k = self.dim;
        let unit = match &self.kernel {
            Kernel::Gaussian => {
                if u <= 0.5 {
                    chi2_quantile(k as u32, u)?.sqrt()
                } else {
                    chi2_quantile_upper(k as u32, q)?.sqrt()
                }
            }
            Kernel::Student { nu } => student_quantile(k as f64, *nu, u, q)?,
            Kernel::Extremal(law) => law.quantile_split(u, q)?.0,
            Kernel::Custom { radial, norm } => custom_quantile(radial, k, *norm, u)?,
        };
        Ok(unit / self.scale)
    }

    /// `(F̃_k⁻¹(u), φ_f(F̃_k⁻¹(u)))` with exact complement `q = 1 − u`. Near
    /// a compact support's edge the score is formed from the gap to the
    /// edge rather than from the rounded radius.
    pub(crate) fn quantile_and_score(&self, u: f64, q: f64) -> Result<(f64, f64)> {
        let a = self.scale;
        if let Kernel::Extremal(law) = &self.kernel {
            let (r, gap) = law.quantile_split(u, q)?;
            return Ok((r / a, a * law.score_split(r, gap)?));
        }
        let r = self.quantile_split(u, q)?;
        if r == 0.0 {
            // quantile underflowed; scores of the smooth kernels vanish at 0
            let at_zero = match &self.kernel {
                Kernel::Custom { radial, .. } => (radial.score)(0.0),
                _ => 0.0,
            };
            return Ok((0.0, a * at_zero));
        }
        Ok((r, self.location_score(r)?))
    }

    /// Draws `n` points (rows) from the spherical law, using closed-form
    /// samplers for Gaussian and Student kernels.
    pub fn sample_spherical(&self, n: usize, stream: RngStream) -> Result<DMatrix<f64>> {
        self.sample_with(n, stream, SamplingMethod::Auto)
    }

    /// Like [`sample_spherical`](Self::sample_spherical) with an explicit
    /// radius sampler.
    pub fn sample_with(
        &self,
        n: usize,
        stream: RngStream,
        method: SamplingMethod,
    ) -> Result<DMatrix<f64>> {
        let k = self.dim;
        let mut rng = stream.rng();
        let mut out = DMatrix::zeros(n, k);
        let direct = matches!(method, SamplingMethod::Auto)
            && matches!(self.kernel, Kernel::Gaussian | Kernel::Student { .. });
        let chi = match self.kernel {
            Kernel::Student { nu } if direct => Some(
                ChiSquared::new(nu)
                    .map_err(|e| Error::Model(format!("chi-square sampler: {e}")))?,
            ),
            _ => None,
        };
        let mut z = vec![0.0; k];
        for i in 0..n {
            for zj in z.iter_mut() {
                *zj = StandardNormal.sample(&mut rng);
            }
            let factor = if direct {
                match (&self.kernel, &chi) {
                    (Kernel::Student { nu }, Some(chi)) => {
                        let w: f64 = chi.sample(&mut rng);
                        1.0 / (self.scale * (w / nu).sqrt())
                    }
                    _ => 1.0 / self.scale,
                }
            } else {
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let v: f64 = rng.sample(Open01);
                self.radial_quantile(v)? / norm
            };
            for (j, zj) in z.iter().enumerate() {
                out[(i, j)] = zj * factor;
            }
        }
        Ok(out)
    }
}

/// How [`RadialModel::sample_with`] draws radii.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMethod {
    /// Closed form where one exists, inverse CDF otherwise.
    #[default]
    Auto,
    /// Always `R = F̃_k⁻¹(V)` with `V` uniform.
    InverseCdf,
}

/// `P(R ≤ x)` for the shape-standard Student radius: `R²/k ~ F(k, ν)`.
fn student_cdf(k: f64, nu: f64, x: f64) -> Result<f64> {
    let r2 = x * x;
    if r2 <= nu {
        reg_inc_beta(0.5 * k, 0.5 * nu, r2 / (r2 + nu))
    } else {
        Ok(1.0 - reg_inc_beta(0.5 * nu, 0.5 * k, nu / (r2 + nu))?)
    }
}

/// Inverts the Student radius CDF through the incomplete beta, solving in
/// `s = ln x` so both tails keep full relative accuracy. `q = 1 − u` exactly.
fn student_quantile(k: f64, nu: f64, u: f64, q: f64) -> Result<f64> {
    let (a, b) = (0.5 * k, 0.5 * nu);
    // far enough that the incomplete beta underflows to zero
    const LO: f64 = -1500.0;
    const TOL: f64 = 1e-14;
    let r2 = if u <= 0.5 {
        // x = r²/(r²+ν)
        let s = find_root(
            |s| {
                reg_inc_beta(a, b, s.exp())
                    .map(|v| v - u)
                    .unwrap_or(f64::NAN)
            },
            LO,
            0.0,
            TOL,
        )?;
        nu / (-s).exp_m1()
    } else {
        // y = ν/(r²+ν)
        let s = find_root(
            |s| {
                reg_inc_beta(b, a, s.exp())
                    .map(|v| v - q)
                    .unwrap_or(f64::NAN)
            },
            LO,
            0.0,
            TOL,
        )?;
        nu * (-s).exp_m1()
    };
    Ok(r2.sqrt())
}

/// `∫₀^x r^{k−1} f(r) dr` for a custom kernel.
fn custom_mass(radial: &CustomRadial, k: usize, x: f64) -> Result<f64> {
    let f = &radial.density;
    let km1 = k as i32 - 1;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        // r = t/(1−t) maps (0, 1) onto (0, ∞)
        let g = Integrand::new(|t: f64| {
            let one_minus = 1.0 - t;
            let r = t / one_minus;
            let v = r.powi(km1) * f(r) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        })
        .singular_both();
        integrate(&g, 0.0, 1.0, &quad_spec())
    } else {
        let g = Integrand::new(|r: f64| r.powi(km1) * f(r)).singular_left();
        integrate(&g, 0.0, x, &quad_spec())
    }
}

fn custom_quantile(radial: &CustomRadial, k: usize, norm: f64, u: f64) -> Result<f64> {
    let cdf = |r: f64| custom_mass(radial, k, r).map(|m| m / norm);
    let mut hi = 1.0;
    while cdf(hi)? < u {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Range(format!(
                "custom radial quantile at {u} is unbounded"
            )));
        }
    }
    find_root(
        |r| cdf(r).map(|v| v - u).unwrap_or(f64::NAN),
        0.0,
        hi,
        1e-12 * hi,
    )
}

/// Local dependence alternatives: independent spherical blocks `Y₁, Y₂`
/// mixed as `X = [[(1−s)I, sM], [sM′, (1−s)I]] Y` with `s = δ/√n`.
#[derive(Debug, Clone)]
pub struct KonijnModel {
    f: RadialModel,
    g: RadialModel,
    m: DMatrix<f64>,
    delta: f64,
    n: usize,
}

impl KonijnModel {
    pub fn new(
        f: RadialModel,
        g: RadialModel,
        m: DMatrix<f64>,
        delta: f64,
        n: usize,
    ) -> Result<Self> {
        let (p, q) = (f.dim(), g.dim());
        if m.nrows() != p || m.ncols() != q {
            return Err(Error::Model(format!(
                "mixing matrix must be {p}x{q}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::Model("sample size must be >= 1".into()));
        }
        if !delta.is_finite() || m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("delta and M must be finite".into()));
        }
        let model = KonijnModel { f, g, m, delta, n };
        let sv = model.mixing_matrix().singular_values();
        let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        if !(smin > 1e-12 * smax) {
            return Err(Error::Model(format!(
                "mixing matrix is singular for delta = {delta}, n = {n}"
            )));
        }
        Ok(model)
    }

    /// The default `M`: a single 1 in position (1, 1).
    pub fn default_m(p: usize, q: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(p, q);
        m[(0, 0)] = 1.0;
        m
    }

    pub fn p(&self) -> usize {
        self.f.dim()
    }

    pub fn q(&self) -> usize {
        self.g.dim()
    }

    pub fn f(&self) -> &RadialModel {
        &self.f
    }

    pub fn g(&self) -> &RadialModel {
        &self.g
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `s = δ/√n`.
    pub fn mixing_weight(&self) -> f64 {
        self.delta / (self.n as f64).sqrt()
    }

    pub fn mixing_matrix(&self) -> DMatrix<f64> {
        let (p, q) = (self.p(), self.q());
        let s = self.mixing_weight();
        let mut out = DMatrix::zeros(p + q, p + q);
        for i in 0..p {
            out[(i, i)] = 1.0 - s;
        }
        for i in 0..q {
            out[(p + i, p + i)] = 1.0 - s;
        }
        out.view_mut((0, p), (p, q)).copy_from(&(&self.m * s));
        out.view_mut((p, 0), (q, p))
            .copy_from(&(self.m.transpose() * s));
        out
    }

    /// The unmixed blocks, from sub-streams 1 and 2 of `stream`.
    pub fn sample_blocks(&self, stream: RngStream) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let y1 = self.f.sample_spherical(self.n, stream.derive(1))?;
        let y2 = self.g.sample_spherical(self.n, stream.derive(2))?;
        Ok((y1, y2))
    }

    /// One sample of `n` mixed pairs.
    pub fn sample(&self, stream: RngStream) -> Result<PairedSample> {
        let (y1, y2) = self.sample_blocks(stream)?;
        if self.delta == 0.0 {
            return PairedSample::new(y1, y2);
        }
        let s = self.mixing_weight();
        // rows are observations: x1 = (1−s)y1 + sM y2, x2 = sM′y1 + (1−s)y2
        let x1 = &y1 * (1.0 - s) + &y2 * self.m.transpose() * s;
        let x2 = &y1 * &self.m * s + &y2 * (1.0 - s);
        PairedSample::new(x1, x2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, FisherSnedecor};

    fn model(k: usize, spec: &str) -> RadialModel {
        RadialModel::new(k, spec.parse().unwrap()).unwrap()
    }

    #[test]
    fn density_examples() {
        let g = model(3, "gauss");
        assert!((g.density(1e-300).unwrap() - 1.0).abs() < 1e-15);
        let t = model(2, "t:3");
        assert!((t.density(1.0).unwrap() - (4.0f64 / 3.0).powf(-2.5)).abs() < 1e-14);
        assert!((t.density(1.0).unwrap() - 0.487139).abs() < 1e-6);
        let g2 = model(1, "gauss:2");
        assert!((g2.density(1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!(g.density(0.0).is_err());
        assert!(g.density(-1.0).is_err());
    }

    #[test]
    fn score_examples() {
        let g = model(4, "gauss");
        for r in [1e-10, 0.3, 2.0, 7.5] {
            assert!((g.location_score(r).unwrap() - r).abs() < 1e-15);
        }
        assert!((model(2, "t:3").location_score(1.0).unwrap() - 1.25).abs() < 1e-15);
        assert!(g.location_score(0.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        let g = model(2, "gauss");
        let r = (2.0 * 2f64.ln()).sqrt();
        assert!((g.radial_cdf(r).unwrap() - 0.5).abs() < 1e-14);
        for spec in ["gauss", "t:3", "extremal"] {
            assert_eq!(model(3, spec).radial_cdf(0.0).unwrap(), 0.0);
        }
        let t = model(2, "t:4");
        assert!((t.radial_cdf(2f64.sqrt()).unwrap() - 5.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn student_cdf_matches_fisher_oracle() {
        for (k, nu) in [(1usize, 3.0), (2, 4.0), (5, 12.0), (10, 6.0)] {
            let fisher = FisherSnedecor::new(k as f64, nu).unwrap();
            let m = model(k, &format!("t:{nu}"));
            for r in [0.05, 0.5, 1.0, 2.0, 5.0, 30.0] {
                let want = fisher.cdf(r * r / k as f64);
                assert!(
                    (m.radial_cdf(r).unwrap() - want).abs() < 1e-10,
                    "k={k} ν={nu} r={r}"
                );
            }
        }
    }

    #[test]
    fn gaussian_cdf_is_chi_square() {
        for k in [1usize, 2, 7] {
            let m = model(k, "gauss");
            for r in [0.1, 1.0, 2.5, 6.0] {
                assert_eq!(m.radial_cdf(r).unwrap(), chi2_cdf(k as u32, r * r).unwrap());
            }
        }
    }

    #[test]
    fn quantile_examples() {
        let g = model(1, "gauss");
        assert!((g.radial_quantile(0.95).unwrap() - 3.841458820694124f64.sqrt()).abs() < 1e-10);
        assert!((g.radial_quantile(0.975).unwrap() - 2.241402727604947).abs() < 1e-10);
        let g2 = model(3, "gauss:2");
        let g1 = model(3, "gauss");
        for u in [0.01, 0.5, 0.99] {
            let ratio = g2.radial_quantile(u).unwrap() / g1.radial_quantile(u).unwrap();
            assert!((ratio - 0.5).abs() < 1e-12);
        }
        assert!(g.radial_quantile(0.0).is_err());
        assert!(g.radial_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_round_trip_on_grid() {
        for spec in [
            "gauss",
            "gauss:0.7",
            "t:3",
            "t:12",
            "extremal",
            "extremal:2",
            "t:5@3",
        ] {
            for k in [1, 2, 5] {
                let m = model(k, spec);
                let mut prev = 0.0;
                for i in 1..200 {
                    let u = i as f64 / 200.0;
                    let r = m.radial_quantile(u).unwrap();
                    assert!(r > prev);
                    prev = r;
                    assert!(
                        (m.radial_cdf(r).unwrap() - u).abs() < 1e-10,
                        "{spec} k={k} u={u}"
                    );
                }
            }
        }
    }

    #[test]
    fn student_quantile_tails() {
        let m = model(2, "t:3");
        for u in [1e-12, 1e-6, 1.0 - 1e-6, 1.0 - 1e-12] {
            let r = m.radial_quantile(u).unwrap();
            let back = m.radial_cdf(r).unwrap();
            let (want, got) = if u < 0.5 {
                (u, back)
            } else {
                (1.0 - u, 1.0 - back)
            };
            assert!(((got - want) / want).abs() < 1e-4, "u={u}");
        }
    }

    #[test]
    fn upper_quantiles_far_tail() {
        // Gaussian k = 2: 1 − F(r) = exp(−r²/2)
        let g = model(2, "gauss");
        for q in [1e-20, 1e-200] {
            let r = g.radial_quantile_upper(q).unwrap();
            assert!((r - (-2.0 * f64::ln(q)).sqrt()).abs() < 1e-12 * r);
        }
        // Student k = 2: 1 − F(r) = (1 + r²/ν)^{−ν/2}
        let t = model(2, "t:3");
        for q in [1e-20, 1e-200] {
            let r = t.radial_quantile_upper(q).unwrap();
            let want = (3.0 * (q.powf(-2.0 / 3.0) - 1.0)).sqrt();
            assert!((r - want).abs() < 1e-11 * want, "q={q}");
        }
        // extremal k = 1 at scale 2: gap 2 asin(√(q/2)) / 2
        let e = model(1, "extremal:2");
        let (r, phi) = e.quantile_and_score(1.0, 1e-40).unwrap();
        let gap = 2.0 * (0.5e-40f64).sqrt().asin();
        assert!((r - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((phi - 2.0 / gap.tan()).abs() < 1e-12 * phi);
    }

    #[test]
    fn scale_law() {
        for (base, scaled) in [
            ("t:3", "t:3@2.5"),
            ("extremal", "extremal:2.5"),
            ("gauss", "gauss:2.5"),
        ] {
            let (b, s) = (model(3, base), model(3, scaled));
            for u in [0.02, 0.3, 0.77, 0.98] {
                let want = b.radial_quantile(u).unwrap() / 2.5;
                assert!((s.radial_quantile(u).unwrap() - want).abs() < 1e-10 * want);
            }
        }
    }

    #[test]
    fn family_parsing() {
        assert!(matches!("gauss".parse(), Ok(RadialFamily::Gaussian { scale }) if scale == 1.0));
        assert!(matches!("gauss:2".parse(), Ok(RadialFamily::Gaussian { scale }) if scale == 2.0));
        assert!(matches!("t:3".parse(), Ok(RadialFamily::StudentT { nu }) if nu == 3.0));
        assert!(
            matches!("extremal:0.5".parse(), Ok(RadialFamily::Extremal { sigma }) if sigma == 0.5)
        );
        for bad in [
            "t",
            "t:2",
            "t:1.5",
            "gauss:-1",
            "cauchy",
            "extremal:x",
            "t:3@0",
        ] {
            assert!(bad.parse::<RadialFamily>().is_err(), "{bad}");
        }
        for s in [
            "gauss",
            "gauss:2",
            "t:3",
            "extremal",
            "extremal:0.25",
            "t:4@2",
        ] {
            let f: RadialFamily = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
    }

    #[test]
    fn family_serde_round_trip() {
        let f: RadialFamily = "t:6".parse().unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, "\"t:6\"");
        let back: RadialFamily = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_string(), "t:6");
    }

    fn custom_laplace() -> RadialFamily {
        RadialFamily::Custom(CustomRadial::new(
            "laplace",
            |r: f64| (-r).exp(),
            |_| 1.0,
            f64::INFINITY,
        ))
    }

    #[test]
    fn custom_family() {
        // radius density r^{k−1}e^{−r}/Γ(k): a gamma(k) law
        let m = RadialModel::new(2, custom_laplace()).unwrap();
        for r in [0.3f64, 1.0, 4.0] {
            let want = 1.0 - (-r).exp() * (1.0 + r);
            assert!((m.radial_cdf(r).unwrap() - want).abs() < 1e-9);
        }
        let r = m.radial_quantile(0.4).unwrap();
        assert!((m.radial_cdf(r).unwrap() - 0.4).abs() < 1e-10);
        let heavy = RadialFamily::Custom(CustomRadial::new(
            "heavy",
            |r: f64| (1.0 + r * r).powf(-2.0),
            |r| 4.0 * r / (1.0 + r * r),
            3.0,
        ));
        assert!(RadialModel::new(2, heavy.clone()).is_err());
        assert!(RadialModel::new(1, heavy).is_ok());
    }

    #[test]
    fn sample_moments() {
        let m = model(3, "gauss");
        let x = m.sample_spherical(100_000, RngStream::new(11, 0)).unwrap();
        let sq: Vec<f64> = x.row_iter().map(|r| r.norm_squared()).collect();
        let n = sq.len() as f64;
        let mean = sq.iter().sum::<f64>() / n;
        // var χ²_3 = 6
        assert!((mean - 3.0).abs() < 4.0 * (6.0 / n).sqrt(), "{mean}");
        for j in 0..3 {
            let dir_mean = x.row_iter().map(|r| r[j] / r.norm()).sum::<f64>() / n;
            // var of a coordinate of a uniform direction is 1/k
            assert!(dir_mean.abs() < 4.0 * (1.0 / (3.0 * n)).sqrt());
        }
        assert!(x.row_iter().all(|r| r.norm() > 0.0 && r.norm().is_finite()));
    }

    /// Two-sample KS distance between the sampled radii of the two methods.
    fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn fast_paths_agree_with_inverse_cdf() {
        for spec in ["gauss:1.7", "t:3", "t:5@0.5"] {
            let m = model(2, spec);
            let n = 20_000;
            let a = m
                .sample_with(n, RngStream::new(1, 1), SamplingMethod::Auto)
                .unwrap();
            let b = m
                .sample_with(n, RngStream::new(1, 2), SamplingMethod::InverseCdf)
                .unwrap();
            let ra = a.row_iter().map(|r| r.norm()).collect();
            let rb = b.row_iter().map(|r| r.norm()).collect();
            // 0.1% critical value for equal sizes: 1.95 sqrt(2/n)
            assert!(
                ks_two_sample(ra, rb) < 1.95 * (2.0 / n as f64).sqrt(),
                "{spec}"
            );
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = model(2, "extremal");
        let a = m.sample_spherical(50, RngStream::new(5, 9)).unwrap();
        let b = m.sample_spherical(50, RngStream::new(5, 9)).unwrap();
        assert_eq!(a, b);
        let c = m.sample_spherical(50, RngStream::new(5, 10)).unwrap();
        assert_ne!(a, c);
        assert!(a.row_iter().all(|r| r.norm() < bessel_cut(2)));
    }

    fn bessel_cut(k: usize) -> f64 {
        crate::efficiency::bessel_critical(k).unwrap()
    }

    #[test]
    fn konijn_examples() {
        let f = model(1, "gauss");
        let km = KonijnModel::new(
            f.clone(),
            f.clone(),
            DMatrix::from_element(1, 1, 1.0),
            1.0,
            100,
        )
        .unwrap();
        let stream = RngStream::new(3, 4);
        let (y1, y2) = km.sample_blocks(stream).unwrap();
        let x = km.sample(stream).unwrap();
        for i in 0..100 {
            let want1 = 0.9 * y1[(i, 0)] + 0.1 * y2[(i, 0)];
            let want2 = 0.1 * y1[(i, 0)] + 0.9 * y2[(i, 0)];
            assert!((x.block1().data()[(i, 0)] - want1).abs() < 1e-14);
            assert!((x.block2().data()[(i, 0)] - want2).abs() < 1e-14);
        }
        let null = KonijnModel::new(
            f.clone(),
            f.clone(),
            DMatrix::from_element(1, 1, 1.0),
            0.0,
            100,
        )
        .unwrap();
        let x0 = null.sample(stream).unwrap();
        assert_eq!(
            x0.block1().data(),
            &f.sample_spherical(100, stream.derive(1)).unwrap()
        );
        assert_eq!(
            x0.block2().data(),
            &f.sample_spherical(100, stream.derive(2)).unwrap()
        );
        // s = 1/2 with M = 1 gives a rank-one mixing matrix
        assert!(KonijnModel::new(
            f.clone(),
            f.clone(),
            DMatrix::from_element(1, 1, 1.0),
            5.0,
            100
        )
        .is_err());
        assert!(KonijnModel::new(f.clone(), f, DMatrix::zeros(2, 1), 1.0, 100).is_err());
    }

    #[test]
    fn konijn_zero_m_scales_blocks() {
        let (f, g) = (model(2, "t:5"), model(3, "gauss"));
        let km = KonijnModel::new(f, g, DMatrix::zeros(2, 3), 2.0, 16).unwrap();
        let stream = RngStream::new(8, 0);
        let (y1, y2) = km.sample_blocks(stream).unwrap();
        let x = km.sample(stream).unwrap();
        assert!((x.block1().data() - y1 * 0.5).norm() < 1e-14);
        assert!((x.block2().data() - y2 * 0.5).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn cdf_nondecreasing_and_inverted(
            k in 1usize..8,
            fam in prop_oneof![Just("gauss"), Just("t:3"), Just("t:7.5"), Just("extremal"), Just("gauss:0.3")],
            u in 0.001f64..0.999,
            du in 0.0f64..0.5,
        ) {
            let m = model(k, fam);
            let r = m.radial_quantile(u).unwrap();
            prop_assert!((m.radial_cdf(r).unwrap() - u).abs() < 1e-8);
            let r2 = r * (1.0 + du);
            prop_assert!(m.radial_cdf(r2).unwrap() >= m.radial_cdf(r).unwrap());
        }

        #[test]
        fn custom_score_matches_log_density(r in 0.05f64..6.0, nu in 2.5f64..20.0) {
            let k = 3usize;
            let fam = RadialFamily::Custom(CustomRadial::new(
                "student",
                move |r: f64| (1.0 + r * r / nu).powf(-0.5 * (k as f64 + nu)),
                move |r: f64| (k as f64 + nu) * r / (nu + r * r),
                nu + k as f64 - 1.0,
            ));
            let m = RadialModel::new(k, fam).unwrap();
            let h = 1e-5 * (1.0 + r);
            let fd = -(m.density(r + h).unwrap().ln() - m.density(r - h).unwrap().ln()) / (2.0 * h);
            prop_assert!((fd - m.location_score(r).unwrap()).abs() < 1e-6 * (1.0 + fd.abs()));
        }

        #[test]
        fn scale_law_holds(a in 0.1f64..10.0, u in 0.01f64..0.99, k in 1usize..6) {
            for base in ["gauss", "t:4", "extremal"] {
                let b = model(k, base);
                let s = RadialModel::new(k, b.family().clone().scaled(a)).unwrap();
                let want = b.radial_quantile(u).unwrap() / a;
                prop_assert!((s.radial_quantile(u).unwrap() - want).abs() <= 1e-10 * want);
            }
        }
    }
}
