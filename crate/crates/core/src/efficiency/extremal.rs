//! The extremal radial family `h_{k,σ}` at which the Wilcoxon efficiency
//! bound is attained, and the Bessel critical points `c_k` that
//! parameterize it.
//!
//! With `ν = √(2k−1)/2` and `s(r) = √r J_ν(r)`, the radial CDF in dimension
//! `k` is `H_{k,1}(r) = s(r)/s(c_k)` on `(0, c_k]`, where `c_k` is the first
//! stationary point of `s`. Because `s'' = −s (1 − (k−1)/(2r²))`, both the
//! density and its log-derivative are available in closed form from `J_ν`
//! and `J_{ν+1}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specialfn::{bessel_j, find_root, BESSEL_MAX_ARG};

const SCAN_STEP: f64 = 0.05;
const ROOT_TOL: f64 = 1e-14;

fn bessel_order(k: usize) -> f64 {
    (2.0 * k as f64 - 1.0).sqrt() / 2.0
}

fn check_dim(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::Domain("dimension must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// `(√x J_ν(x))' / √x = ((2ν+1)/(2x)) J_ν(x) − J_{ν+1}(x)`.
fn stationarity(nu: f64, x: f64) -> Result<f64> {
    Ok((2.0 * nu + 1.0) / (2.0 * x) * bessel_j(nu, x)? - bessel_j(nu + 1.0, x)?)
}

/// Smallest positive stationary point `c_k` of `√x J_ν(x)`, `ν = √(2k−1)/2`.
pub fn bessel_critical(k: usize) -> Result<f64> {
    check_dim(k)?;
    let nu = bessel_order(k);
    let mut x = SCAN_STEP;
    let mut gx = stationarity(nu, x)?;
    while x + SCAN_STEP <= BESSEL_MAX_ARG {
        let next = x + SCAN_STEP;
        let gn = stationarity(nu, next)?;
        if gx == 0.0 {
            return Ok(x);
        }
        if gx.signum() != gn.signum() {
            return find_root(
                |t| stationarity(nu, t).unwrap_or(f64::NAN),
                x,
                next,
                ROOT_TOL,
            );
        }
        x = next;
        gx = gn;
    }
    Err(Error::Range(format!(
        "no stationary point of sqrt(x) J_nu(x) below {BESSEL_MAX_ARG} for k = {k}"
    )))
}

/// Residual of the stationarity condition at `x`, for diagnostics.
pub fn bessel_critical_residual(k: usize, x: f64) -> Result<f64> {
    check_dim(k)?;
    stationarity(bessel_order(k), x)
}

/// `ω_k = (2c_k² + k − 1)/(8c_k)`.
pub fn omega(k: usize, c_k: f64) -> f64 {
    (2.0 * c_k * c_k + k as f64 - 1.0) / (8.0 * c_k)
}

/// Number of Taylor coefficients of `s` kept around `c_k`.
const TAYLOR_TERMS: usize = 64;
/// Relative gap `(c_k − r)/c_k` below which the Taylor expansion is used.
const TAYLOR_REACH: f64 = 0.4;
/// Below this radius the score uses its leading small-`r` term, since
/// `s` and `s'` underflow.
const SMALL_R: f64 = 1e-60;

/// The unit-scale extremal law `H_{k,1}` in dimension `k`.
///
/// Near the cutoff `s(c_k) − s(r)` and `s'(r)` suffer cancellation when
/// evaluated from Bessel values, so there `s` is expanded in powers of
/// `r − c_k` from the ODE `s'' = −(1 − (k−1)/(2r²)) s`; the series converges
/// for `|r − c_k| < c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalLaw {
    dim: usize,
    order: f64,
    cutoff: f64,
    norm: f64,
    taylor: Vec<f64>,
}

impl ExtremalLaw {
    pub fn new(k: usize) -> Result<Self> {
        let cutoff = bessel_critical(k)?;
        let order = bessel_order(k);
        let norm = cutoff.sqrt() * bessel_j(order, cutoff)?;
        Ok(ExtremalLaw {
            dim: k,
            order,
            cutoff,
            norm,
            taylor: taylor_coefficients(k, cutoff, norm),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bessel order `ν = √(2k−1)/2`.
    pub fn order(&self) -> f64 {
        self.order
    }

    /// Support endpoint `c_k`.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn omega(&self) -> f64 {
        omega(self.dim, self.cutoff)
    }

    fn near(&self, gap: f64) -> bool {
        gap <= TAYLOR_REACH * self.cutoff
    }

    /// `s(c − gap)`, `s(c) − s(c − gap)` and `s'(c − gap)`.
    fn eval_gap(&self, gap: f64) -> Result<(f64, f64, f64)> {
        if self.near(gap) {
            let h = -gap;
            let (mut deficit, mut deriv, mut pow) = (0.0, 0.0, h);
            // a_1 = 0
            for n in 2..self.taylor.len() {
                deriv += n as f64 * self.taylor[n] * pow;
                pow *= h;
                deficit -= self.taylor[n] * pow;
            }
            Ok((self.norm - deficit, deficit, deriv))
        } else {
            let (s, sp) = self.eval_far(self.cutoff - gap)?;
            Ok((s, self.norm - s, sp))
        }
    }

    /// `s(r)` and `s'(r)` from Bessel values; accurate away from the cutoff,
    /// including for tiny `r`.
    fn eval_far(&self, r: f64) -> Result<(f64, f64)> {
        let s = r.sqrt() * bessel_j(self.order, r)?;
        let sp = r.sqrt() * stationarity(self.order, r)?;
        Ok((s, sp))
    }

    fn score_from(&self, r: f64, s: f64, sp: f64) -> f64 {
        let km1 = self.dim as f64 - 1.0;
        if r < SMALL_R {
            // s/s' = r/(ν+½) (1 + O(r²)), and the O(r) remainder is negligible
            return km1 * (1.0 - 1.0 / (2.0 * self.order + 1.0)) / r;
        }
        km1 / r + s * (1.0 - km1 / (2.0 * r * r)) / sp
    }

    /// Location score at a point given both as radius and as gap, using
    /// whichever representation is accurate there.
    pub(crate) fn score_split(&self, r: f64, gap: f64) -> Result<f64> {
        if self.near(gap) {
            self.score_gap(gap)
        } else {
            self.location_score(r)
        }
    }

    /// `H_{k,1}(r)`.
    pub fn cdf(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        if r >= self.cutoff {
            return Ok(1.0);
        }
        let gap = self.cutoff - r;
        let v = if self.near(gap) {
            1.0 - self.eval_gap(gap)?.1 / self.norm
        } else {
            self.eval_far(r)?.0 / self.norm
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// `1 − H_{k,1}(c_k − gap)`, accurate for small gaps.
    pub fn sf_gap(&self, gap: f64) -> Result<f64> {
        if gap <= 0.0 {
            return Ok(0.0);
        }
        if gap >= self.cutoff {
            return Ok(1.0);
        }
        let (_, deficit, _) = self.eval_gap(gap)?;
        Ok((deficit / self.norm).clamp(0.0, 1.0))
    }

    /// Density of the radius, `H'_{k,1}(r)`.
    pub fn radius_density(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || r >= self.cutoff {
            return Ok(0.0);
        }
        let gap = self.cutoff - r;
        let sp = if self.near(gap) {
            self.eval_gap(gap)?.2
        } else {
            self.eval_far(r)?.1
        };
        Ok((sp / self.norm).max(0.0))
    }

    /// Radial function `h_{k,1}(r) = H'_{k,1}(r) / r^{k−1}`, normalized so
    /// that the induced radius CDF is exactly `H_{k,1}`.
    pub fn radial_function(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || r >= self.cutoff {
            return Ok(0.0);
        }
        Ok(self.radius_density(r)? / r.powi(self.dim as i32 - 1))
    }

    /// `φ_h(r) = (k−1)/r − H''(r)/H'(r)` on `(0, c_k)`.
    pub fn location_score(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r < self.cutoff) {
            return Err(Error::Domain(format!(
                "extremal location score needs 0 < r < {}, got {r}",
                self.cutoff
            )));
        }
        let gap = self.cutoff - r;
        if self.near(gap) {
            return self.score_gap(gap);
        }
        let (s, sp) = self.eval_far(r)?;
        Ok(self.score_from(r, s, sp))
    }

    /// Location score at `r = c_k − gap`, keeping full relative accuracy in
    /// the gap.
    pub fn score_gap(&self, gap: f64) -> Result<f64> {
        if !(gap > 0.0 && gap < self.cutoff) {
            return Err(Error::Domain(format!(
                "extremal location score needs 0 < gap < {}, got {gap}",
                self.cutoff
            )));
        }
        let (s, _, sp) = self.eval_gap(gap)?;
        Ok(self.score_from(self.cutoff - gap, s, sp))
    }

    /// `H_{k,1}^{-1}(u)` for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!(
                "quantile level must lie in (0, 1), got {u}"
            )));
        }
        Ok(self.quantile_split(u, 1.0 - u)?.0)
    }

    /// Quantile at level `u` with complement `q = 1 − u`, both exact; returns
    /// the radius and its gap to the cutoff. The lower half is solved in
    /// `ln r` and the upper half in `ln(c_k − r)`, so either tail keeps full
    /// relative accuracy.
    pub fn quantile_split(&self, u: f64, q: f64) -> Result<(f64, f64)> {
        const LOG_TOL: f64 = 1e-14;
        // smallest subnormal, so that even u near 5e-324 is bracketed
        let lo = -745.0;
        let hi = self.cutoff.ln();
        if u <= 0.5 {
            let t = find_root(
                |t| self.cdf(t.exp()).map(|v| v - u).unwrap_or(f64::NAN),
                lo,
                hi,
                LOG_TOL,
            )?;
            let r = t.exp();
            Ok((r, self.cutoff - r))
        } else {
            let t = find_root(
                |t| self.sf_gap(t.exp()).map(|v| v - q).unwrap_or(f64::NAN),
                lo,
                hi,
                LOG_TOL,
            )?;
            let gap = t.exp();
            Ok((self.cutoff - gap, gap))
        }
    }
}

/// Taylor coefficients `a_n` of `s(c + h)`; `a_0 = s(c)`, `a_1 = s'(c) = 0`.
fn taylor_coefficients(k: usize, c: f64, s_c: f64) -> Vec<f64> {
    let half_km1 = 0.5 * (k as f64 - 1.0);
    // 1 − (k−1)/(2(c+h)²) = Σ b_n h^n
    let mut b = vec![0.0; TAYLOR_TERMS];
    for (n, bn) in b.iter_mut().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        *bn = -half_km1 * sign * (n as f64 + 1.0) / c.powi(n as i32 + 2);
    }
    b[0] += 1.0;
    let mut a = vec![0.0; TAYLOR_TERMS];
    a[0] = s_c;
    for n in 0..TAYLOR_TERMS - 2 {
        let conv: f64 = (0..=n).map(|j| b[j] * a[n - j]).sum();
        a[n + 2] = -conv / ((n + 2) as f64 * (n + 1) as f64);
    }
    a
}

/// `H_{k,1}(r)`: the extremal radial CDF at unit scale.
pub fn extremal_radial_cdf(k: usize, r: f64) -> Result<f64> {
    ExtremalLaw::new(k)?.cdf(r)
}

/// Radial function `h_{k,σ}(r) = h_{k,1}(σr)`; zero beyond the support.
pub fn extremal_radial_density(k: usize, sigma: f64, r: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    ExtremalLaw::new(k)?.radial_function(sigma * r)
}

/// Location score of `h_{k,σ}`: `σ φ_{h_{k,1}}(σr)` on `(0, c_k/σ)`.
pub fn extremal_location_score(k: usize, sigma: f64, r: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(sigma * ExtremalLaw::new(k)?.location_score(sigma * r)?)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "extremal scale must be positive, got {sigma}"
        )))
    }
}

/// Hodges–Lehmann lower bound for the Wilcoxon-versus-Wilks ARE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub p: usize,
    pub q: usize,
    pub c_p: f64,
    pub c_q: f64,
    pub omega_p: f64,
    pub omega_q: f64,
    pub bound: f64,
}

/// `9 (2c_p²+p−1)² (2c_q²+q−1)² / (2¹⁰ p q c_p² c_q²)`.
pub fn hl_lower_bound(p: usize, q: usize) -> Result<BoundResult> {
    let c_p = bessel_critical(p)?;
    let c_q = if q == p { c_p } else { bessel_critical(q)? };
    Ok(bound_from_critical(p, q, c_p, c_q))
}

pub(crate) fn bound_from_critical(p: usize, q: usize, c_p: f64, c_q: f64) -> BoundResult {
    let (pf, qf) = (p as f64, q as f64);
    let num_p = 2.0 * c_p * c_p + pf - 1.0;
    let num_q = 2.0 * c_q * c_q + qf - 1.0;
    let bound = 9.0 * num_p.powi(2) * num_q.powi(2) / (1024.0 * pf * qf * c_p * c_p * c_q * c_q);
    BoundResult {
        p,
        q,
        c_p,
        c_q,
        omega_p: omega(p, c_p),
        omega_q: omega(q, c_q),
        bound,
    }
}
