//! Tests of independence between two blocks of a paired sample: Wilks'
//! likelihood-ratio test and the rank-score statistics
//!
//! `T = n p q / (σ²_{K₁} σ²_{K₂}) ‖ave_i K₁(R_{1i}/(n+1)) K₂(R_{2i}/(n+1)) U_{1i} U_{2i}′‖²_F`
//!
//! built from standardized spatial signs `U` and radius ranks `R`. All
//! p-values are asymptotic, from `χ²_{pq}`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranksigns::{estimate, standardize, BlockData, Estimator, StandardizedBlock};
use crate::specialfn::{
    chi2_quantile, chi2_quantile_upper, chi2_sf, integrate, Integrand, QuadratureSpec,
};

#[derive(Clone)]
enum ScoreKind {
    Sign,
    Wilcoxon,
    VdW {
        k: usize,
    },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

/// A square-integrable score function `K: (0, 1) → R` with `σ²_K = ∫ K²`.
#[derive(Clone)]
pub struct ScoreFunction {
    kind: ScoreKind,
    sigma2: f64,
}

impl fmt::Debug for ScoreFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoreFunction")
            .field("name", &self.name())
            .field("sigma2", &self.sigma2)
            .finish()
    }
}

impl ScoreFunction {
    /// `K ≡ 1`.
    pub fn sign() -> Self {
        ScoreFunction {
            kind: ScoreKind::Sign,
            sigma2: 1.0,
        }
    }

    /// `K(u) = u`.
    pub fn wilcoxon() -> Self {
        ScoreFunction {
            kind: ScoreKind::Wilcoxon,
            sigma2: 1.0 / 3.0,
        }
    }

    /// Van der Waerden scores `K(u) = √(Ψ_k⁻¹(u))` for a `k`-dimensional block.
    pub fn vdw(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("van der Waerden scores need k >= 1".into()));
        }
        Ok(ScoreFunction {
            kind: ScoreKind::VdW { k },
            sigma2: k as f64,
        })
    }

    /// A user score; `σ²_K` is computed by quadrature and must be positive.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(f);
        let g = f.clone();
        let sq = Integrand::new(move |u: f64| {
            let v = g(u);
            v * v
        })
        .singular_both();
        let sigma2 = integrate(&sq, 0.0, 1.0, &QuadratureSpec::default())?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!(
                "score function must have positive finite squared norm, got {sigma2}"
            )));
        }
        Ok(ScoreFunction {
            kind: ScoreKind::Custom {
                name: name.into(),
                f,
            },
            sigma2,
        })
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ScoreKind::Sign => "sign".into(),
            ScoreKind::Wilcoxon => "wilcoxon".into(),
            ScoreKind::VdW { k } => format!("vdw{k}"),
            ScoreKind::Custom { name, .. } => name.clone(),
        }
    }

    /// `K(u)` for `u ∈ (0, 1)`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!(
                "score argument must lie in (0, 1), got {u}"
            )));
        }
        Ok(match &self.kind {
            ScoreKind::Sign => 1.0,
            ScoreKind::Wilcoxon => u,
            ScoreKind::VdW { k } => vdw_score(*k, u)?,
            ScoreKind::Custom { f, .. } => f(u),
        })
    }

    /// `σ²_K = ∫₀¹ K²(u) du`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// `Φ̃_k⁻¹(u) = √(Ψ_k⁻¹(u))`.
fn vdw_score(k: usize, u: f64) -> Result<f64> {
    let x = if u > 0.5 {
        chi2_quantile_upper(k as u32, 1.0 - u)?
    } else {
        chi2_quantile(k as u32, u)?
    };
    Ok(x.sqrt())
}

/// `n` paired observations of a `p`-vector and a `q`-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    block1: BlockData,
    block2: BlockData,
}

impl PairedSample {
    pub fn new(block1: DMatrix<f64>, block2: DMatrix<f64>) -> Result<Self> {
        if block1.nrows() != block2.nrows() {
            return Err(Error::Domain(format!(
                "blocks have different sample sizes ({} and {})",
                block1.nrows(),
                block2.nrows()
            )));
        }
        Ok(PairedSample {
            block1: BlockData::new(block1)?,
            block2: BlockData::new(block2)?,
        })
    }

    /// Splits the columns of `data` into the first `p` and the rest.
    pub fn from_columns(data: &DMatrix<f64>, p: usize) -> Result<Self> {
        let cols = data.ncols();
        if p == 0 || p >= cols {
            return Err(Error::Domain(format!(
                "first block size must satisfy 1 <= p < {cols}, got {p}"
            )));
        }
        PairedSample::new(
            data.columns(0, p).into_owned(),
            data.columns(p, cols - p).into_owned(),
        )
    }

    pub fn n(&self) -> usize {
        self.block1.n()
    }

    pub fn p(&self) -> usize {
        self.block1.k()
    }

    pub fn q(&self) -> usize {
        self.block2.k()
    }

    pub fn block1(&self) -> &BlockData {
        &self.block1
    }

    pub fn block2(&self) -> &BlockData {
        &self.block2
    }
}

/// The available tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wilks,
    Sign,
    Wilcoxon,
    Vdw,
    /// Generic rank-score statistic with caller-supplied scores.
    RankScore,
}

impl Method {
    /// The tests selectable by name.
    pub const NAMED: [Method; 4] = [Method::Wilks, Method::Sign, Method::Wilcoxon, Method::Vdw];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wilks => "wilks",
            Method::Sign => "sign",
            Method::Wilcoxon => "wilcoxon",
            Method::Vdw => "vdw",
            Method::RankScore => "rankscore",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wilks" => Ok(Method::Wilks),
            "sign" => Ok(Method::Sign),
            "wilcoxon" => Ok(Method::Wilcoxon),
            "vdw" => Ok(Method::Vdw),
            other => Err(Error::Domain(format!(
                "unknown method '{other}' (expected wilks, sign, wilcoxon or vdw)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

impl TestResult {
    /// Asymptotic `χ²_df` decision for a statistic.
    pub fn from_statistic(method: Method, statistic: f64, df: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(statistic >= 0.0) {
            return Err(Error::Domain(format!(
                "statistic must be nonnegative, got {statistic}"
            )));
        }
        let p_value = if statistic.is_infinite() {
            0.0
        } else {
            chi2_sf(df as u32, statistic)?
        };
        Ok(TestResult {
            method,
            statistic,
            df,
            p_value,
            alpha,
            reject: p_value < alpha,
        })
    }

    /// `χ²_{df, 1−α}`.
    pub fn critical_value(&self) -> Result<f64> {
        chi2_quantile_upper(self.df as u32, self.alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Wilks' test: `−n ln(det S / (det S₁₁ det S₂₂))` with `S` the partitioned
/// sample covariance. Computed as `−n ln(det S₂₂·₁ / det S₂₂)` through the
/// Schur complement `S₂₂·₁ = S₂₂ − S₂₁ S₁₁⁻¹ S₁₂`.
pub fn wilks_test(sample: &PairedSample, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let statistic = wilks_statistic(sample)?;
    TestResult::from_statistic(Method::Wilks, statistic, sample.p() * sample.q(), alpha)
}

/// `1 − ρ²` at or below this counts as exact linear dependence.
const PERFECT_DEPENDENCE: f64 = 64.0 * f64::EPSILON;

pub fn wilks_statistic(sample: &PairedSample) -> Result<f64> {
    let (n, p, q) = (sample.n(), sample.p(), sample.q());
    if n <= p + q {
        return Err(Error::Domain(format!(
            "Wilks' test needs n > p + q = {}, got n = {n}",
            p + q
        )));
    }
    let center = |x: &DMatrix<f64>| {
        let mean = x.row_mean();
        let mut c = x.clone();
        for mut row in c.row_iter_mut() {
            row -= &mean;
        }
        c
    };
    let x1 = center(sample.block1().data());
    let x2 = center(sample.block2().data());
    let nf = n as f64;
    let s11 = x1.transpose() * &x1 / nf;
    let s22 = x2.transpose() * &x2 / nf;
    let s12 = x1.transpose() * &x2 / nf;
    let c11 = s11
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("first-block covariance is singular".into()))?;
    let c22 = s22
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("second-block covariance is singular".into()))?;
    let singular = |l: &DMatrix<f64>, s: &DMatrix<f64>| {
        (0..l.nrows()).any(|i| !(l[(i, i)] * l[(i, i)] > 1e-12 * s[(i, i)]))
    };
    if singular(&c11.l(), &s11) || singular(&c22.l(), &s22) {
        return Err(Error::Degenerate("block covariance is singular".into()));
    }
    let schur = &s22 - s12.transpose() * c11.solve(&s12);
    // eigenvalues of S₂₂^{-1/2} S₂₂·₁ S₂₂^{-1/2} are 1 − ρ_i² for the
    // canonical correlations ρ_i
    let l22 = c22.l();
    let left = l22
        .solve_lower_triangular(&schur)
        .ok_or_else(|| Error::Degenerate("second-block covariance is singular".into()))?;
    let mut m = l22
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::Degenerate("second-block covariance is singular".into()))?;
    m = (&m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
    let statistic = if eig.iter().any(|&l| l <= PERFECT_DEPENDENCE) {
        // det S = 0: perfect linear dependence between the blocks
        f64::INFINITY
    } else {
        -nf * eig.iter().map(|l| l.min(1.0).ln()).sum::<f64>()
    };
    Ok(statistic.max(0.0))
}

/// Signs and ranks of both blocks under `estimator`.
pub fn standardize_pair(
    sample: &PairedSample,
    estimator: Estimator,
) -> Result<(StandardizedBlock, StandardizedBlock)> {
    let b1 = standardize(sample.block1(), &estimate(sample.block1(), estimator)?)?;
    let b2 = standardize(sample.block2(), &estimate(sample.block2(), estimator)?)?;
    Ok((b1, b2))
}

fn check_pair(b1: &StandardizedBlock, b2: &StandardizedBlock) -> Result<()> {
    if b1.n() != b2.n() || b1.n() == 0 {
        return Err(Error::Domain(
            "standardized blocks must have equal, positive sizes".into(),
        ));
    }
    Ok(())
}

/// `‖Σ_i w_i U_{1i} U_{2i}′‖²_F`.
fn weighted_cross_norm2(b1: &StandardizedBlock, b2: &StandardizedBlock, w: &[f64]) -> f64 {
    let (p, q) = (b1.k(), b2.k());
    let mut a = DMatrix::<f64>::zeros(p, q);
    for (i, wi) in w.iter().enumerate() {
        for r in 0..p {
            let s = wi * b1.signs[(i, r)];
            for c in 0..q {
                a[(r, c)] += s * b2.signs[(i, c)];
            }
        }
    }
    a.norm_squared()
}

/// The generic rank-score statistic on standardized blocks.
pub fn rank_score_statistic(
    b1: &StandardizedBlock,
    b2: &StandardizedBlock,
    k1: &ScoreFunction,
    k2: &ScoreFunction,
) -> Result<f64> {
    check_pair(b1, b2)?;
    let n = b1.n();
    let nf = n as f64;
    let u = |r: usize| r as f64 / (nf + 1.0);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        w.push(k1.eval(u(b1.ranks[i]))? * k2.eval(u(b2.ranks[i]))? / nf);
    }
    let (p, q) = (b1.k() as f64, b2.k() as f64);
    Ok(nf * p * q / (k1.sigma2() * k2.sigma2()) * weighted_cross_norm2(b1, b2, &w))
}

/// `n ‖ave_i Φ̃_p⁻¹(R_{1i}/(n+1)) Φ̃_q⁻¹(R_{2i}/(n+1)) U_{1i}U_{2i}′‖²`.
pub fn vdw_statistic(b1: &StandardizedBlock, b2: &StandardizedBlock) -> Result<f64> {
    check_pair(b1, b2)?;
    let n = b1.n();
    let nf = n as f64;
    // scores depend only on the rank, so tabulate them once per block
    let table = |k: usize| -> Result<Vec<f64>> {
        (1..=n)
            .map(|r| vdw_score(k, r as f64 / (nf + 1.0)))
            .collect()
    };
    let (t1, t2) = (table(b1.k())?, table(b2.k())?);
    let w: Vec<f64> = (0..n)
        .map(|i| t1[b1.ranks[i] - 1] * t2[b2.ranks[i] - 1] / nf)
        .collect();
    Ok(nf * weighted_cross_norm2(b1, b2, &w))
}

/// `9 n p q / (n+1)⁴ ‖ave_i R_{1i} R_{2i} U_{1i}U_{2i}′‖²`.
pub fn wilcoxon_statistic(b1: &StandardizedBlock, b2: &StandardizedBlock) -> Result<f64> {
    check_pair(b1, b2)?;
    let nf = b1.n() as f64;
    let w: Vec<f64> = (0..b1.n())
        .map(|i| (b1.ranks[i] * b2.ranks[i]) as f64 / nf)
        .collect();
    let (p, q) = (b1.k() as f64, b2.k() as f64);
    Ok(9.0 * nf * p * q / (nf + 1.0).powi(4) * weighted_cross_norm2(b1, b2, &w))
}

/// `n p q ‖ave_i U_{1i}U_{2i}′‖²`.
pub fn sign_statistic(b1: &StandardizedBlock, b2: &StandardizedBlock) -> Result<f64> {
    check_pair(b1, b2)?;
    let nf = b1.n() as f64;
    let w = vec![1.0 / nf; b1.n()];
    let (p, q) = (b1.k() as f64, b2.k() as f64);
    Ok(nf * p * q * weighted_cross_norm2(b1, b2, &w))
}

fn check_rank_sample(sample: &PairedSample) -> Result<()> {
    let need = sample.p().max(sample.q()) + 2;
    if sample.n() < need {
        return Err(Error::Domain(format!(
            "rank-score tests need n >= max(p, q) + 2 = {need}, got {}",
            sample.n()
        )));
    }
    Ok(())
}

/// Rank-score test with arbitrary scores.
pub fn rank_score_test(
    sample: &PairedSample,
    k1: &ScoreFunction,
    k2: &ScoreFunction,
    estimator: Estimator,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_rank_sample(sample)?;
    let (b1, b2) = standardize_pair(sample, estimator)?;
    let statistic = rank_score_statistic(&b1, &b2, k1, k2)?;
    TestResult::from_statistic(Method::RankScore, statistic, sample.p() * sample.q(), alpha)
}

fn specialized_test(
    sample: &PairedSample,
    estimator: Estimator,
    alpha: f64,
    method: Method,
    stat: fn(&StandardizedBlock, &StandardizedBlock) -> Result<f64>,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_rank_sample(sample)?;
    let (b1, b2) = standardize_pair(sample, estimator)?;
    TestResult::from_statistic(method, stat(&b1, &b2)?, sample.p() * sample.q(), alpha)
}

pub fn vdw_test(sample: &PairedSample, estimator: Estimator, alpha: f64) -> Result<TestResult> {
    specialized_test(sample, estimator, alpha, Method::Vdw, vdw_statistic)
}

pub fn wilcoxon_test(
    sample: &PairedSample,
    estimator: Estimator,
    alpha: f64,
) -> Result<TestResult> {
    specialized_test(
        sample,
        estimator,
        alpha,
        Method::Wilcoxon,
        wilcoxon_statistic,
    )
}

pub fn sign_test(sample: &PairedSample, estimator: Estimator, alpha: f64) -> Result<TestResult> {
    specialized_test(sample, estimator, alpha, Method::Sign, sign_statistic)
}

/// Runs a named test. Wilks' test ignores `estimator`.
pub fn run_test(
    sample: &PairedSample,
    method: Method,
    estimator: Estimator,
    alpha: f64,
) -> Result<TestResult> {
    match method {
        Method::Wilks => wilks_test(sample, alpha),
        Method::Sign => sign_test(sample, estimator, alpha),
        Method::Wilcoxon => wilcoxon_test(sample, estimator, alpha),
        Method::Vdw => vdw_test(sample, estimator, alpha),
        Method::RankScore => Err(Error::Domain(
            "the generic rank-score test needs explicit score functions".into(),
        )),
    }
}

/// Runs several named tests on one sample, standardizing each block once.
pub fn run_tests(
    sample: &PairedSample,
    methods: &[Method],
    estimator: Estimator,
    alpha: f64,
) -> Result<Vec<TestResult>> {
    check_alpha(alpha)?;
    let needs_ranks = methods.iter().any(|m| *m != Method::Wilks);
    let std = if needs_ranks {
        check_rank_sample(sample)?;
        Some(standardize_pair(sample, estimator)?)
    } else {
        None
    };
    let df = sample.p() * sample.q();
    methods
        .iter()
        .map(|&m| {
            let statistic = match (m, &std) {
                (Method::Wilks, _) => wilks_statistic(sample)?,
                (Method::Sign, Some((b1, b2))) => sign_statistic(b1, b2)?,
                (Method::Wilcoxon, Some((b1, b2))) => wilcoxon_statistic(b1, b2)?,
                (Method::Vdw, Some((b1, b2))) => vdw_statistic(b1, b2)?,
                _ => return run_test(sample, m, estimator, alpha),
            };
            TestResult::from_statistic(m, statistic, df, alpha)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{KonijnModel, RadialModel};
    use crate::rng::RngStream;
    use crate::specialfn::chi2_cdf;
    use proptest::prelude::*;

    fn column(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn random_sample(n: usize, p: usize, q: usize, seed: u64, delta: f64) -> PairedSample {
        let f = RadialModel::new(p, "t:5".parse().unwrap()).unwrap();
        let g = RadialModel::new(q, "gauss".parse().unwrap()).unwrap();
        KonijnModel::new(f, g, KonijnModel::default_m(p, q), delta, n)
            .unwrap()
            .sample(RngStream::new(seed, 0))
            .unwrap()
    }

    #[test]
    fn score_examples() {
        assert_eq!(ScoreFunction::wilcoxon().eval(0.25).unwrap(), 0.25);
        assert_eq!(ScoreFunction::sign().eval(0.9).unwrap(), 1.0);
        let v = ScoreFunction::vdw(1).unwrap().eval(0.95).unwrap();
        assert!((v - 1.959963984540054).abs() < 1e-12);
        assert!(ScoreFunction::sign().eval(0.0).is_err());
        assert_eq!(ScoreFunction::sign().sigma2(), 1.0);
        assert_eq!(ScoreFunction::wilcoxon().sigma2(), 1.0 / 3.0);
        assert_eq!(ScoreFunction::vdw(4).unwrap().sigma2(), 4.0);
    }

    #[test]
    fn sigma2_matches_quadrature() {
        for k in [1, 2, 5] {
            let vdw = ScoreFunction::vdw(k).unwrap();
            let custom = ScoreFunction::custom("vdw-copy", move |u| vdw.eval(u).unwrap()).unwrap();
            assert!(
                (custom.sigma2() - k as f64).abs() < 1e-9,
                "k={k}: {}",
                custom.sigma2()
            );
        }
        let w = ScoreFunction::custom("linear", |u| u).unwrap();
        assert!((w.sigma2() - 1.0 / 3.0).abs() < 1e-12);
        assert!(ScoreFunction::custom("zero", |_| 0.0).is_err());
    }

    #[test]
    fn wilks_examples() {
        let s = PairedSample::new(column(&[1.0, 2.0, 3.0, 4.0]), column(&[2.0, 0.0, 2.0, 0.0]))
            .unwrap();
        let r = wilks_test(&s, 0.05).unwrap();
        assert!((r.statistic + 4.0 * 0.8f64.ln()).abs() < 1e-12);
        assert!((r.statistic - 0.892574).abs() < 1e-6);
        assert!((r.p_value - (1.0 - chi2_cdf(1, r.statistic).unwrap())).abs() < 1e-14);
        assert_eq!(r.df, 1);
        // S12 = 0 exactly
        let s = PairedSample::new(
            column(&[1.0, -1.0, 1.0, -1.0]),
            column(&[1.0, 1.0, -1.0, -1.0]),
        )
        .unwrap();
        let r = wilks_test(&s, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilks_perfect_dependence_is_infinite() {
        let x =
            DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 0.0, 1.0, 2.0, 1.0, -1.0, 3.0, 0.5, -2.0]);
        let y = column(&[1.0, 1.0, 3.0, 2.0, -1.5]); // y = x1 + x2
        let r = wilks_test(&PairedSample::new(x, y).unwrap(), 0.05).unwrap();
        assert!(r.statistic.is_infinite());
        assert_eq!(r.p_value, 0.0);
        assert!(r.reject);
    }

    #[test]
    fn wilks_degenerate_block() {
        let x = column(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        let y = column(&[1.0, 2.0, 0.0, 4.0, 1.0]);
        assert!(wilks_test(&PairedSample::new(x, y).unwrap(), 0.05)
            .unwrap_err()
            .is_degenerate());
    }

    #[test]
    fn sample_validation() {
        assert!(PairedSample::new(DMatrix::zeros(5, 1), DMatrix::zeros(6, 1)).is_err());
        let d = DMatrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64);
        assert!(PairedSample::from_columns(&d, 3).is_err());
        assert!(PairedSample::from_columns(&d, 0).is_err());
        let s = PairedSample::from_columns(&d, 1).unwrap();
        assert_eq!((s.p(), s.q(), s.n()), (1, 2, 6));
    }

    /// Direct transcription of the rank-score statistic for `p = q = 1`
    /// with location 0 and unit shape: signs are ±1 and ranks come from |x|.
    fn oracle_univariate(x: &[f64], y: &[f64], k: impl Fn(f64) -> f64, sigma2: f64) -> f64 {
        let n = x.len();
        let rank = |v: &[f64], i: usize| v.iter().filter(|w| w.abs() < v[i].abs()).count() + 1;
        let mut sum = 0.0;
        for i in 0..n {
            let r1 = rank(x, i) as f64 / (n as f64 + 1.0);
            let r2 = rank(y, i) as f64 / (n as f64 + 1.0);
            sum += k(r1) * k(r2) * x[i].signum() * y[i].signum();
        }
        let a = sum / n as f64;
        n as f64 / (sigma2 * sigma2) * a * a
    }

    fn unit_block(v: &[f64]) -> StandardizedBlock {
        let radii: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        StandardizedBlock {
            signs: DMatrix::from_iterator(v.len(), 1, v.iter().map(|x| x.signum())),
            ranks: crate::ranksigns::ranks(&radii),
            radii,
        }
    }

    #[test]
    fn six_point_oracle() {
        let x = [0.3, -1.2, 2.5, -0.7, 1.9, -3.1];
        let y = [-0.4, 0.8, 1.1, -2.2, 0.05, -1.6];
        let (b1, b2) = (unit_block(&x), unit_block(&y));
        let w = ScoreFunction::wilcoxon();
        let got = rank_score_statistic(&b1, &b2, &w, &w).unwrap();
        let want = oracle_univariate(&x, &y, |u| u, 1.0 / 3.0);
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        assert!((wilcoxon_statistic(&b1, &b2).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn two_point_wilcoxon() {
        // n = 2, p = q = 1: ranks (1,2) and (2,1), signs (+,−) and (+,+)
        let b1 = unit_block(&[1.0, -2.0]);
        let b2 = unit_block(&[3.0, 0.5]);
        // A = (1·2·1·1 + 2·1·(−1)·1)/2 = 0
        assert_eq!(wilcoxon_statistic(&b1, &b2).unwrap(), 0.0);
        let b2 = unit_block(&[3.0, -0.5]);
        // A = (2 + 2)/2 = 2; T = 9·2/3⁴·4 = 8/9
        let t = wilcoxon_statistic(&b1, &b2).unwrap();
        assert!((t - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn cancelling_signs_give_zero() {
        let b1 = unit_block(&[1.0, -1.0, 1.0, -1.0]);
        let b2 = unit_block(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(sign_statistic(&b1, &b2).unwrap(), 0.0);
    }

    #[test]
    fn fixed_signs_give_npq() {
        let n = 7;
        let mut s1 = DMatrix::zeros(n, 2);
        let mut s2 = DMatrix::zeros(n, 3);
        for i in 0..n {
            s1.set_row(i, &nalgebra::RowDVector::from_vec(vec![0.6, 0.8]));
            s2.set_row(i, &nalgebra::RowDVector::from_vec(vec![0.0, 1.0, 0.0]));
        }
        let radii: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let ranks = crate::ranksigns::ranks(&radii);
        let b1 = StandardizedBlock {
            signs: s1,
            radii: radii.clone(),
            ranks: ranks.clone(),
        };
        let b2 = StandardizedBlock {
            signs: s2,
            radii,
            ranks,
        };
        assert!((sign_statistic(&b1, &b2).unwrap() - (n * 6) as f64).abs() < 1e-12);
    }

    #[test]
    fn result_consistency() {
        for stat in [0.0, 0.5, 3.0, 9.487729036781154, 12.0, f64::INFINITY] {
            let r = TestResult::from_statistic(Method::Sign, stat, 4, 0.05).unwrap();
            let crit = r.critical_value().unwrap();
            assert_eq!(r.reject, r.p_value < r.alpha);
            if (stat - crit).abs() > 1e-9 {
                assert_eq!(r.reject, stat > crit);
            }
        }
        assert!(TestResult::from_statistic(Method::Sign, -1.0, 4, 0.05).is_err());
        assert!(TestResult::from_statistic(Method::Sign, 1.0, 4, 1.0).is_err());
    }

    #[test]
    fn method_parsing() {
        for m in Method::NAMED {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("spearman".parse::<Method>().is_err());
    }

    #[test]
    fn run_tests_matches_individual_tests() {
        let s = random_sample(40, 2, 3, 9, 1.0);
        let all = run_tests(&s, &Method::NAMED, Estimator::Tyler, 0.05).unwrap();
        for r in all {
            assert_eq!(r, run_test(&s, r.method, Estimator::Tyler, 0.05).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn specialized_equal_generic(seed in 0u64..10_000, p in 1usize..4, q in 1usize..4, est in prop_oneof![Just(Estimator::Moment), Just(Estimator::Tyler)]) {
            let s = random_sample(30, p, q, seed, 2.0);
            let (b1, b2) = standardize_pair(&s, est).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
            let g = rank_score_statistic(&b1, &b2, &ScoreFunction::vdw(p).unwrap(), &ScoreFunction::vdw(q).unwrap()).unwrap();
            prop_assert!(rel(g, vdw_statistic(&b1, &b2).unwrap()));
            let w = ScoreFunction::wilcoxon();
            prop_assert!(rel(rank_score_statistic(&b1, &b2, &w, &w).unwrap(), wilcoxon_statistic(&b1, &b2).unwrap()));
            let sg = ScoreFunction::sign();
            prop_assert!(rel(rank_score_statistic(&b1, &b2, &sg, &sg).unwrap(), sign_statistic(&b1, &b2).unwrap()));
        }

        #[test]
        fn statistics_nonnegative(seed in 0u64..10_000) {
            let s = random_sample(25, 2, 2, seed, 0.0);
            for r in run_tests(&s, &Method::NAMED, Estimator::Tyler, 0.05).unwrap() {
                prop_assert!(r.statistic >= 0.0);
                prop_assert!((0.0..=1.0).contains(&r.p_value));
            }
        }
    }
}
