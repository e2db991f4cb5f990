//! Seeded simulation of the tests under Konijn alternatives: rejection
//! rates, null-distribution fit and power curves.
//!
//! Replicate `r` draws its sample from stream `(seed, r)`, so a report is a
//! pure function of its configuration whatever the thread count.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{KonijnModel, RadialFamily, RadialModel};
use crate::ranksigns::Estimator;
use crate::rng::RngStream;
use crate::specialfn::{chi2_cdf, chi2_quantile};
use crate::testing::{run_tests, Method, TestResult};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_080_101;

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Levels at which empirical statistic quantiles are reported.
pub const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.5, 0.9, 0.95, 0.99];

/// Serializable description of a Konijn model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KonijnSpec {
    pub p: usize,
    pub q: usize,
    pub f: RadialFamily,
    pub g: RadialFamily,
    /// Row-major `p × q` mixing matrix; `e₁e₁′` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<Vec<f64>>>,
    pub delta: f64,
    pub n: usize,
}

impl KonijnSpec {
    pub fn build(&self) -> Result<KonijnModel> {
        let (p, q) = (self.p, self.q);
        if p == 0 || q == 0 {
            return Err(Error::Model(format!(
                "block dimensions must be positive, got p={p}, q={q}"
            )));
        }
        let m = match &self.m {
            None => KonijnModel::default_m(p, q),
            Some(rows) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != q) {
                    return Err(Error::Model(format!("m must have {p} rows of {q} entries")));
                }
                DMatrix::from_fn(p, q, |i, j| rows[i][j])
            }
        };
        KonijnModel::new(
            RadialModel::new(p, self.f.clone())?,
            RadialModel::new(q, self.g.clone())?,
            m,
            self.delta,
            self.n,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub konijn: KonijnSpec,
    pub tests: Vec<Method>,
    pub alpha: f64,
    pub replications: usize,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl SimConfig {
    /// Checks every invariant and builds the model.
    pub fn validate(&self) -> Result<KonijnModel> {
        if self.replications == 0 {
            return Err(Error::Model("replications must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Model(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.tests.is_empty() {
            return Err(Error::Model("at least one test is required".into()));
        }
        if self.tests.contains(&Method::RankScore) {
            return Err(Error::Model(
                "rankscore needs explicit scores and cannot be simulated by name".into(),
            ));
        }
        self.konijn.build()
    }
}

/// Empirical quantile of the statistic next to the `χ²_{pq}` quantile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePair {
    pub level: f64,
    pub empirical: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub method: Method,
    pub rejections: usize,
    /// Number of successful replicates the rate is based on.
    pub denominator: usize,
    pub rejection_rate: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub quantiles: Vec<QuantilePair>,
    /// Kolmogorov–Smirnov distance between the statistics and `χ²_{pq}`.
    pub ks_distance: f64,
    /// 1% critical value of the KS distance at this sample size.
    pub ks_critical_1pct: f64,
}

impl TestSummary {
    /// Half-width of the confidence interval.
    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub config: SimConfig,
    pub seed: u64,
    pub df: usize,
    pub replications: usize,
    pub failures: usize,
    /// Messages of the first few failed replicates, by replicate index.
    pub failure_examples: Vec<String>,
    pub tests: Vec<TestSummary>,
}

impl SimReport {
    pub fn summary(&self, method: Method) -> Option<&TestSummary> {
        self.tests.iter().find(|t| t.method == method)
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let centre = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    // exact algebra puts p inside; keep it there despite rounding
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// KS critical value at level `alpha` with Stephens' small-sample
/// correction, `c_α/(√n + 0.12 + 0.11/√n)`, `c_α = √(−ln(α/2)/2)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let c = (-(0.5 * alpha).ln() / 2.0).sqrt();
    let rn = (n as f64).sqrt();
    c / (rn + 0.12 + 0.11 / rn)
}

/// `sup |F_n − F|` against a continuous CDF; infinite values count as
/// mass at `+∞`.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = if x.is_infinite() { 1.0 } else { cdf(x)? };
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Linear-interpolation quantile of sorted data.
fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let h = level * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn summarize(method: Method, results: &[&TestResult], df: usize) -> Result<TestSummary> {
    let denominator = results.len();
    let rejections = results.iter().filter(|r| r.reject).count();
    let mut stats: Vec<f64> = results.iter().map(|r| r.statistic).collect();
    stats.sort_by(f64::total_cmp);
    let (ci_low, ci_high) = wilson_interval(rejections, denominator);
    let quantiles = if stats.is_empty() {
        Vec::new()
    } else {
        QUANTILE_LEVELS
            .iter()
            .map(|&level| {
                Ok(QuantilePair {
                    level,
                    empirical: empirical_quantile(&stats, level),
                    reference: chi2_quantile(df as u32, level)?,
                })
            })
            .collect::<Result<_>>()?
    };
    Ok(TestSummary {
        method,
        rejections,
        denominator,
        rejection_rate: if denominator == 0 {
            0.0
        } else {
            rejections as f64 / denominator as f64
        },
        ci_low,
        ci_high,
        quantiles,
        ks_distance: ks_distance(&stats, |x| chi2_cdf(df as u32, x))?,
        ks_critical_1pct: ks_critical(denominator.max(1), 0.01),
    })
}

const FAILURE_EXAMPLES: usize = 5;

fn study(config: &SimConfig, salt: Option<u64>) -> Result<SimReport> {
    let model = config.validate()?;
    let df = model.p() * model.q();
    let stream = |r: u64| {
        let s = RngStream::new(config.seed, r);
        match salt {
            Some(tag) => s.derive(tag),
            None => s,
        }
    };
    let outcomes: Vec<Result<Vec<TestResult>>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| {
            let sample = model.sample(stream(r))?;
            run_tests(&sample, &config.tests, config.estimator, config.alpha)
        })
        .collect();

    let mut failure_examples = Vec::new();
    let mut ok = Vec::with_capacity(outcomes.len());
    for (r, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Ok(results) => ok.push(results),
            Err(e) => {
                if failure_examples.len() < FAILURE_EXAMPLES {
                    failure_examples.push(format!("replicate {r}: {e}"));
                }
            }
        }
    }
    let failures = outcomes.len() - ok.len();
    if failures as f64 > MAX_FAILURE_RATE * config.replications as f64 {
        return Err(Error::Degenerate(format!(
            "{failures} of {} replicates failed (limit {:.0}%); first: {}",
            config.replications,
            100.0 * MAX_FAILURE_RATE,
            failure_examples.first().map(String::as_str).unwrap_or("")
        )));
    }
    let tests = config
        .tests
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let column: Vec<&TestResult> = ok.iter().map(|rs| &rs[j]).collect();
            summarize(method, &column, df)
        })
        .collect::<Result<_>>()?;
    Ok(SimReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        seed: config.seed,
        df,
        replications: config.replications,
        failures,
        failure_examples,
        tests,
    })
}

/// Runs every configured test on `replications` samples.
pub fn run_study(config: &SimConfig) -> Result<SimReport> {
    study(config, None)
}

/// One study per `δ`, with the configured marginals. The first entry uses
/// the same streams as [`run_study`]; later entries use streams derived
/// from their position so no two points share draws.
pub fn run_power_curve(config: &SimConfig, deltas: &[f64]) -> Result<Vec<SimReport>> {
    deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let mut c = config.clone();
            c.konijn.delta = delta;
            study(&c, (i > 0).then_some(i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config(delta: f64, reps: usize) -> SimConfig {
        SimConfig {
            konijn: KonijnSpec {
                p: 2,
                q: 1,
                f: "t:5".parse().unwrap(),
                g: "gauss".parse().unwrap(),
                m: None,
                delta,
                n: 60,
            },
            tests: Method::NAMED.to_vec(),
            alpha: 0.05,
            replications: reps,
            estimator: Estimator::Tyler,
            seed: 5,
        }
    }

    #[test]
    fn wilson_examples() {
        // 5/100: Wilson interval (0.02154, 0.11175)
        let (lo, hi) = wilson_interval(5, 100);
        assert!(
            (lo - 0.021543).abs() < 1e-5 && (hi - 0.111750).abs() < 1e-5,
            "{lo} {hi}"
        );
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
    }

    #[test]
    fn ks_examples() {
        // one point at the median of U(0,1): D = 1/2
        let d = ks_distance(&[0.5], Ok).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&grid, Ok).unwrap() - 0.005).abs() < 1e-12);
        // asymptotic 1% value 1.6276/√n
        assert!((ks_critical(1_000_000, 0.01) * 1000.0 - 1.62762).abs() < 1e-3);
    }

    #[test]
    fn quantile_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.0), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0), 4.0);
        assert!((empirical_quantile(&v, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn study_is_deterministic() {
        let c = config(1.0, 40);
        let a = run_study(&c).unwrap();
        let b = run_study(&c).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| run_study(&c).unwrap());
        assert_eq!(a, single);
    }

    #[test]
    fn power_curve_first_point_is_the_study() {
        let c = config(0.0, 30);
        let curve = run_power_curve(&c, &[0.0, 2.0]).unwrap();
        assert_eq!(curve[0], run_study(&c).unwrap());
        assert_eq!(curve[1].config.konijn.delta, 2.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = config(0.0, 10);
        c.replications = 0;
        assert!(run_study(&c).is_err());
        let mut c = config(0.0, 10);
        c.alpha = 1.0;
        assert!(run_study(&c).is_err());
        let mut c = config(0.0, 10);
        c.tests = vec![Method::RankScore];
        assert!(run_study(&c).is_err());
        let mut c = config(0.0, 10);
        c.konijn.m = Some(vec![vec![1.0]]);
        assert!(run_study(&c).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = config(0.5, 3);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SimConfig>(&s).unwrap(), c);
        let e = serde_json::from_str::<SimConfig>(r#"{"konijn": {"p": 1, "q": 1, "f": "gauss", "g": "gauss", "delta": 0, "n": 20}, "tests": ["wilks"], "replications": 2}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("alpha"), "{e}");
        let defaulted: SimConfig = serde_json::from_str(r#"{"konijn": {"p": 1, "q": 1, "f": "gauss", "g": "gauss", "delta": 0, "n": 20}, "tests": ["wilks"], "alpha": 0.1, "replications": 2}"#).unwrap();
        assert_eq!(defaulted.seed, DEFAULT_SEED);
        assert_eq!(defaulted.estimator, Estimator::Tyler);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn report_invariants(seed in 0u64..1000, delta in 0.0f64..3.0) {
            let mut c = config(delta, 12);
            c.seed = seed;
            let r = run_study(&c).unwrap();
            prop_assert_eq!(r.tests.len(), 4);
            for t in &r.tests {
                prop_assert!((0.0..=1.0).contains(&t.rejection_rate));
                prop_assert!(t.ci_low <= t.rejection_rate && t.rejection_rate <= t.ci_high);
                prop_assert_eq!(t.denominator, r.replications - r.failures);
                prop_assert!((0.0..=1.0).contains(&t.ks_distance));
            }
        }

        #[test]
        fn wilson_contains_estimate(k in 0usize..200, extra in 0usize..200) {
            let n = k + extra;
            let (lo, hi) = wilson_interval(k, n);
            if n > 0 {
                let p = k as f64 / n as f64;
                prop_assert!(lo <= p && p <= hi);
            }
            prop_assert!(0.0 <= lo && hi <= 1.0);
        }
    }
}
