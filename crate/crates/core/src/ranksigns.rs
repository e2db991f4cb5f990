//! Affine standardization of a block of observations: location and shape
//! estimation, standardized spatial signs, radii and their ranks.
//!
//! Observations are stored as the rows of an `n × k` matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default convergence tolerance of the iterative estimators.
pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_ITER: usize = 20_000;
/// Radius, relative to the mean radius, below which the location is tested
/// for coinciding with an observation.
const COINCIDENCE: f64 = 1e-6;

/// `n` observations in `R^k`, `n ≥ k + 2`, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockData {
    data: DMatrix<f64>,
}

impl BlockData {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (n, k) = data.shape();
        if k == 0 {
            return Err(Error::Domain("a block needs at least one column".into()));
        }
        if n < k + 2 {
            return Err(Error::Domain(format!(
                "a {k}-dimensional block needs at least {} observations, got {n}",
                k + 2
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            // column-major storage
            return Err(Error::Domain(format!(
                "non-finite value at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(BlockData { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn k(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }
}

/// Location/shape estimator used before computing signs and ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Sample mean and covariance.
    Moment,
    /// Joint spatial-median/Tyler fixed point (Hettmansperger–Randles).
    #[default]
    Tyler,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Moment => "moment",
            Estimator::Tyler => "tyler",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "moment" => Ok(Estimator::Moment),
            "tyler" => Ok(Estimator::Tyler),
            other => Err(Error::Domain(format!(
                "unknown estimator '{other}' (expected tyler or moment)"
            ))),
        }
    }
}

/// Location and determinant-one shape matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEstimate {
    pub location: DVector<f64>,
    pub shape: DMatrix<f64>,
    pub estimator: Estimator,
}

/// Standardized spatial signs (rows), radii, and 1-based radius ranks.
/// Signs are unit vectors except for an observation at the location.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedBlock {
    pub signs: DMatrix<f64>,
    pub radii: Vec<f64>,
    pub ranks: Vec<usize>,
}

impl StandardizedBlock {
    pub fn n(&self) -> usize {
        self.radii.len()
    }

    pub fn k(&self) -> usize {
        self.signs.ncols()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Rescales an SPD matrix to determinant one.
fn normalize_det(mut m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("scatter matrix is not positive definite".into()))?;
    let log_det: f64 = 2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>();
    if !log_det.is_finite() {
        return Err(Error::Degenerate("scatter matrix is singular".into()));
    }
    m *= (-log_det / k as f64).exp();
    symmetrize(&mut m);
    Ok(m)
}

fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    x.row_mean().transpose()
}

/// Sample mean and sample covariance rescaled to determinant one.
pub fn moment_estimate(data: &BlockData) -> Result<ShapeEstimate> {
    let x = data.data();
    let n = data.n();
    let mean = column_mean(x);
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    symmetrize(&mut cov);
    check_conditioning(&cov)?;
    Ok(ShapeEstimate {
        location: mean,
        shape: normalize_det(cov)?,
        estimator: Estimator::Moment,
    })
}

fn check_conditioning(m: &DMatrix<f64>) -> Result<()> {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min < 1e-12 * max {
        return Err(Error::Degenerate(format!(
            "scatter matrix is (numerically) singular: eigenvalues in [{min:e}, {max:e}]"
        )));
    }
    Ok(())
}

fn median_1d(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Spatial median `argmin_m Σ‖x_i − m‖` by the Vardi–Zhang modification of
/// Weiszfeld's iteration, which stays well defined when an iterate lands on
/// an observation. Stops when successive iterates differ by less than `tol`
/// times the mean distance to the data. For `k = 1` the exact median.
pub fn spatial_median(data: &BlockData, tol: f64) -> Result<DVector<f64>> {
    check_tol(tol)?;
    let x = data.data();
    let (n, k) = x.shape();
    if k == 1 {
        return Ok(DVector::from_element(
            1,
            median_1d(x.column(0).iter().copied()),
        ));
    }
    let mut m = column_mean(x);
    for _ in 0..MAX_ITER {
        let mut weighted = DVector::zeros(k);
        let mut weight_sum = 0.0;
        let mut pull = DVector::zeros(k);
        let mut coincident = 0usize;
        let mut spread = 0.0;
        for i in 0..n {
            let diff = x.row(i).transpose() - &m;
            let d = diff.norm();
            spread += d;
            if d == 0.0 {
                coincident += 1;
                continue;
            }
            weighted += x.row(i).transpose() / d;
            weight_sum += 1.0 / d;
            pull += diff / d;
        }
        spread /= n as f64;
        if weight_sum == 0.0 {
            return Ok(m);
        }
        if coincident == 0 {
            if let Some(at) = median_at_observation(x, &m, spread) {
                return Ok(at);
            }
        }
        let t = weighted / weight_sum;
        let next = if coincident == 0 {
            t
        } else {
            let r = pull.norm();
            if r <= coincident as f64 {
                // the current point satisfies the subgradient condition
                return Ok(m);
            }
            let eta = coincident as f64 / r;
            &t * (1.0 - eta) + &m * eta
        };
        let step = (&next - &m).norm();
        m = next;
        if step < tol * spread.max(f64::MIN_POSITIVE) {
            return Ok(m);
        }
    }
    Err(Error::Convergence {
        what: "spatial median".into(),
        estimate: m.norm(),
        error_bound: tol,
    })
}

/// Weiszfeld converges only linearly onto an observation that is the
/// median; once an iterate is close to `x_j`, test the subgradient condition
/// `‖Σ_{i≠j} (x_i − x_j)/‖x_i − x_j‖‖ ≤ 1` there directly.
fn median_at_observation(x: &DMatrix<f64>, m: &DVector<f64>, spread: f64) -> Option<DVector<f64>> {
    let (j, dist) = (0..x.nrows())
        .map(|i| (i, (x.row(i).transpose() - m).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    if dist > COINCIDENCE * spread {
        return None;
    }
    let at = x.row(j).transpose();
    let mut pull = DVector::zeros(x.ncols());
    for i in 0..x.nrows() {
        let diff = x.row(i).transpose() - &at;
        let d = diff.norm();
        if d > 0.0 {
            pull += diff / d;
        } else if i != j {
            // duplicates of x_j add their own unit of slack
            return None;
        }
    }
    (pull.norm() <= 1.0).then_some(at)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

/// Tyler's shape about a fixed location: the fixed point of
/// `V ← (k/n) Σ d_i d_i′ / (d_i′ V⁻¹ d_i)`, `d_i = x_i − location`,
/// renormalized to determinant one each step. Stops when the Frobenius
/// change is below `tol`. Observations equal to the location carry no
/// direction and are skipped.
pub fn tyler_shape(data: &BlockData, location: &DVector<f64>, tol: f64) -> Result<ShapeEstimate> {
    check_tol(tol)?;
    let x = data.data();
    let (n, k) = x.shape();
    if location.len() != k {
        return Err(Error::Domain(format!(
            "location has dimension {}, data has {k}",
            location.len()
        )));
    }
    if k == 1 {
        return Ok(ShapeEstimate {
            location: location.clone(),
            shape: DMatrix::identity(1, 1),
            estimator: Estimator::Tyler,
        });
    }
    let d: Vec<DVector<f64>> = (0..n)
        .map(|i| x.row(i).transpose() - location)
        .filter(|v| v.norm() > 0.0)
        .collect();
    let mut v = DMatrix::<f64>::identity(k, k);
    for _ in 0..MAX_ITER {
        let chol = v
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("Tyler iterate lost positive definiteness".into()))?;
        let mut acc = DMatrix::zeros(k, k);
        for di in &d {
            let z = chol
                .l_dirty()
                .solve_lower_triangular(di)
                .expect("triangular solve");
            let r2 = z.norm_squared();
            acc += di * di.transpose() / r2;
        }
        acc *= k as f64 / d.len() as f64;
        symmetrize(&mut acc);
        check_conditioning(&acc).map_err(|_| {
            Error::Degenerate("data concentrated on a lower-dimensional subspace".into())
        })?;
        let next = normalize_det(acc)?;
        let change = (&next - &v).norm();
        v = next;
        if change < tol {
            return Ok(ShapeEstimate {
                location: location.clone(),
                shape: v,
                estimator: Estimator::Tyler,
            });
        }
    }
    Err(Error::Convergence {
        what: "Tyler shape".into(),
        estimate: v.norm(),
        error_bound: tol,
    })
}

/// Joint location/shape: the simultaneous fixed point of the spatial median
/// and Tyler's shape in the standardized coordinates, i.e. `Σ u_i = 0` and
/// `(k/n) Σ u_i u_i′ = I` for `u_i` the standardized spatial signs. Unlike a
/// spatial median followed by Tyler's shape, it is affine equivariant.
/// Started from the moment estimate; for `k = 1` it is the median.
pub fn tyler_estimate(data: &BlockData, tol: f64) -> Result<ShapeEstimate> {
    check_tol(tol)?;
    let x = data.data();
    let (n, k) = x.shape();
    if k == 1 {
        return Ok(ShapeEstimate {
            location: spatial_median(data, tol)?,
            shape: DMatrix::identity(1, 1),
            estimator: Estimator::Tyler,
        });
    }
    let start = moment_estimate(data)?;
    let mut mu = start.location;
    let mut v = start.shape;
    for _ in 0..MAX_ITER {
        let chol = v
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("Tyler iterate lost positive definiteness".into()))?;
        let l = chol.l();
        let mut sign_sum = DVector::zeros(k);
        let mut inv_sum = 0.0;
        let mut scatter = DMatrix::zeros(k, k);
        let mut used = 0usize;
        let mut nearest = (f64::INFINITY, 0usize);
        let mut radius_sum = 0.0;
        let mut signs = Vec::with_capacity(n);
        for i in 0..n {
            let d = x.row(i).transpose() - &mu;
            let z = l.solve_lower_triangular(&d).expect("triangular solve");
            let r = z.norm();
            radius_sum += r;
            if r < nearest.0 {
                nearest = (r, i);
            }
            if r == 0.0 {
                signs.push(None);
                continue;
            }
            used += 1;
            let u = &z / r;
            sign_sum += &u;
            inv_sum += 1.0 / r;
            scatter += &u * u.transpose();
            signs.push(Some(u));
        }
        // the location may be drawn onto an observation x_j; that is the
        // solution when the other standardized signs sum to norm <= 1
        let (r_min, j) = nearest;
        if r_min <= COINCIDENCE * radius_sum / n as f64 {
            let others: DVector<f64> = signs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .filter_map(|(_, u)| u.as_ref())
                .sum();
            if others.norm() <= 1.0 {
                let at = x.row(j).transpose();
                let shape = tyler_shape(data, &at, tol)?;
                return Ok(ShapeEstimate {
                    location: at,
                    shape: shape.shape,
                    estimator: Estimator::Tyler,
                });
            }
        }
        if used <= k {
            return Err(Error::Degenerate(
                "too few observations away from the location".into(),
            ));
        }
        let dz = sign_sum / inv_sum;
        scatter *= k as f64 / used as f64;
        symmetrize(&mut scatter);
        check_conditioning(&scatter).map_err(|_| {
            Error::Degenerate("data concentrated on a lower-dimensional subspace".into())
        })?;
        let mut next_v = &l * &scatter * l.transpose();
        symmetrize(&mut next_v);
        let next_v = normalize_det(next_v)?;
        let step = &l * &dz;
        mu += &step;
        // both updates measured in standardized units
        let change =
            dz.norm() + (&scatter * normalize_scale(&scatter) - DMatrix::identity(k, k)).norm();
        v = next_v;
        if change < tol {
            return Ok(ShapeEstimate {
                location: mu,
                shape: v,
                estimator: Estimator::Tyler,
            });
        }
    }
    Err(Error::Convergence {
        what: "joint location/shape".into(),
        estimate: mu.norm(),
        error_bound: tol,
    })
}

/// `det(m)^{−1/k}`.
fn normalize_scale(m: &DMatrix<f64>) -> f64 {
    m.determinant().powf(-1.0 / m.nrows() as f64)
}

/// Estimates location and shape with the chosen estimator.
pub fn estimate(data: &BlockData, estimator: Estimator) -> Result<ShapeEstimate> {
    match estimator {
        Estimator::Moment => moment_estimate(data),
        Estimator::Tyler => tyler_estimate(data, DEFAULT_TOL),
    }
}

/// Symmetric inverse square root of an SPD matrix via its eigendecomposition.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.nrows();
    if k == 0 || m.ncols() != k {
        return Err(Error::Domain(
            "inv_sqrt_spd needs a non-empty square matrix".into(),
        ));
    }
    let scale = m.amax();
    if !(scale.is_finite()) || (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Domain("matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min < -1e-12 * max {
        return Err(Error::Domain(format!(
            "matrix is not positive definite (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    if min < 1e-12 * max {
        return Err(Error::Degenerate(format!(
            "matrix is numerically singular (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let mut out = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// With an even number of univariate observations located at the midpoint
/// of the two middle ones, those two are equidistant from it; rounding would
/// otherwise decide their order, so both get the exact half gap and the
/// index rule of [`ranks`] applies.
fn equalize_middle_pair(x: &DMatrix<f64>, location: f64, w: f64, radii: &mut [f64]) {
    let n = x.nrows();
    if n % 2 == 1 {
        return;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[(a, 0)].total_cmp(&x[(b, 0)]));
    let (lo, hi) = (order[n / 2 - 1], order[n / 2]);
    let (a, b) = (x[(lo, 0)], x[(hi, 0)]);
    if a < b && 0.5 * (a + b) == location {
        let r = w * 0.5 * (b - a);
        radii[lo] = r;
        radii[hi] = r;
    }
}

/// 1-based ranks of `values`, ties broken by ascending index.
pub fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank + 1;
    }
    out
}

/// Signs `z_i/‖z_i‖`, radii `‖z_i‖` and radius ranks for
/// `z_i = shape^{−1/2}(x_i − location)`. A single observation at the
/// location gets sign 0 and rank 1; two or more are an error.
pub fn standardize(data: &BlockData, est: &ShapeEstimate) -> Result<StandardizedBlock> {
    let x = data.data();
    let (n, k) = x.shape();
    if est.location.len() != k || est.shape.shape() != (k, k) {
        return Err(Error::Domain(
            "estimate dimension does not match the data".into(),
        ));
    }
    let w = inv_sqrt_spd(&est.shape)?;
    let mut signs = DMatrix::zeros(n, k);
    let mut radii = Vec::with_capacity(n);
    let mut at_location = None;
    for i in 0..n {
        let z = &w * (x.row(i).transpose() - &est.location);
        let r = z.norm();
        if r == 0.0 {
            // a robust location may sit on one observation; its sign is 0
            if at_location.replace(i).is_some() {
                return Err(Error::CoincidentObservation { index: i });
            }
        } else {
            signs.set_row(i, &(z / r).transpose());
        }
        radii.push(r);
    }
    if k == 1 {
        equalize_middle_pair(x, est.location[0], w[(0, 0)].abs(), &mut radii);
    }
    let ranks = ranks(&radii);
    Ok(StandardizedBlock {
        signs,
        radii,
        ranks,
    })
}
