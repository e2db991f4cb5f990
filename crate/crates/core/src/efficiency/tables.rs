//! ARE grids under Student and Gaussian marginals, and the grid of
//! Hodges–Lehmann lower bounds.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::efficiency::extremal::{bessel_critical, bound_from_critical};
use crate::efficiency::functionals::{are_from_functionals, functionals, AreMethod, Functionals};
use crate::efficiency::BoundResult;
use crate::error::{Error, Result};
use crate::radial::{RadialFamily, RadialModel};

/// Subvector dimensions of the published grids.
pub const TABLE_DIMS: [usize; 6] = [1, 2, 3, 4, 6, 10];

/// Degrees of freedom of the published grids; infinity stands for the
/// Gaussian family.
pub const TABLE_NUS: [f64; 5] = [3.0, 4.0, 6.0, 12.0, f64::INFINITY];

/// Dimension of the first block in the ARE grids.
pub const TABLE_P: usize = 2;

fn family_for(nu: f64) -> RadialFamily {
    if nu.is_infinite() {
        RadialFamily::gaussian()
    } else {
        RadialFamily::student(nu)
    }
}

/// `∞` for the Gaussian, the degrees of freedom otherwise.
pub fn nu_label(nu: f64) -> String {
    if nu.is_infinite() {
        "∞".to_string()
    } else {
        format!("{nu}")
    }
}

/// ARE grid for `p = 2`: `values[i][j][l]` is the entry for
/// `q = dims[i]`, `ν_q = nus[j]`, `ν_p = nus[l]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreTable {
    pub method: AreMethod,
    pub p: usize,
    pub dims: Vec<usize>,
    pub nus: Vec<f64>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl AreTable {
    /// Entry for `(q, ν_q, ν_p)` if it is on the grid.
    pub fn get(&self, q: usize, nu_q: f64, nu_p: f64) -> Option<f64> {
        let i = self.dims.iter().position(|&d| d == q)?;
        let j = self.nus.iter().position(|&v| v == nu_q)?;
        let l = self.nus.iter().position(|&v| v == nu_p)?;
        Some(self.values[i][j][l])
    }

    /// Rows as `(q, ν_q, ν_p, value)` in grid order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        self.dims.iter().enumerate().flat_map(move |(i, &q)| {
            self.nus.iter().enumerate().flat_map(move |(j, &nq)| {
                self.nus
                    .iter()
                    .enumerate()
                    .map(move |(l, &np)| (q, nq, np, self.values[i][j][l]))
            })
        })
    }
}

fn validate_grid(dims: &[usize], nus: &[f64]) -> Result<()> {
    if dims.is_empty() || nus.is_empty() {
        return Err(Error::Domain("table grid must be non-empty".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| d == 0) {
        return Err(Error::Domain(format!(
            "dimension must be positive, got {d}"
        )));
    }
    if let Some(&nu) = nus.iter().find(|&&nu| !(nu > 2.0)) {
        return Err(Error::Domain(format!(
            "degrees of freedom must exceed 2 (or be infinite), got {nu}"
        )));
    }
    Ok(())
}

fn are_table(method: AreMethod, dims: &[usize], nus: &[f64]) -> Result<AreTable> {
    validate_grid(dims, nus)?;
    let kind = method.score_kind();
    let mut ks: Vec<usize> = dims.to_vec();
    ks.push(TABLE_P);
    ks.sort_unstable();
    ks.dedup();
    let jobs: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| (0..nus.len()).map(move |j| (k, j)))
        .collect();
    let computed: Vec<Result<((usize, usize), Functionals)>> = jobs
        .par_iter()
        .map(|&(k, j)| {
            let model = RadialModel::new(k, family_for(nus[j]))?;
            Ok(((k, j), functionals(&model, &kind)?))
        })
        .collect();
    let mut cache = HashMap::with_capacity(computed.len());
    for item in computed {
        let (key, f) = item?;
        cache.insert(key, f);
    }
    let values = dims
        .iter()
        .map(|&q| {
            (0..nus.len())
                .map(|j| {
                    (0..nus.len())
                        .map(|l| {
                            are_from_functionals(method, cache[&(TABLE_P, l)], cache[&(q, j)]).value
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(AreTable {
        method,
        p: TABLE_P,
        dims: dims.to_vec(),
        nus: nus.to_vec(),
        values,
    })
}

/// van der Waerden AREs over the grid.
pub fn table1(dims: &[usize], nus: &[f64]) -> Result<AreTable> {
    are_table(AreMethod::Vdw, dims, nus)
}

/// Wilcoxon AREs over the grid.
pub fn table2(dims: &[usize], nus: &[f64]) -> Result<AreTable> {
    are_table(AreMethod::Wilcoxon, dims, nus)
}

/// Lower bounds for every `p ≤ q` on the grid, in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub dims: Vec<usize>,
    pub entries: Vec<BoundResult>,
}

impl BoundTable {
    /// The bound is symmetric, so `(p, q)` and `(q, p)` both resolve.
    pub fn get(&self, p: usize, q: usize) -> Option<f64> {
        let (a, b) = if p <= q { (p, q) } else { (q, p) };
        self.entries
            .iter()
            .find(|e| e.p == a && e.q == b)
            .map(|e| e.bound)
    }
}

pub fn table3(dims: &[usize]) -> Result<BoundTable> {
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    if dims.is_empty() || dims[0] == 0 {
        return Err(Error::Domain(
            "dimensions must be positive and non-empty".into(),
        ));
    }
    let crit: Vec<f64> = dims
        .par_iter()
        .map(|&k| bessel_critical(k))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for (i, &p) in dims.iter().enumerate() {
        for (j, &q) in dims.iter().enumerate().skip(i) {
            entries.push(bound_from_critical(p, q, crit[i], crit[j]));
        }
    }
    Ok(BoundTable { dims, entries })
}

/// Diagonal bounds `(k, k)` for `k = 1..=max_k`; shows the slow decrease
/// with dimension. Not part of the published grid.
pub fn bound_trend(max_k: usize) -> Result<Vec<BoundResult>> {
    (1..=max_k)
        .into_par_iter()
        .map(|k| {
            let c = bessel_critical(k)?;
            Ok(bound_from_critical(k, k, c, c))
        })
        .collect()
}
