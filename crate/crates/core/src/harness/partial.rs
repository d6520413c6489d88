//! Partial-sum processes across degrees, the Kolmogorov-Smirnov and
//! Cramer-von-Mises statistics over the `(z, r)` grid, and the covariance of
//! the limiting Gaussian sheet.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::excursion::{empirical_measure, hermite_transform};
use crate::field::{sample_coefficients, synthesize};
use crate::harness::DEFAULT_BAND_LIMIT_FACTOR;
use crate::specfun::gauss_pdf;
use crate::sphere::build_quadrature;

/// One draw of the partial-sum sheet
/// `W(z; k/L) = L^{-1/2} sum_{l<=k} G_l(z)` on `z_levels x {1/L, ..., 1}`,
/// together with the residual sheet built from `S_l` instead of `G_l`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartialSumSample {
    pub big_l: u32,
    pub z_levels: Vec<f64>,
    pub seed: u64,
    /// `values[iz][k-1] = W(z_levels[iz]; k/L)`
    pub values: Vec<Vec<f64>>,
    /// same layout, summing the reduction residuals `S_l(z)`
    pub residual: Vec<Vec<f64>>,
}

impl PartialSumSample {
    /// `W(z_levels[iz]; r)`, zero for `r < 1/L` (empty sum).
    pub fn value_at(&self, iz: usize, r: f64) -> f64 {
        let k = (f64::from(self.big_l) * r).floor() as usize;
        if k == 0 {
            0.0
        } else {
            self.values[iz][k.min(self.big_l as usize) - 1]
        }
    }

    /// `sup |W|` over the stored grid.
    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }

    /// `sup |W_B|` over the stored grid.
    pub fn sup_abs_residual(&self) -> f64 {
        self.residual
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }
}

/// Draws `L` independent eigenfunctions (degrees `1..=L`) and accumulates
/// their empirical processes into one partial-sum sheet. Deterministic in
/// `master_seed`; degrees use independent coefficient streams.
pub fn partial_sum_process(
    master_seed: u64,
    big_l: u32,
    z_levels: &[f64],
) -> Result<PartialSumSample> {
    let nz = z_levels.len();
    let inv_sqrt_l = 1.0 / f64::from(big_l).sqrt();
    let mut values = vec![Vec::with_capacity(big_l as usize); nz];
    let mut residual = vec![Vec::with_capacity(big_l as usize); nz];
    let mut acc_g = vec![0.0f64; nz];
    let mut acc_s = vec![0.0f64; nz];
    for l in 1..=big_l {
        let grid = build_quadrature(DEFAULT_BAND_LIMIT_FACTOR * l)?;
        let grid = std::sync::Arc::new(grid);
        let field = synthesize(&sample_coefficients(l, master_seed), &grid)?;
        let h2 = hermite_transform(&field, 2).value;
        let curve = empirical_measure(&field);
        for (iz, &z) in z_levels.iter().enumerate() {
            acc_g[iz] += curve.process(z);
            acc_s[iz] += curve.reduction_residual(h2, z);
            values[iz].push(acc_g[iz] * inv_sqrt_l);
            residual[iz].push(acc_s[iz] * inv_sqrt_l);
        }
    }
    Ok(PartialSumSample {
        big_l,
        z_levels: z_levels.to_vec(),
        seed: master_seed,
        values,
        residual,
    })
}

/// Independent draws of the partial-sum sheet, scheduled in parallel but
/// merged in draw order; draw `i` uses the sub-seed of `master_seed` and `i`.
pub fn partial_sum_ensemble(
    master_seed: u64,
    big_l: u32,
    z_levels: &[f64],
    n_draws: u32,
    workers: usize,
) -> Result<Vec<PartialSumSample>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::error::Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..n_draws)
            .into_par_iter()
            .map(|i| {
                partial_sum_process(crate::harness::sub_seed(master_seed, u64::from(i)), big_l, z_levels)
            })
            .collect()
    })
}

/// Goodness-of-fit statistics of one sheet: the sup statistic
/// `S_L = max |W|` over the grid and the Cramer-von-Mises statistic
/// `K_L = double integral of |W|^2 dz dr` by the trapezoid rule (with
/// `W(., 0) = 0` closing the r side).
pub fn gof_statistics(sample: &PartialSumSample) -> (f64, f64) {
    let s = sample.sup_abs();
    let dr = 1.0 / f64::from(sample.big_l);
    // inner trapezoid over r for each z
    let r_integral: Vec<f64> = sample
        .values
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            let mut prev = 0.0; // W at r = 0
            for &w in row {
                let cur = w * w;
                acc += 0.5 * dr * (prev + cur);
                prev = cur;
            }
            acc
        })
        .collect();
    // outer trapezoid over the z levels
    let mut k = 0.0;
    for i in 1..sample.z_levels.len() {
        let dz = sample.z_levels[i] - sample.z_levels[i - 1];
        k += 0.5 * dz * (r_integral[i] + r_integral[i - 1]);
    }
    (s, k)
}

/// Covariance of the limiting sheet:
/// `(r1 ^ r2) z1 z2 phi(z1) phi(z2)`.
pub fn winf_covariance(z1: f64, r1: f64, z2: f64, r2: f64) -> f64 {
    r1.min(r2) * z1 * z2 * gauss_pdf(z1) * gauss_pdf(z2)
}
