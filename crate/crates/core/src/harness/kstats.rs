//! Unbiased cumulant estimators (k-statistics), jackknife standard errors,
//! and a Kolmogorov-distance normality check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::gauss_cdf;

/// Per-statistic ensemble summary. `variance` needs two samples and `cum4`
/// four; below that they are `None`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub variance: Option<f64>,
    pub cum4: Option<f64>,
    pub se_mean: Option<f64>,
    pub se_variance: Option<f64>,
    pub se_cum4: Option<f64>,
}

fn k2_from_sums(n: f64, s2: f64) -> f64 {
    s2 / (n - 1.0)
}

/// Unbiased fourth cumulant from centered power sums.
fn k4_from_sums(n: f64, s2: f64, s4: f64) -> f64 {
    let m2 = s2 / n;
    let m4 = s4 / n;
    n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2)
        / ((n - 1.0) * (n - 2.0) * (n - 3.0))
}

/// Mean, unbiased variance, unbiased fourth cumulant, and jackknife standard
/// errors for the variance and fourth-cumulant estimators.
pub fn summarize(xs: &[f64]) -> SummaryStats {
    let n = xs.len();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    if n < 2 {
        return SummaryStats {
            n,
            mean,
            variance: None,
            cum4: None,
            se_mean: None,
            se_variance: None,
            se_cum4: None,
        };
    }
    // center first: k-statistics are shift invariant and the centered power
    // sums are far better conditioned
    let d: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let (mut s1, mut s2, mut s3, mut s4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &v in &d {
        let v2 = v * v;
        s1 += v;
        s2 += v2;
        s3 += v2 * v;
        s4 += v2 * v2;
    }
    let variance = k2_from_sums(nf, s2);
    let se_mean = (variance / nf).sqrt();

    let cum4 = if n >= 4 { Some(k4_from_sums(nf, s2, s4)) } else { None };

    // jackknife over leave-one-out estimates, O(n) via power-sum updates
    let mut k2_loo = Vec::with_capacity(n);
    let mut k4_loo = Vec::with_capacity(n);
    let nl = nf - 1.0;
    for &v in &d {
        let r1 = s1 - v;
        let r2 = s2 - v * v;
        let r3 = s3 - v * v * v;
        let r4 = s4 - v * v * v * v;
        // center the leave-one-out sums around their own mean mu = r1/nl
        let mu = r1 / nl;
        let c2 = r2 - nl * mu * mu;
        let c4 = r4 - 4.0 * mu * r3 + 6.0 * mu * mu * r2 - 3.0 * nl * mu.powi(4);
        k2_loo.push(k2_from_sums(nl, c2));
        if n >= 5 {
            k4_loo.push(k4_from_sums(nl, c2, c4));
        }
    }
    let jackknife_se = |loo: &[f64]| -> f64 {
        let m = loo.iter().sum::<f64>() / loo.len() as f64;
        let ss = loo.iter().map(|t| (t - m).powi(2)).sum::<f64>();
        ((loo.len() as f64 - 1.0) / loo.len() as f64 * ss).sqrt()
    };
    SummaryStats {
        n,
        mean,
        variance: Some(variance),
        cum4,
        se_mean: Some(se_mean),
        se_variance: if n >= 3 { Some(jackknife_se(&k2_loo)) } else { None },
        se_cum4: if n >= 5 { Some(jackknife_se(&k4_loo)) } else { None },
    }
}

/// Result of [`clt_check`]: Kolmogorov sup-distance of the studentized
/// sample to the standard Gaussian. `degenerate` marks zero-spread input,
/// which lands near distance 0.5 by construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CltCheck {
    pub distance: f64,
    pub degenerate: bool,
}

/// Studentizes the samples (subtract mean, divide by sample SD) and returns
/// the Kolmogorov distance of their empirical CDF to `Phi`. Requires at
/// least 100 samples.
pub fn clt_check(samples: &[f64]) -> Result<CltCheck> {
    if samples.len() < 100 {
        return Err(Error::TooFewSamples {
            needed: 100,
            got: samples.len(),
        });
    }
    let n = samples.len();
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let degenerate = sd == 0.0 || !sd.is_finite();
    let mut std: Vec<f64> = if degenerate {
        vec![0.0; n]
    } else {
        samples.iter().map(|x| (x - mean) / sd).collect()
    };
    std.sort_by(f64::total_cmp);
    let mut distance = 0.0f64;
    for (i, &x) in std.iter().enumerate() {
        let cdf = gauss_cdf(x);
        distance = distance
            .max(((i + 1) as f64 / nf - cdf).abs())
            .max((cdf - i as f64 / nf).abs());
    }
    Ok(CltCheck { distance, degenerate })
}
