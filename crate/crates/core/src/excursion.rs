//! Excursion-set statistics of a field sample: the weighted empirical
//! measure, the Defect, the rescaled empirical process, Hermite transforms,
//! the second-chaos reduction residual with exact sup-norms, the Hermite
//! series variance oracle, and the normalized bispectrum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{FieldSample, HarmonicCoefficients};
use crate::specfun::{gauss_cdf, gauss_pdf, hermite_coeff_j, hermite_h};
use crate::wigner::{legendre_moment, wigner3j};

/// Weighted empirical CDF of the field values: `curve(z)` is the measure of
/// the sublevel set `{f <= z}`, a right-continuous step function from 0 to
/// the total sphere area.
#[derive(Debug, Clone)]
pub struct EmpiricalCurve {
    l: u32,
    knots: Vec<f64>,
    cum_weights: Vec<f64>,
    total: f64,
}

impl EmpiricalCurve {
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Measure of `{f <= z}` in `O(log N)`.
    pub fn measure(&self, z: f64) -> f64 {
        let idx = self.knots.partition_point(|&v| v <= z);
        if idx == 0 {
            0.0
        } else {
            self.cum_weights[idx - 1]
        }
    }

    /// Curve value at the i-th knot (right limit).
    pub fn value_at_knot(&self, i: usize) -> f64 {
        self.cum_weights[i]
    }

    /// Curve value just below the i-th knot.
    pub fn left_limit_at_knot(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.cum_weights[i - 1]
        }
    }

    /// Empirical process `G_l(z) = sqrt(l) (curve(z) - 4 pi Phi(z))`.
    pub fn process(&self, z: f64) -> f64 {
        f64::from(self.l).sqrt() * (self.measure(z) - 4.0 * PI * gauss_cdf(z))
    }

    /// Defect `D_l = 4 pi - 2 curve(0)`.
    pub fn defect(&self) -> f64 {
        4.0 * PI - 2.0 * self.measure(0.0)
    }

    /// Reduction residual
    /// `S_l(z) = G_l(z) - (J_2(z)/2) sqrt(l) h_2` for a given `h_2`.
    pub fn reduction_residual(&self, h2: f64, z: f64) -> f64 {
        self.process(z) - 0.5 * hermite_coeff_j(2, z) * f64::from(self.l).sqrt() * h2
    }

    /// Exact `sup_z |S_l(z)|`: the continuous part is evaluated at every
    /// knot and knot left limit, plus its own stationary points when the
    /// second-chaos term is large enough to create any.
    pub fn sup_reduction_residual(&self, h2: f64) -> f64 {
        let sqrt_l = f64::from(self.l).sqrt();
        let smooth = |z: f64| 4.0 * PI * gauss_cdf(z) + 0.5 * hermite_coeff_j(2, z) * h2;
        let mut sup: f64 = 0.0;
        for (i, &z) in self.knots.iter().enumerate() {
            let c = smooth(z);
            sup = sup
                .max((self.cum_weights[i] - c).abs())
                .max((self.left_limit_at_knot(i) - c).abs());
        }
        // stationary points of the smooth part sit at z*^2 = 1 - 8 pi / h2,
        // real only when h2 < 0 or h2 >= 8 pi
        if h2 != 0.0 {
            let zsq = 1.0 - 8.0 * PI / h2;
            if zsq >= 0.0 {
                for z in [-zsq.sqrt(), zsq.sqrt()] {
                    let idx = self.knots.partition_point(|&v| v <= z);
                    let step = if idx == 0 { 0.0 } else { self.cum_weights[idx - 1] };
                    sup = sup.max((step - smooth(z)).abs());
                }
            }
        }
        sqrt_l * sup
    }
}

/// Sorts the field values with their quadrature weights into an
/// [`EmpiricalCurve`]; `O(N log N)` once, exact sup-norms afterwards.
pub fn empirical_measure(field: &FieldSample) -> EmpiricalCurve {
    let mut pairs: Vec<(f64, f64)> = field.weighted_values().collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots = Vec::with_capacity(pairs.len());
    let mut cum_weights = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for (v, w) in pairs {
        acc += w;
        knots.push(v);
        cum_weights.push(acc);
    }
    EmpiricalCurve {
        l: field.l(),
        knots,
        cum_weights,
        total: acc,
    }
}

/// Defect `D_l = 4 pi - 2 Phi_l(0)`, the signed area imbalance of the level
/// set at zero.
pub fn defect(field: &FieldSample) -> f64 {
    empirical_measure(field).defect()
}

/// One-shot `G_l(z)`; build the curve once instead when many levels are
/// needed.
pub fn empirical_process(field: &FieldSample, z: f64) -> f64 {
    empirical_measure(field).process(z)
}

/// Hermite transform `h_{l;q} = int H_q(f) dx` by grid quadrature.
#[derive(Debug, Clone, Copy)]
pub struct HermiteTransform {
    pub l: u32,
    pub q: u32,
    pub value: f64,
}

pub fn hermite_transform(field: &FieldSample, q: u32) -> HermiteTransform {
    let value = field
        .weighted_values()
        .map(|(v, w)| w * hermite_h(q, v))
        .sum();
    HermiteTransform {
        l: field.l(),
        q,
        value,
    }
}

/// `h_{l;2}` straight from the coefficients: `sum_m |a_lm|^2 - 4 pi`.
/// Agrees with the quadrature route to rounding and needs no synthesis.
pub fn hermite2_from_coefficients(coeffs: &HarmonicCoefficients) -> f64 {
    coeffs.sum_abs_squared() - 4.0 * PI
}

/// One-shot reduction residual `S_l(z)` with `h_2` taken from the same
/// field.
pub fn reduction_residual(field: &FieldSample, z: f64) -> f64 {
    let h2 = hermite_transform(field, 2).value;
    empirical_measure(field).reduction_residual(h2, z)
}

/// Truncated Hermite-series variance
/// `8 pi^2 sum_{q=start}^{q_max} (J_q(z)^2 / q!) int_{-1}^{1} P_l^q dt`
/// with a rigorous bound on the dropped tail.
#[derive(Debug, Clone, Copy)]
pub struct VarianceSeries {
    pub l: u32,
    pub z: f64,
    pub q_max: u32,
    pub value: f64,
    pub tail_bound: f64,
}

/// Evaluates the series oracle; `start_q = 2` gives `Var(Phi_l(z))`,
/// `start_q = 3` gives `Var(S_l(z))`.
pub fn variance_series(l: u32, z: f64, start_q: u32, q_max: u32) -> Result<VarianceSeries> {
    assert!(start_q >= 1 && q_max >= start_q, "need 1 <= start_q <= q_max");
    let phi = gauss_pdf(z);
    // u_q = H_q(z)/sqrt(q!) so that J_q^2/q! = phi^2 u_{q-1}^2 / q
    let mut u_prev = 1.0f64;
    let mut u_cur = z;
    let mut value = 0.0;
    let mut mass = 0.0; // sum of J_q^2/q! over the included range
    let mut mass_below = 0.0; // over q < start
    for q in 1..=q_max {
        let jq_sq_over_fact = if q == 1 {
            phi * phi
        } else {
            phi * phi * u_cur * u_cur / f64::from(q)
        };
        if q >= 2 {
            let qf = f64::from(q);
            let u_next = (z * u_cur - (qf - 1.0).sqrt() * u_prev) / qf.sqrt();
            u_prev = u_cur;
            u_cur = u_next;
        }
        if q >= start_q {
            value += jq_sq_over_fact * legendre_moment(l, q)?;
            mass += jq_sq_over_fact;
        } else {
            mass_below += jq_sq_over_fact;
        }
    }
    value *= 8.0 * PI * PI;
    // indicator variance identity bounds the dropped Hermite mass
    let cdf = gauss_cdf(z);
    let tail_mass = (cdf * (1.0 - cdf) - mass - mass_below).max(0.0);
    let moment_cap = legendre_moment(l, 4)?.max(legendre_moment(l, 3)?);
    let tail_bound = 8.0 * PI * PI * tail_mass * moment_cap;
    Ok(VarianceSeries {
        l,
        z,
        q_max,
        value,
        tail_bound,
    })
}

/// Precomputed 3j couplings for the normalized bispectrum of one degree.
/// Build once, evaluate per replicate in `O(l^2)` products.
#[derive(Debug, Clone)]
pub struct BispectrumTable {
    l: u32,
    /// `(m1 + l, m2 + l, m3 + l, 3j(l,l,l; m1,m2,m3))` over `m1 + m2 + m3 = 0`
    terms: Vec<(usize, usize, usize, f64)>,
}

impl BispectrumTable {
    /// Empty for odd degrees, where the normalized bispectrum is undefined.
    pub fn new(l: u32) -> Self {
        let mut terms = Vec::new();
        if l % 2 == 0 {
            let li = i64::from(l);
            for m1 in -li..=li {
                for m2 in -li..=li {
                    let m3 = -m1 - m2;
                    if m3.abs() > li {
                        continue;
                    }
                    let w = wigner3j(l, l, l, m1, m2, m3);
                    if w != 0.0 {
                        terms.push((
                            (m1 + li) as usize,
                            (m2 + li) as usize,
                            (m3 + li) as usize,
                            w,
                        ));
                    }
                }
            }
        }
        BispectrumTable { l, terms }
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// `I_lll` for a coefficient draw; `None` for odd degrees.
    pub fn evaluate(&self, coeffs: &HarmonicCoefficients) -> Option<f64> {
        assert_eq!(coeffs.l(), self.l, "bispectrum table degree mismatch");
        if self.l % 2 == 1 {
            return None;
        }
        // standardize to unit coefficient variance
        let scale = (f64::from(2 * self.l + 1) / (4.0 * PI)).sqrt();
        let li = i64::from(self.l);
        let a: Vec<Complex64> = (-li..=li).map(|m| coeffs.get(m) * scale).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(i1, i2, i3, w) in &self.terms {
            acc += a[i1] * a[i2] * a[i3] * w;
        }
        debug_assert!(acc.im.abs() <= 1e-9 * (1.0 + acc.re.abs()));
        Some(acc.re)
    }
}

/// Normalized bispectrum `I_lll` of a single draw; `None` when `l` is odd
/// (the coupling to `h_{l;3}` vanishes there). Builds the 3j table each
/// call; use [`BispectrumTable`] for ensembles.
pub fn bispectrum(coeffs: &HarmonicCoefficients) -> Option<f64> {
    BispectrumTable::new(coeffs.l()).evaluate(coeffs)
}
