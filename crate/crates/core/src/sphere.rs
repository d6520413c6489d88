//! Spherical grids: Gauss-Legendre colatitude nodes crossed with a uniform
//! longitude grid, plus complex spherical harmonic evaluation `Y_lm`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::legendre_p_with_derivative;

/// Largest band limit [`build_quadrature`] accepts.
pub const MAX_BAND_LIMIT: u32 = 4096;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre rule by Newton refinement of the `P_n` roots; exact for
/// polynomials through degree `2n - 1`. The returned node set is exactly
/// symmetric under `t -> -t`.
pub fn gauss_legendre_rule(n: u32) -> Result<GaussLegendreRule> {
    if n == 0 {
        return Err(Error::Domain("gauss_legendre_rule: n must be >= 1".into()));
    }
    let nn = n as usize;
    let mut nodes = vec![0.0f64; nn];
    let mut weights = vec![0.0f64; nn];
    let half = nn / 2;
    for i in 0..half {
        // standard asymptotic initial guess for the i-th root from +1 side
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre_p_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence(format!(
                "gauss_legendre_rule: Newton stalled at n={n}, root {i}"
            )));
        }
        let (_, deriv) = legendre_p_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[nn - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[nn - 1 - i] = w;
    }
    if nn % 2 == 1 {
        let (_, dp) = legendre_p_with_derivative(n, 0.0);
        nodes[half] = 0.0;
        weights[half] = 2.0 / (dp * dp);
    }
    Ok(GaussLegendreRule { nodes, weights })
}

/// A grid point with its quadrature weight; weights over the full grid sum
/// to `4 pi`.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

/// Product quadrature on the sphere: Gauss-Legendre in `cos(theta)` times a
/// uniform (even-count) longitude grid. Integrates every product
/// `Y_{l1 m1} conj(Y_{l2 m2})` with `l1, l2` up to the band limit exactly.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    band_limit: u32,
    colat_nodes: Vec<f64>,
    colat_weights: Vec<f64>,
    n_lon: usize,
}

impl SphereQuadrature {
    pub fn band_limit(&self) -> u32 {
        self.band_limit
    }

    pub fn n_rings(&self) -> usize {
        self.colat_nodes.len()
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n_rings() * self.n_lon
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Longitude spacing `2 pi / n_lon`.
    pub fn lon_step(&self) -> f64 {
        2.0 * PI / self.n_lon as f64
    }

    /// `cos(theta)` values of the colatitude rings, ascending.
    pub fn colat_nodes(&self) -> &[f64] {
        &self.colat_nodes
    }

    pub fn colat_weights(&self) -> &[f64] {
        &self.colat_weights
    }

    /// Quadrature weight of any point on the given ring.
    pub fn ring_point_weight(&self, ring: usize) -> f64 {
        self.colat_weights[ring] * self.lon_step()
    }

    pub fn point(&self, idx: usize) -> GridPoint {
        let ring = idx / self.n_lon;
        let k = idx % self.n_lon;
        GridPoint {
            theta: self.colat_nodes[ring].clamp(-1.0, 1.0).acos(),
            phi: k as f64 * self.lon_step(),
            weight: self.ring_point_weight(ring),
        }
    }

    /// Grid index of the antipodal point; an exact involution because the
    /// node set is symmetric and `n_lon` is even.
    pub fn antipode_index(&self, idx: usize) -> usize {
        let ring = idx / self.n_lon;
        let k = idx % self.n_lon;
        let ring_a = self.n_rings() - 1 - ring;
        let k_a = (k + self.n_lon / 2) % self.n_lon;
        ring_a * self.n_lon + k_a
    }

    /// Iterate all grid points in ring-major order.
    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Builds the quadrature for a given band limit: `band_limit + 1` colatitude
/// rings and the smallest even longitude count at or above `2*band_limit + 1`.
pub fn build_quadrature(band_limit: u32) -> Result<SphereQuadrature> {
    if band_limit > MAX_BAND_LIMIT {
        return Err(Error::Resource(format!(
            "build_quadrature: band limit {band_limit} exceeds {MAX_BAND_LIMIT}"
        )));
    }
    let rule = gauss_legendre_rule(band_limit + 1)?;
    let n_lon = 2 * (band_limit as usize + 1);
    Ok(SphereQuadrature {
        band_limit,
        colat_nodes: rule.nodes,
        colat_weights: rule.weights,
        n_lon,
    })
}

/// Normalized associated Legendre `Pbar_lm(theta)` for a single `(l, m)`,
/// such that `Y_lm = Pbar_lm e^{i m phi}` is unit-norm on the sphere.
/// All factorial ratios are folded into the recurrence, stable into the
/// thousands of degrees.
pub(crate) fn normalized_assoc_legendre(l: u32, m: u32, cos_t: f64, sin_t: f64) -> f64 {
    debug_assert!(m <= l);
    // diagonal: Pbar_mm
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        let k = f64::from(k);
        pmm *= -((2.0 * k + 1.0) / (2.0 * k)).sqrt() * sin_t;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = (2.0 * f64::from(m) + 3.0).sqrt() * cos_t * pmm;
    if l == m + 1 {
        return cur;
    }
    for k in m + 2..=l {
        let (kf, mf) = (f64::from(k), f64::from(m));
        let a = ((2.0 * kf - 1.0) * (2.0 * kf + 1.0) / ((kf - mf) * (kf + mf))).sqrt();
        let b = ((2.0 * kf + 1.0) * (kf + mf - 1.0) * (kf - mf - 1.0)
            / ((kf - mf) * (kf + mf) * (2.0 * kf - 3.0)))
            .sqrt();
        let next = a * cos_t * cur - b * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[m] = Pbar_lm(theta)` for `m = 0..=l` at a fixed colatitude.
pub(crate) fn normalized_assoc_legendre_row(l: u32, cos_t: f64, sin_t: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), l as usize + 1);
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=l {
        if m > 0 {
            let mf = f64::from(m);
            pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t;
        }
        if l == m {
            out[m as usize] = pmm;
            continue;
        }
        let mut prev = pmm;
        let mut cur = (2.0 * f64::from(m) + 3.0).sqrt() * cos_t * pmm;
        for k in m + 2..=l {
            let (kf, mf) = (f64::from(k), f64::from(m));
            let a = ((2.0 * kf - 1.0) * (2.0 * kf + 1.0) / ((kf - mf) * (kf + mf))).sqrt();
            let b = ((2.0 * kf + 1.0) * (kf + mf - 1.0) * (kf - mf - 1.0)
                / ((kf - mf) * (kf + mf) * (2.0 * kf - 3.0)))
                .sqrt();
            let next = a * cos_t * cur - b * prev;
            prev = cur;
            cur = next;
        }
        out[m as usize] = cur;
    }
}

/// Complex spherical harmonic `Y_lm(theta, phi)`, unit-norm convention with
/// the Condon-Shortley phase; negative orders via
/// `Y_{l,-m} = (-1)^m conj(Y_lm)`.
pub fn eval_ylm(l: u32, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    if m.abs() > i64::from(l) {
        return Err(Error::Domain(format!("eval_ylm: |m|={} > l={l}", m.abs())));
    }
    let ma = m.unsigned_abs() as u32;
    let pbar = normalized_assoc_legendre(l, ma, theta.cos(), theta.sin());
    let value = pbar * Complex64::from_polar(1.0, f64::from(ma) * phi);
    if m >= 0 {
        Ok(value)
    } else if ma % 2 == 0 {
        Ok(value.conj())
    } else {
        Ok(-value.conj())
    }
}
