//! Random eigenfunction coefficients, field synthesis on a quadrature grid,
//! and the covariance oracle `P_l(<x,y>)`.
//!
//! Normalization: the field has pointwise unit variance and two-point
//! covariance `P_l(<x,y>)`, which with unit-norm harmonics pins the
//! coefficient variance at `E|a_lm|^2 = 4 pi / (2l + 1)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::specfun::legendre_p_unchecked;
use crate::sphere::{normalized_assoc_legendre_row, GridPoint, SphereQuadrature};

/// Fixed domain tag mixed into every RNG seed.
const SEED_TAG: u64 = 0x7370_6865_785f_6631;

/// Standard normal deviates from a seeded ChaCha8 stream via the Marsaglia
/// polar method. Uniform deviates take the top 53 bits of each 64-bit word,
/// so the stream is bit-stable for a fixed `(seed, stream)`.
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[0..8].copy_from_slice(&seed.to_le_bytes());
        bytes[8..16].copy_from_slice(&stream.to_le_bytes());
        bytes[16..24].copy_from_slice(&SEED_TAG.to_le_bytes());
        GaussianSource {
            rng: ChaCha8Rng::from_seed(bytes),
            spare: None,
        }
    }

    /// Uniform deviate in `[0, 1)` with 53 random bits.
    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// One standard normal deviate.
    pub fn sample(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.unit() - 1.0;
            let v = 2.0 * self.unit() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let k = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * k);
                return u * k;
            }
        }
    }
}

/// Degree-l coefficient vector with the conjugate symmetry
/// `a_{l,-m} = (-1)^m conj(a_lm)` held exactly.
#[derive(Debug, Clone)]
pub struct HarmonicCoefficients {
    l: u32,
    seed: u64,
    /// index `m + l`, for `m = -l..=l`
    a: Vec<Complex64>,
}

impl HarmonicCoefficients {
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, m: i64) -> Complex64 {
        self.a[(m + i64::from(self.l)) as usize]
    }

    /// Coefficients that put the given value on mode `m` (and its mirror via
    /// the conjugate symmetry); handy for injecting known fields.
    pub fn single_mode(l: u32, m: i64, value: Complex64) -> Result<Self> {
        if m.abs() > i64::from(l) {
            return Err(Error::Domain(format!("single_mode: |m|={} > l={l}", m.abs())));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); 2 * l as usize + 1];
        let center = l as i64;
        if m == 0 {
            a[center as usize] = Complex64::new(value.re, 0.0);
        } else {
            let sign = if m.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            a[(center + m) as usize] = value;
            a[(center - m) as usize] = sign * value.conj();
        }
        Ok(HarmonicCoefficients { l, seed: 0, a })
    }

    /// `sum_m |a_lm|^2`; by Parseval this is the squared L2 norm of the
    /// synthesized field.
    pub fn sum_abs_squared(&self) -> f64 {
        self.a.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Draws the Gaussian coefficients of one eigenfunction; deterministic given
/// `(seed, l)`, with independent streams across `l`.
pub fn sample_coefficients(l: u32, seed: u64) -> HarmonicCoefficients {
    let mut src = GaussianSource::new(seed, u64::from(l));
    let n = 2 * l as usize + 1;
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let center = l as usize;
    a[center] = Complex64::new(src.sample() * (4.0 * PI / f64::from(2 * l + 1)).sqrt(), 0.0);
    let scale = (2.0 * PI / f64::from(2 * l + 1)).sqrt();
    for m in 1..=l as usize {
        let c = Complex64::new(src.sample() * scale, src.sample() * scale);
        a[center + m] = c;
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        a[center - m] = sign * c.conj();
    }
    HarmonicCoefficients { l, seed, a }
}

/// Real field values on a quadrature grid, ring-major.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub(crate) l: u32,
    pub(crate) seed: u64,
    pub(crate) grid: Arc<SphereQuadrature>,
    pub(crate) values: Vec<f64>,
}

impl FieldSample {
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &SphereQuadrature {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterate `(value, weight)` pairs across the grid.
    pub fn weighted_values(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n_lon = self.grid.n_lon();
        self.values.iter().enumerate().map(move |(i, &v)| {
            (v, self.grid.ring_point_weight(i / n_lon))
        })
    }
}

/// Synthesizes `f(x) = sum_m a_lm Y_lm(x)` at every grid point. Works
/// ring-by-ring with the normalized Legendre recurrence and a longitude
/// phase rotation, so the output is real by construction.
pub fn synthesize(
    coeffs: &HarmonicCoefficients,
    grid: &Arc<SphereQuadrature>,
) -> Result<FieldSample> {
    let l = coeffs.l;
    if grid.band_limit() < l {
        return Err(Error::BandLimit {
            required: l,
            actual: grid.band_limit(),
        });
    }
    let n_lon = grid.n_lon();
    let lon_step = grid.lon_step();
    let mut values = vec![0.0f64; grid.len()];
    let mut pbar = vec![0.0f64; l as usize + 1];
    let mut ring_coeff = vec![Complex64::new(0.0, 0.0); l as usize + 1];
    for (ring, &cos_t) in grid.colat_nodes().iter().enumerate() {
        let sin_t = ((1.0 - cos_t) * (1.0 + cos_t)).max(0.0).sqrt();
        normalized_assoc_legendre_row(l, cos_t, sin_t, &mut pbar);
        for m in 0..=l as usize {
            ring_coeff[m] = coeffs.a[l as usize + m] * pbar[m];
        }
        let out = &mut values[ring * n_lon..(ring + 1) * n_lon];
        for (k, slot) in out.iter_mut().enumerate() {
            let rot = Complex64::from_polar(1.0, k as f64 * lon_step);
            let mut phase = rot;
            let mut acc = ring_coeff[0].re;
            for c in &ring_coeff[1..] {
                acc += 2.0 * (c * phase).re;
                phase *= rot;
            }
            *slot = acc;
        }
    }
    Ok(FieldSample {
        l,
        seed: coeffs.seed,
        grid: Arc::clone(grid),
        values,
    })
}

/// Exact two-point covariance `E f(x) f(y) = P_l(cos d(x, y))`.
pub fn covariance_oracle(l: u32, x: &GridPoint, y: &GridPoint) -> f64 {
    let cosd = x.theta.cos() * y.theta.cos()
        + x.theta.sin() * y.theta.sin() * (x.phi - y.phi).cos();
    legendre_p_unchecked(l, cosd.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{build_quadrature, eval_ylm};
    use approx::assert_abs_diff_eq;

    fn grid(band: u32) -> Arc<SphereQuadrature> {
        Arc::new(build_quadrature(band).unwrap())
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn gaussian_source_moments() {
        let mut src = GaussianSource::new(7, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| src.sample()).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!(mean.abs() <= 4.0 * se);
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert_abs_diff_eq!(var, 1.0, epsilon = 0.02);
    }

    #[test]
    fn gaussian_source_deterministic_streams() {
        let a: Vec<f64> = {
            let mut s = GaussianSource::new(42, 3);
            (0..50).map(|_| s.sample()).collect()
        };
        let b: Vec<f64> = {
            let mut s = GaussianSource::new(42, 3);
            (0..50).map(|_| s.sample()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<f64> = {
            let mut s = GaussianSource::new(42, 4);
            (0..50).map(|_| s.sample()).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn coefficient_symmetry_is_exact() {
        let coeffs = sample_coefficients(9, 1234);
        assert_eq!(coeffs.get(0).im, 0.0);
        for m in 1..=9i64 {
            let plus = coeffs.get(m);
            let minus = coeffs.get(-m);
            let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
            assert_eq!(minus.re, sign * plus.re);
            assert_eq!(minus.im, -sign * plus.im);
        }
    }

    #[test]
    fn coefficient_moments() {
        // E a = 0 and E|a|^2 = 4 pi / (2l+1) over many draws
        let l = 3u32;
        let n = 100_000u64;
        let target = 4.0 * PI / f64::from(2 * l + 1);
        let mut res = Vec::with_capacity(n as usize);
        let mut ims = Vec::with_capacity(n as usize);
        let mut mags = Vec::with_capacity(n as usize);
        for rep in 0..n {
            let c = sample_coefficients(l, rep).get(1);
            res.push(c.re);
            ims.push(c.im);
            mags.push(c.norm_sqr());
        }
        let (mean_re, se_re) = mean_and_se(&res);
        let (mean_im, se_im) = mean_and_se(&ims);
        let (mean_mag, se_mag) = mean_and_se(&mags);
        assert!(mean_re.abs() <= 3.0 * se_re);
        assert!(mean_im.abs() <= 3.0 * se_im);
        assert!((mean_mag - target).abs() <= 3.0 * se_mag);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let g = grid(8);
        let a = synthesize(&sample_coefficients(4, 99), &g).unwrap();
        let b = synthesize(&sample_coefficients(4, 99), &g).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn synthesis_band_limit_guard() {
        let g = grid(3);
        assert!(matches!(
            synthesize(&sample_coefficients(4, 1), &g),
            Err(Error::BandLimit { .. })
        ));
    }

    #[test]
    fn single_mode_matches_ylm() {
        let g = grid(10);
        // real mode on m = 0
        let f = synthesize(
            &HarmonicCoefficients::single_mode(5, 0, Complex64::new(1.0, 0.0)).unwrap(),
            &g,
        )
        .unwrap();
        for (i, p) in g.points().enumerate() {
            let y = eval_ylm(5, 0, p.theta, p.phi).unwrap();
            assert_abs_diff_eq!(f.values[i], y.re, epsilon = 1e-10);
        }
        // complex mode on m = 2: f = a Y_52 + conj(a Y_52)
        let a = Complex64::new(0.4, -1.1);
        let f = synthesize(&HarmonicCoefficients::single_mode(5, 2, a).unwrap(), &g).unwrap();
        for (i, p) in g.points().enumerate() {
            let y = eval_ylm(5, 2, p.theta, p.phi).unwrap();
            assert_abs_diff_eq!(f.values[i], 2.0 * (a * y).re, epsilon = 1e-10);
        }
    }

    #[test]
    fn field_mean_over_sphere_vanishes() {
        let g = grid(12);
        for l in [1u32, 5, 12] {
            let f = synthesize(&sample_coefficients(l, 5), &g).unwrap();
            let mean: f64 = f.weighted_values().map(|(v, w)| v * w).sum();
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn field_parity_follows_degree() {
        let g = grid(8);
        for l in [3u32, 4, 7] {
            let f = synthesize(&sample_coefficients(l, 17), &g).unwrap();
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..g.len() {
                let j = g.antipode_index(i);
                assert_abs_diff_eq!(f.values[i], sign * f.values[j], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn pointwise_variance_is_unit() {
        let l = 10u32;
        let g = grid(2 * l);
        let n = 5000u64;
        let mut sq = Vec::with_capacity(n as usize);
        for rep in 0..n {
            let f = synthesize(&sample_coefficients(l, rep), &g).unwrap();
            sq.push(f.values[0] * f.values[0]);
        }
        let (mean, se) = mean_and_se(&sq);
        assert!(
            (mean - 1.0).abs() <= 3.0 * se,
            "Var(f) = {mean} +- {se}"
        );
    }

    #[test]
    fn covariance_oracle_examples() {
        let g = grid(6);
        let x = g.point(5);
        assert_abs_diff_eq!(covariance_oracle(3, &x, &x), 1.0, epsilon = 1e-12);
        let y = g.point(g.antipode_index(5));
        assert_abs_diff_eq!(covariance_oracle(3, &x, &y), -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(covariance_oracle(4, &x, &y), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn empirical_two_point_function_matches_oracle() {
        let l = 6u32;
        let g = grid(2 * l);
        let n = 3000u64;
        let pairs = [(0usize, 7usize), (3, 40), (11, 90), (25, 60), (8, 130)];
        let mut prods: Vec<Vec<f64>> = vec![Vec::with_capacity(n as usize); pairs.len()];
        for rep in 0..n {
            let f = synthesize(&sample_coefficients(l, rep), &g).unwrap();
            for (k, &(i, j)) in pairs.iter().enumerate() {
                prods[k].push(f.values[i] * f.values[j]);
            }
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let oracle = covariance_oracle(l, &g.point(i), &g.point(j));
            let (mean, se) = mean_and_se(&prods[k]);
            assert!(
                (mean - oracle).abs() <= 4.0 * se,
                "pair {k}: {mean} vs {oracle} (se {se})"
            );
        }
    }

    #[test]
    fn isotropy_of_equal_distance_pairs() {
        // pairs on one ring separated by the same number of longitude steps
        // have identical <x,y>; their empirical covariances must agree
        let l = 5u32;
        let g = grid(2 * l);
        let n_lon = g.n_lon();
        let ring = g.n_rings() / 3;
        let base = ring * n_lon;
        let sep = 4usize;
        let pair_a = (base, base + sep);
        let pair_b = (base + 9, base + 9 + sep);
        assert_abs_diff_eq!(
            covariance_oracle(l, &g.point(pair_a.0), &g.point(pair_a.1)),
            covariance_oracle(l, &g.point(pair_b.0), &g.point(pair_b.1)),
            epsilon = 1e-12
        );
        let n = 4000u64;
        let (mut pa, mut pb) = (Vec::new(), Vec::new());
        let (mut va, mut vb) = (Vec::new(), Vec::new());
        for rep in 0..n {
            let f = synthesize(&sample_coefficients(l, rep), &g).unwrap();
            pa.push(f.values[pair_a.0] * f.values[pair_a.1]);
            pb.push(f.values[pair_b.0] * f.values[pair_b.1]);
            va.push(f.values[pair_a.0]);
            vb.push(f.values[pair_b.1]);
        }
        let (ma, sa) = mean_and_se(&pa);
        let (mb, sb) = mean_and_se(&pb);
        assert!((ma - mb).abs() <= 4.0 * (sa * sa + sb * sb).sqrt());
        // one-point law is the same at distinct fixed points
        let (ma1, sa1) = mean_and_se(&va);
        let (mb1, sb1) = mean_and_se(&vb);
        assert!((ma1 - mb1).abs() <= 4.0 * (sa1 * sa1 + sb1 * sb1).sqrt());
        let (qa, qsa) = mean_and_se(&va.iter().map(|x| x * x).collect::<Vec<_>>());
        let (qb, qsb) = mean_and_se(&vb.iter().map(|x| x * x).collect::<Vec<_>>());
        assert!((qa - qb).abs() <= 4.0 * (qsa * qsa + qsb * qsb).sqrt());
    }
}
