//! Scalar special functions: Legendre and associated Legendre polynomials,
//! probabilists' Hermite polynomials, the standard Gaussian pdf/cdf, the
//! Hermite projection coefficients `J_q` of level indicators, and the
//! chaining majorant `lambda_majorant`.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Slack allowed on the `[-1, 1]` argument range before a domain error is
/// raised; arguments inside the slack are clamped.
const T_DOMAIN_TOL: f64 = 1e-12;

fn check_t_domain(t: f64, what: &str) -> Result<f64> {
    if t.is_nan() || t.abs() > 1.0 + T_DOMAIN_TOL {
        return Err(Error::Domain(format!("{what}: argument {t} outside [-1, 1]")));
    }
    Ok(t.clamp(-1.0, 1.0))
}

/// Legendre polynomial `P_l(t)` by the three-term recurrence
/// `(k+1) P_{k+1} = (2k+1) t P_k - k P_{k-1}`.
pub fn legendre_p(l: u32, t: f64) -> Result<f64> {
    let t = check_t_domain(t, "legendre_p")?;
    Ok(legendre_p_unchecked(l, t))
}

/// `P_l(t)` without the domain check; `t` must already lie in `[-1, 1]`.
pub(crate) fn legendre_p_unchecked(l: u32, t: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => t,
        _ => {
            let mut prev = 1.0;
            let mut cur = t;
            for k in 1..l {
                let k = f64::from(k);
                let next = ((2.0 * k + 1.0) * t * cur - k * prev) / (k + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `P_l(t)` together with its derivative `P_l'(t)`, used by the quadrature
/// root solver.
pub(crate) fn legendre_p_with_derivative(l: u32, t: f64) -> (f64, f64) {
    if l == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = t;
    for k in 1..l {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0) * t * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    // P_l'(t) = l (t P_l - P_{l-1}) / (t^2 - 1), finite for |t| < 1
    let deriv = f64::from(l) * (t * cur - prev) / (t * t - 1.0);
    (cur, deriv)
}

/// Associated Legendre polynomial `P_{lm}(t)` with the Condon-Shortley phase
/// and the Rodrigues normalization `1/(2^l l!)`, so that `P_{l0} = P_l`.
///
/// Magnitudes grow like `(2m-1)!!`; for band limits where overflow matters
/// use the normalized evaluation in the sphere module instead.
pub fn assoc_legendre(l: u32, m: u32, t: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain(format!("assoc_legendre: m={m} > l={l}")));
    }
    let t = check_t_domain(t, "assoc_legendre")?;
    // P_mm = (-1)^m (2m-1)!! (1-t^2)^{m/2}
    let s = ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -(2.0 * f64::from(k) - 1.0) * s;
    }
    if l == m {
        return Ok(pmm);
    }
    // P_{m+1,m} = t (2m+1) P_mm
    let mut prev = pmm;
    let mut cur = t * (2.0 * f64::from(m) + 1.0) * pmm;
    for k in m + 2..=l {
        let (kf, mf) = (f64::from(k), f64::from(m));
        let next = ((2.0 * kf - 1.0) * t * cur - (kf + mf - 1.0) * prev) / (kf - mf);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Probabilists' Hermite polynomial `H_q(x)`, via `H_{q+1} = x H_q - q H_{q-1}`.
pub fn hermite_h(q: u32, x: f64) -> f64 {
    match q {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for k in 1..q {
                let next = x * cur - f64::from(k) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Standard Gaussian density `phi(z)`.
pub fn gauss_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard Gaussian cumulative distribution `Phi(z) = erfc(-z/sqrt(2))/2`,
/// accurate to well under 1e-12 absolute; tails clamp to `[0, 1]`.
pub fn gauss_cdf(z: f64) -> f64 {
    (0.5 * erfc(-z / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

// Rational approximations for erf/erfc due to W. J. Cody, max relative error
// a few ulp in each region.
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const ONE_OVER_SQRT_PI: f64 = 5.6418958354775628695e-1;
const ERF_THRESHOLD: f64 = 0.46875;

/// Error function.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= ERF_THRESHOLD {
        let z = if y > 1.18e-16 { y * y } else { 0.0 };
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        x * (num + ERF_A[3]) / (den + ERF_B[3])
    } else {
        (1.0 - erfc(y)) * x.signum()
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= ERF_THRESHOLD {
        return 1.0 - erf(x);
    }
    let raw = if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        (num + ERF_C[7]) / (den + ERF_D[7])
    } else {
        let z = 1.0 / (y * y);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        let r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (ONE_OVER_SQRT_PI - r) / y
    };
    // exp(-y^2) with the argument split to keep the tail accurate
    let ysq = (y * 16.0).floor() / 16.0;
    let del = (y - ysq) * (y + ysq);
    let result = (-ysq * ysq).exp() * (-del).exp() * raw;
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// Hermite projection coefficient of the level indicator:
/// `J_0(z) = Phi(z)` and `J_q(z) = -H_{q-1}(z) phi(z)` for `q >= 1`,
/// equivalently `J_q(z) = int_{-inf}^{z} H_q(u) phi(u) du`.
pub fn hermite_coeff_j(q: u32, z: f64) -> f64 {
    if q == 0 {
        gauss_cdf(z)
    } else {
        -hermite_h(q - 1, z) * gauss_pdf(z)
    }
}

/// Value of the chaining majorant at `+infinity`,
/// `1 + 4 e^{-1/2} / (2 sqrt(2 pi)) = 1.4839414...`.
pub fn lambda_infinity() -> f64 {
    1.0 + 2.0 * (-0.5f64).exp() / (2.0 * PI).sqrt()
}

/// Chaining majorant `Lambda(z) = Phi(z) + (1/2) int_{-inf}^{z} |x^2-1| phi(x) dx`
/// in closed form. Accepts `+-infinity`.
///
/// The middle-branch constant `2 e^{-1/2}` is forced by continuity at
/// `z = +-1` and by the integral itself.
pub fn lambda_majorant(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::INFINITY {
        return lambda_infinity();
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    let c = 0.5 / (2.0 * PI).sqrt();
    let e = (-0.5 * z * z).exp();
    let em = (-0.5f64).exp();
    let piece = if z <= -1.0 {
        -z * e
    } else if z <= 1.0 {
        z * e + 2.0 * em
    } else {
        -z * e + 4.0 * em
    };
    gauss_cdf(z) + c * piece
}
