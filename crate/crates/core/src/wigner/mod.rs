//! Wigner 3j symbols, Clebsch-Gordan coefficients, Legendre power moments
//! `int_{-1}^{1} P_l(t)^q dt`, and the coupling-coefficient asymptotics used
//! by the variance bounds.

mod exact;

use std::f64::consts::PI;
use std::sync::LazyLock;

use crate::error::{Error, Result};
use crate::specfun::legendre_p_unchecked;
use crate::sphere::gauss_legendre_rule;

/// Largest polynomial degree `q*l` accepted by [`legendre_moment`].
pub const MAX_MOMENT_DEGREE: u64 = 60_000;

/// Wigner 3j symbol for integer degrees and orders.
///
/// Selection-rule failures (order sum, bounds, triangle) return exactly 0.
/// The alternating factorial sum is accumulated exactly, so results agree
/// with the zero-m closed form to a few ulp even at degrees of several
/// hundred.
pub fn wigner3j(l1: u32, l2: u32, l3: u32, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    if m1.abs() > i64::from(l1) || m2.abs() > i64::from(l2) || m3.abs() > i64::from(l3) {
        return 0.0;
    }
    let (j1, j2, j3) = (i64::from(l1), i64::from(l2), i64::from(l3));
    if j3 < (j1 - j2).abs() || j3 > j1 + j2 {
        return 0.0;
    }
    exact::wigner3j_racah(l1, l2, l3, m1, m2, m3)
}

/// Zero-m 3j symbol by its closed form; 0 when `l1+l2+l3` is odd or the
/// triangle inequality fails.
pub fn wigner3j_zero(l1: u32, l2: u32, l3: u32) -> f64 {
    exact::wigner3j_zero_closed(l1, l2, l3)
}

/// Clebsch-Gordan coefficient
/// `C^{l3 m3}_{l1 m1 l2 m2} = (-1)^{l1-l2+m3} sqrt(2 l3 + 1) * 3j(l1 l2 l3; m1 m2 -m3)`.
pub fn clebsch_gordan(l1: u32, m1: i64, l2: u32, m2: i64, l3: u32, m3: i64) -> f64 {
    let w = wigner3j(l1, l2, l3, m1, m2, -m3);
    let phase = if (i64::from(l1) - i64::from(l2) + m3).rem_euclid(2) == 1 {
        -1.0
    } else {
        1.0
    };
    phase * f64::from(2 * l3 + 1).sqrt() * w
}

/// `int_{-1}^{1} P_l(t)^q dt` by Gauss-Legendre quadrature with enough nodes
/// to integrate the degree-`q*l` integrand exactly (up to rounding).
pub fn legendre_moment(l: u32, q: u32) -> Result<f64> {
    if q < 1 {
        return Err(Error::Domain("legendre_moment: q must be >= 1".into()));
    }
    let degree = u64::from(q) * u64::from(l);
    if degree > MAX_MOMENT_DEGREE {
        return Err(Error::Resource(format!(
            "legendre_moment: polynomial degree {degree} exceeds {MAX_MOMENT_DEGREE}"
        )));
    }
    // parity shortcut; also avoids summing pure rounding noise
    if q % 2 == 1 && l % 2 == 1 {
        return Ok(0.0);
    }
    let nodes = ((degree + 3) / 2).max(1) as u32;
    let rule = gauss_legendre_rule(nodes)?;
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * legendre_p_unchecked(l, x).powi(q as i32);
    }
    Ok(acc)
}

/// `int_{-1}^{1} P_l^q dt` for `q in {3, 4}` through exact 3j identities:
/// the cube integral over `[0,1]` is `3j(l,l,l;0,0,0)^2` and the fourth power
/// is `sum_L (2L+1) 3j(l,l,L;0,0,0)^4`; parity maps them to `[-1,1]`.
pub fn legendre_moment_exact(l: u32, q: u32) -> Result<f64> {
    match q {
        3 => {
            if l % 2 == 1 {
                // odd integrand on [-1,1]
                Ok(0.0)
            } else {
                Ok(2.0 * wigner3j_zero(l, l, l).powi(2))
            }
        }
        4 => {
            let mut acc = 0.0;
            for big_l in (0..=2 * l).step_by(2) {
                acc += f64::from(2 * big_l + 1) * wigner3j_zero(l, l, big_l).powi(4);
            }
            Ok(2.0 * acc)
        }
        _ => Err(Error::Domain(format!(
            "legendre_moment_exact: q={q} not in {{3, 4}}"
        ))),
    }
}

/// `l^2 * 3j(l,l,l;0,0,0)^2`, which tends to `2/(pi sqrt(3)) ~ 0.367`.
pub fn cgbou_ratio(l: u32) -> f64 {
    f64::from(l).powi(2) * wigner3j_zero(l, l, l).powi(2)
}

/// `3j(l,l,L;0,0,0)^2 * (pi/2) * L * sqrt(2l-L) * sqrt(2l+L)` for even
/// `L in [2, 2l-2]`; always lands in `[1.09^{-6}, 1.09^{5}]`.
pub fn gamma_ll(l: u32, big_l: u32) -> Result<f64> {
    if big_l % 2 != 0 || big_l < 2 || big_l + 2 > 2 * l {
        return Err(Error::Domain(format!(
            "gamma_ll: L={big_l} not an even integer in [2, {}]",
            2 * l - 2
        )));
    }
    let (lf, bf) = (f64::from(l), f64::from(big_l));
    Ok(wigner3j_zero(l, l, big_l).powi(2)
        * (PI / 2.0)
        * bf
        * (2.0 * lf - bf).sqrt()
        * (2.0 * lf + bf).sqrt())
}

const LN_FACTORIAL_TABLE_LEN: usize = 16_384;

static LN_FACTORIAL: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let mut table = vec![0.0f64; LN_FACTORIAL_TABLE_LEN];
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    for (n, slot) in table.iter_mut().enumerate().skip(1) {
        // Neumaier-compensated accumulation of ln n
        let term = (n as f64).ln();
        let t = acc + term;
        comp += if acc.abs() >= term.abs() {
            (acc - t) + term
        } else {
            (term - t) + acc
        };
        acc = t;
        *slot = acc + comp;
    }
    table
});

/// `ln(n!)`, by table below 16384 and a Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACTORIAL_TABLE_LEN {
        return LN_FACTORIAL[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x.ln() * x - x + 0.5 * (2.0 * PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}
