//! Exact evaluation of Wigner 3j symbols.
//!
//! The alternating Racah sum cancels catastrophically as degrees grow (tens
//! of decimal digits by l ~ 200), so the sum is accumulated exactly: every
//! factorial is carried as a prime-exponent vector, the terms are brought to
//! the common denominator given by elementwise-max exponents, and the
//! resulting integers are summed with `BigInt`. Only the final
//! `sqrt(rational)` is rounded, leaving a few ulp of error.

use num_bigint::{BigInt, BigUint, Sign};

/// Primes up to `limit` inclusive.
fn sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += p;
            }
        }
    }
    primes
}

/// Adds `mult` times the prime factorization of `n!` to `exps`
/// (Legendre's formula).
fn add_factorial(exps: &mut [i64], primes: &[u64], n: u64, mult: i64) {
    for (i, &p) in primes.iter().enumerate() {
        if p > n {
            break;
        }
        let mut e = 0i64;
        let mut pk = p;
        loop {
            e += (n / pk) as i64;
            match pk.checked_mul(p) {
                Some(next) if next <= n => pk = next,
                _ => break,
            }
        }
        exps[i] += mult * e;
    }
}

/// `prod p_i^{exps_i}` for nonnegative exponents.
fn exps_to_biguint(exps: &[i64], primes: &[u64]) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for (i, &e) in exps.iter().enumerate() {
        debug_assert!(e >= 0);
        if e > 0 {
            acc *= BigUint::from(primes[i]).pow(e as u32);
        }
    }
    acc
}

/// Multiply `x` by `2^e` without intermediate overflow.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    const STEP: i64 = 1000;
    while e > STEP {
        x *= (2.0f64).powi(STEP as i32);
        e -= STEP;
    }
    while e < -STEP {
        x *= (2.0f64).powi(-STEP as i32);
        e += STEP;
    }
    x * (2.0f64).powi(e as i32)
}

/// Correctly-rounded-to-a-few-ulp conversion of `num/den` to `f64` for
/// arbitrarily large operands.
fn big_ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.bits() == 0 {
        return 0.0;
    }
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // scale so the integer quotient carries ~60 significant bits
    let shift = 60 - (nb - db);
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let mut qf = 0.0;
    for (i, d) in q.iter_u64_digits().enumerate() {
        qf += ldexp(d as f64, 64 * i as i64);
    }
    ldexp(qf, -shift)
}

/// `sign * sqrt(num/den)` rounded once at the end.
fn signed_sqrt_ratio(negative: bool, num: &BigUint, den: &BigUint) -> f64 {
    let v = big_ratio_to_f64(num, den).sqrt();
    if negative {
        -v
    } else {
        v
    }
}

/// General-m 3j symbol by the alternating Racah factorial sum, exact up to
/// the final rounding. Selection rules must already hold.
pub(crate) fn wigner3j_racah(l1: u32, l2: u32, l3: u32, m1: i64, m2: i64, m3: i64) -> f64 {
    let (j1, j2, j3) = (i64::from(l1), i64::from(l2), i64::from(l3));
    let k_min = [0, j2 - j3 - m1, j1 - j3 + m2].into_iter().max().unwrap();
    let k_max = [j1 + j2 - j3, j1 - m1, j2 + m2].into_iter().min().unwrap();
    if k_max < k_min {
        return 0.0;
    }

    let primes = sieve((j1 + j2 + j3 + 1) as u64);
    let np = primes.len();

    // denominators of the sum terms as exponent vectors
    let mut term_exps = Vec::with_capacity((k_max - k_min + 1) as usize);
    for k in k_min..=k_max {
        let mut e = vec![0i64; np];
        for arg in [
            k,
            j1 + j2 - j3 - k,
            j1 - m1 - k,
            j2 + m2 - k,
            j3 - j2 + m1 + k,
            j3 - j1 - m2 + k,
        ] {
            add_factorial(&mut e, &primes, arg as u64, 1);
        }
        term_exps.push(e);
    }
    // common denominator D: elementwise max
    let mut common = vec![0i64; np];
    for e in &term_exps {
        for i in 0..np {
            common[i] = common[i].max(e[i]);
        }
    }
    // S = sum_k (-1)^k D/D_k, exactly
    let mut sum = BigInt::from(0);
    for (idx, e) in term_exps.iter().enumerate() {
        let k = k_min + idx as i64;
        let diff: Vec<i64> = common.iter().zip(e).map(|(c, t)| c - t).collect();
        let numer = exps_to_biguint(&diff, &primes);
        let term = BigInt::from_biguint(if k % 2 == 0 { Sign::Plus } else { Sign::Minus }, numer);
        sum += term;
    }
    if sum.sign() == Sign::NoSign {
        return 0.0;
    }

    // value^2 = Delta * prod (j_i +- m_i)! * S^2 / D^2
    let mut num_exps = vec![0i64; np];
    let mut den_exps = vec![0i64; np];
    for arg in [
        j1 + j2 - j3,
        j1 - j2 + j3,
        -j1 + j2 + j3,
        j1 + m1,
        j1 - m1,
        j2 + m2,
        j2 - m2,
        j3 + m3,
        j3 - m3,
    ] {
        add_factorial(&mut num_exps, &primes, arg as u64, 1);
    }
    add_factorial(&mut den_exps, &primes, (j1 + j2 + j3 + 1) as u64, 1);
    for i in 0..np {
        den_exps[i] += 2 * common[i];
        // move shared factors to one side so both exponent vectors stay nonnegative
        let shared = num_exps[i].min(den_exps[i]);
        num_exps[i] -= shared;
        den_exps[i] -= shared;
    }

    let (sum_sign, sum_mag) = sum.into_parts();
    let num = exps_to_biguint(&num_exps, &primes) * &sum_mag * &sum_mag;
    let den = exps_to_biguint(&den_exps, &primes);

    let negative = ((j1 - j2 - m3).rem_euclid(2) == 1) != (sum_sign == Sign::Minus);
    signed_sqrt_ratio(negative, &num, &den)
}

/// Zero-m 3j symbol by the closed form
/// `(-1)^g g!/((g-l1)!(g-l2)!(g-l3)!) * sqrt((2g-2l1)!(2g-2l2)!(2g-2l3)!/(2g+1)!)`
/// with `2g = l1+l2+l3`, evaluated exactly. Returns 0 for odd `l1+l2+l3` or a
/// broken triangle.
pub(crate) fn wigner3j_zero_closed(l1: u32, l2: u32, l3: u32) -> f64 {
    let (j1, j2, j3) = (i64::from(l1), i64::from(l2), i64::from(l3));
    let total = j1 + j2 + j3;
    if total % 2 != 0 {
        return 0.0;
    }
    if j3 < (j1 - j2).abs() || j3 > j1 + j2 {
        return 0.0;
    }
    let g = total / 2;

    let primes = sieve((total + 1) as u64);
    let np = primes.len();
    let mut num_exps = vec![0i64; np];
    let mut den_exps = vec![0i64; np];
    // value^2 = (g!)^2 (2g-2l1)!(2g-2l2)!(2g-2l3)! / [((g-l1)!(g-l2)!(g-l3)!)^2 (2g+1)!]
    add_factorial(&mut num_exps, &primes, g as u64, 2);
    add_factorial(&mut den_exps, &primes, (total + 1) as u64, 1);
    for j in [j1, j2, j3] {
        add_factorial(&mut num_exps, &primes, (total - 2 * j) as u64, 1);
        add_factorial(&mut den_exps, &primes, (g - j) as u64, 2);
    }
    for i in 0..np {
        let shared = num_exps[i].min(den_exps[i]);
        num_exps[i] -= shared;
        den_exps[i] -= shared;
    }
    let num = exps_to_biguint(&num_exps, &primes);
    let den = exps_to_biguint(&den_exps, &primes);
    signed_sqrt_ratio(g % 2 == 1, &num, &den)
}
