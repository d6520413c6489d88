//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers once its assertions hold. Run with
//! `cargo test -p sphex --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use sphex::excursion::{
    empirical_measure, hermite2_from_coefficients, variance_series, BispectrumTable,
};
use sphex::field::{covariance_oracle, sample_coefficients, synthesize};
use sphex::harness::{
    clt_check, partial_sum_ensemble, run_ensemble, sub_seed, summarize, EnsembleConfig, StatKind,
};
use sphex::specfun::{gauss_pdf, lambda_infinity, lambda_majorant};
use sphex::sphere::{build_quadrature, eval_ylm};
use sphex::wigner::{
    cgbou_ratio, gamma_ll, legendre_moment, legendre_moment_exact, wigner3j, wigner3j_zero,
};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn se_of_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    cov / (vx * vy).sqrt()
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

#[test]
fn c01_orthonormality_on_quadrature_grid() {
    let band = 20u32;
    let grid = build_quadrature(2 * band).unwrap();
    let points: Vec<_> = grid.points().collect();
    // precompute Y_lm at every grid point, one row per (l, m)
    let mut harmonics: Vec<(u32, Vec<Complex64>)> = Vec::new();
    for l in 0..=band {
        for m in -(i64::from(l))..=i64::from(l) {
            let row: Vec<Complex64> = points
                .iter()
                .map(|p| eval_ylm(l, m, p.theta, p.phi).unwrap())
                .collect();
            harmonics.push((l, row));
        }
    }
    let weighted: Vec<Vec<Complex64>> = harmonics
        .iter()
        .map(|(_, row)| {
            row.iter()
                .zip(&points)
                .map(|(y, p)| y * p.weight)
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for (i, wrow) in weighted.iter().enumerate() {
        for (j, (_, hrow)) in harmonics.iter().enumerate().skip(i) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in wrow.iter().zip(hrow) {
                acc += a * b.conj();
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc.re - expect).abs()).max(acc.im.abs());
        }
    }
    assert!(worst <= 1e-10, "worst orthonormality defect {worst}");
    println!("criterion 01 PASS: max orthonormality defect {worst:.3e} <= 1e-10 (l <= {band})");
}

#[test]
fn c02_wigner_cross_oracle_and_moment_identities() {
    let mut worst_rel: f64 = 0.0;
    for l in 1..=200u32 {
        for (a, b, c) in [
            (l, l, l),
            (l, l, 2),
            (l, l, 2 * l),
            (l + 1, l, 1),
            (l, l, 0),
        ] {
            let general = wigner3j(a, b, c, 0, 0, 0);
            let closed = wigner3j_zero(a, b, c);
            if closed == 0.0 {
                assert_eq!(general, 0.0, "({a},{b},{c})");
            } else {
                let rel = ((general - closed) / closed).abs();
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    assert!(worst_rel <= 1e-12, "worst 3j relative error {worst_rel}");

    let mut worst_mom: f64 = 0.0;
    for l in (2..=60u32).step_by(2) {
        for q in [3u32, 4] {
            let exact = legendre_moment_exact(l, q).unwrap();
            let quad = legendre_moment(l, q).unwrap();
            worst_mom = worst_mom.max(((exact - quad) / quad).abs());
        }
    }
    assert!(worst_mom <= 1e-10, "worst moment relative error {worst_mom}");
    println!(
        "criterion 02 PASS: 3j cross-oracle rel err {worst_rel:.3e} <= 1e-12 (l <= 200), \
         moment identities rel err {worst_mom:.3e} <= 1e-10 (even l <= 60)"
    );
}

#[test]
fn c03_coupling_asymptotics() {
    let part1 = cgbou_ratio(200) * PI * 3.0f64.sqrt() / 2.0;
    assert!((part1 - 1.0).abs() <= 0.02, "part 1 ratio {part1}");

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for l in [10u32, 50, 200] {
        for big_l in (2..=2 * l - 2).step_by(2) {
            let g = gamma_ll(l, big_l).unwrap();
            lo = lo.min(g);
            hi = hi.max(g);
        }
    }
    assert!(
        lo >= 0.596 && hi <= 1.539,
        "gamma_lL range [{lo}, {hi}] outside [0.596, 1.539]"
    );

    let l = 100u32;
    let part3 = wigner3j_zero(l, l, 2 * l).powi(2) * PI.sqrt() * f64::from(4 * l + 1)
        * f64::from(l).sqrt()
        / 2.0f64.sqrt();
    assert!((part3 - 1.0).abs() <= 0.05, "part 3 ratio {part3}");
    println!(
        "criterion 03 PASS: l^2 3j^2 * pi sqrt(3)/2 = {part1:.4} (within 2%), \
         gamma_lL in [{lo:.3}, {hi:.3}], edge ratio {part3:.4} (within 5%)"
    );
}

#[test]
fn c04_legendre_moment_scaling() {
    let (c_low, c_high) = (0.1f64, 30.0f64);
    let mut seen_low = f64::INFINITY;
    let mut seen_high = f64::NEG_INFINITY;
    for l in [16u32, 32, 64, 128, 256] {
        let logl = f64::from(l).ln();
        let scaled4 = f64::from(l).powi(2) * legendre_moment(l, 4).unwrap() / logl;
        assert!(
            scaled4 >= c_low && scaled4 <= c_high,
            "l={l}: l^2 m4 / log l = {scaled4}"
        );
        seen_low = seen_low.min(scaled4);
        seen_high = seen_high.max(scaled4);
        for q in [3u32, 5, 6] {
            let scaled = f64::from(l).powi(2) * legendre_moment(l, q).unwrap();
            assert!(
                (0.0..=c_high).contains(&scaled),
                "l={l} q={q}: l^2 moment = {scaled}"
            );
        }
    }
    println!(
        "criterion 04 PASS: l^2 m4/log l in [{seen_low:.3}, {seen_high:.3}] c [{c_low}, {c_high}]; \
         q in {{3,5,6}} bounded"
    );
}

#[test]
fn c05_covariance_and_unit_variance() {
    let l = 10u32;
    let n = 5000u64;
    let grid = Arc::new(build_quadrature(2 * l).unwrap());
    let npts = grid.len();
    // deterministic "random" pairs
    let pairs: Vec<(usize, usize)> = (0..20u64)
        .map(|k| {
            (
                (sub_seed(0xC0FFEE, 2 * k) % npts as u64) as usize,
                (sub_seed(0xC0FFEE, 2 * k + 1) % npts as u64) as usize,
            )
        })
        .collect();
    let mut prods: Vec<Vec<f64>> = vec![Vec::with_capacity(n as usize); pairs.len()];
    let mut sq0 = Vec::with_capacity(n as usize);
    for rep in 0..n {
        let f = synthesize(&sample_coefficients(l, sub_seed(11, rep)), &grid).unwrap();
        sq0.push(f.values()[0] * f.values()[0]);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            prods[k].push(f.values()[i] * f.values()[j]);
        }
    }
    let mut worst_sigma: f64 = 0.0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let oracle = covariance_oracle(l, &grid.point(i), &grid.point(j));
        let dev = (mean(&prods[k]) - oracle).abs() / se_of_mean(&prods[k]);
        worst_sigma = worst_sigma.max(dev);
        assert!(dev <= 4.0, "pair ({i},{j}): {dev:.2} SE from oracle");
    }
    let var_dev = (mean(&sq0) - 1.0).abs() / se_of_mean(&sq0);
    assert!(var_dev <= 3.0, "Var(f) off by {var_dev:.2} SE");
    println!(
        "criterion 05 PASS: 20 covariance pairs within 4 SE (worst {worst_sigma:.2}), \
         Var(f(x0)) within 3 SE ({var_dev:.2})"
    );
}

#[test]
fn c06_second_chaos_law() {
    // variance at l = 16
    let l = 16u32;
    let mut cfg = EnsembleConfig::new(616, vec![l], 4000);
    cfg.statistics = vec![StatKind::Hermite2Coeff];
    let report = run_ensemble(&cfg).unwrap();
    let var = report.summaries[0].stats.variance.unwrap();
    let target = 32.0 * PI * PI / f64::from(2 * l + 1);
    let var_ratio = var / target;
    assert!(
        (0.9..=1.1).contains(&var_ratio),
        "Var(h2) ratio {var_ratio}"
    );

    // fourth cumulant at l = 4, coefficient-only fast path
    let l4 = 4u32;
    let h2s: Vec<f64> = (0..200_000u64)
        .map(|rep| hermite2_from_coefficients(&sample_coefficients(l4, sub_seed(44, rep))))
        .collect();
    let k4 = summarize(&h2s).cum4.unwrap();
    let k4_target = 48.0 * (4.0 * PI).powi(4) / f64::from(2 * l4 + 1).powi(3);
    let k4_ratio = k4 / k4_target;
    assert!(
        (0.75..=1.25).contains(&k4_ratio),
        "cum4 ratio {k4_ratio}"
    );

    // normality of sqrt(l) h2 at l = 100
    let l100 = 100u32;
    let samples: Vec<f64> = (0..2000u64)
        .map(|rep| {
            f64::from(l100).sqrt()
                * hermite2_from_coefficients(&sample_coefficients(l100, sub_seed(100, rep)))
        })
        .collect();
    let ks = clt_check(&samples).unwrap();
    assert!(!ks.degenerate && ks.distance < 0.05, "KS {}", ks.distance);
    println!(
        "criterion 06 PASS: Var ratio {var_ratio:.3} (10%), cum4 ratio {k4_ratio:.3} (25%), \
         KS distance {:.4} < 0.05",
        ks.distance
    );
}

#[test]
fn c07_bispectrum_moments() {
    let l = 8u32;
    let table = BispectrumTable::new(l);
    let is: Vec<f64> = (0..50_000u64)
        .map(|rep| {
            table
                .evaluate(&sample_coefficients(l, sub_seed(7, rep)))
                .unwrap()
        })
        .collect();
    let m = mean(&is);
    let se = se_of_mean(&is);
    assert!(m.abs() <= 3.0 * se, "E I = {m} +- {se}");
    let second = is.iter().map(|x| x * x).sum::<f64>() / is.len() as f64;
    let ratio = second / 6.0;
    assert!((0.9..=1.1).contains(&ratio), "E I^2 / 6 = {ratio}");
    println!(
        "criterion 07 PASS: E I = {m:.4} ({:.2} SE), E I^2 = {second:.3} (ratio {ratio:.3})",
        m.abs() / se
    );
}

#[test]
fn c08_variance_oracle() {
    // Monte Carlo at l = 32 vs the series
    let l = 32u32;
    let z = 1.0f64;
    let grid = Arc::new(build_quadrature(2 * l).unwrap());
    let phis: Vec<f64> = (0..3000u64)
        .map(|rep| {
            let f = synthesize(&sample_coefficients(l, sub_seed(88, rep)), &grid).unwrap();
            empirical_measure(&f).measure(z)
        })
        .collect();
    let mc = variance(&phis);
    let series = variance_series(l, z, 2, 60).unwrap();
    let ratio = mc / series.value;
    assert!((0.9..=1.1).contains(&ratio), "MC/series = {ratio}");

    // 1/l rate with the explicit constant at l = 128
    let l2 = 128u32;
    let s = variance_series(l2, z, 2, 60).unwrap();
    let trend = f64::from(l2) * s.value / (4.0 * PI * PI * gauss_pdf(1.0).powi(2));
    assert!((trend - 1.0).abs() <= 0.1, "trend {trend}");
    println!(
        "criterion 08 PASS: MC/series = {ratio:.3} at l=32 (10%), \
         l*series/(4 pi^2 phi(1)^2) = {trend:.3} at l=128 (10%)"
    );
}

#[test]
fn c09_reduction_principle_trend() {
    let degrees = [8u32, 16, 32, 64];
    let mut cfg = EnsembleConfig::new(909, degrees.to_vec(), 200);
    cfg.statistics = vec![StatKind::ReductionSup];
    let report = run_ensemble(&cfg).unwrap();
    let mut medians = Vec::new();
    for &l in &degrees {
        let mut sups: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.l == l)
            .map(|r| r.values[0])
            .collect();
        assert_eq!(sups.len(), 200);
        medians.push(median(&mut sups));
    }
    for w in medians.windows(2) {
        assert!(w[1] < w[0], "medians not decreasing: {medians:?}");
    }
    let ratio = medians[3] / medians[0];
    assert!(ratio <= 0.7, "median(64)/median(8) = {ratio}");
    println!(
        "criterion 09 PASS: sup|S_l| medians {medians:?} strictly decreasing, \
         ratio {ratio:.3} <= 0.7"
    );
}

#[test]
fn c10_degenerate_limit() {
    let l = 64u32;
    let mut cfg = EnsembleConfig::new(1010, vec![l], 500);
    cfg.z_levels = vec![-1.0, 0.0, 1.0, 2.0];
    cfg.statistics = vec![StatKind::ProcessAtLevels];
    let report = run_ensemble(&cfg).unwrap();
    let col = |z: f64| -> Vec<f64> {
        let idx = cfg.z_levels.iter().position(|&v| v == z).unwrap();
        report.rows.iter().map(|r| r.values[idx]).collect()
    };
    let (gm1, g0, g1, g2) = (col(-1.0), col(0.0), col(1.0), col(2.0));
    let corr_12 = pearson(&g1, &g2);
    let corr_m11 = pearson(&gm1, &g1);
    assert!(corr_12 > 0.9, "corr(G(1), G(2)) = {corr_12}");
    assert!(corr_m11 < -0.9, "corr(G(-1), G(1)) = {corr_m11}");
    let var_ratio = variance(&g0) / variance(&g1);
    assert!(var_ratio < 0.2, "Var(G(0))/Var(G(1)) = {var_ratio}");
    println!(
        "criterion 10 PASS: corr(G(1),G(2)) = {corr_12:.3} > 0.9, \
         corr(G(-1),G(1)) = {corr_m11:.3} < -0.9, Var(G(0))/Var(G(1)) = {var_ratio:.3} < 0.2"
    );
}

#[test]
fn c11_partial_sum_structure() {
    let z_levels = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let iz1 = 3usize; // z = 1
    let big_l = 32u32;
    let draws = partial_sum_ensemble(1111, big_l, &z_levels, 500, 0).unwrap();
    let w_at = |r: f64| -> Vec<f64> {
        draws.iter().map(|d| d.value_at(iz1, r)).collect()
    };
    let w_full = w_at(1.0);
    let denom = w_full.iter().map(|x| x * x).sum::<f64>() / w_full.len() as f64;
    let mut worst: f64 = 0.0;
    for (r1, r2) in [(0.25, 0.5), (0.5, 1.0), (0.25, 1.0)] {
        let (a, b) = (w_at(r1), w_at(r2));
        let cross = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
        let dev = (cross / denom - r1.min(r2)).abs();
        worst = worst.max(dev);
        assert!(dev <= 0.15, "covariance ratio at ({r1},{r2}) off by {dev}");
    }

    // residual sheet shrinks with L
    let draws8 = partial_sum_ensemble(1112, 8, &z_levels, 200, 0).unwrap();
    let mut sup8: Vec<f64> = draws8.iter().map(|d| d.sup_abs_residual()).collect();
    let mut sup32: Vec<f64> = draws
        .iter()
        .take(200)
        .map(|d| d.sup_abs_residual())
        .collect();
    let (m8, m32) = (median(&mut sup8), median(&mut sup32));
    assert!(m32 < m8, "sup|W_B| medians: L=8 {m8}, L=32 {m32}");
    println!(
        "criterion 11 PASS: covariance ratios within 0.15 of r1^r2 (worst {worst:.3}), \
         sup|W_B| median {m8:.3} (L=8) -> {m32:.3} (L=32)"
    );
}

#[test]
fn c12_closed_constants() {
    let lam_inf = lambda_majorant(f64::INFINITY);
    assert!((lam_inf - 1.483943).abs() <= 1e-5, "Lambda(inf) = {lam_inf}");
    let half_integral = lambda_infinity() - 1.0;
    assert!(
        (half_integral - 0.48394).abs() <= 1e-5,
        "half integral = {half_integral}"
    );
    println!(
        "criterion 12 PASS: Lambda(inf) = {lam_inf:.6} (1.483943 +- 1e-5), \
         (1/2) int |x^2-1| phi = {half_integral:.5} (0.48394 +- 1e-5)"
    );
}
