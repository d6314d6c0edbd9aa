use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_relative_eq;
use proptest::prelude::*;
use sle_lab::bessel::*;
use sle_lab::error::SleError;
use sle_lab::numerics::gauss_legendre;
use sle_lab::stats::mean_and_stderr;

/// Killed Brownian motion on `(0, π)`, which is the δ = 1 process.
fn killed_bm_density(t: f64, x: f64, y: f64) -> f64 {
    (1..400)
        .map(|k| {
            let k = k as f64;
            2.0 / PI * (k * x).sin() * (k * y).sin() * (-0.5 * k * k * t).exp()
        })
        .sum()
}

#[test]
fn killed_series_matches_brownian_motion() {
    let law = BesselLaw::new(1.0).unwrap();
    for t in [0.2, 1.0, 2.5] {
        for (x, y) in [(0.4, 1.9), (FRAC_PI_2, 0.3), (2.8, 2.7)] {
            // density in y = cos θ is the angular density over sin θ
            let series = law.killed_density(t, f64::cos(x), f64::cos(y)).unwrap();
            let exact = killed_bm_density(t, x, y) / y.sin();
            assert_relative_eq!(series, exact, max_relative = 1e-8, epsilon = 1e-12);
        }
    }
}

#[test]
fn live_density_relaxes_to_stationarity() {
    for delta in [2.0, 3.0, 5.5] {
        let law = BesselLaw::new(delta).unwrap();
        for y in [-0.8, 0.1, 0.6] {
            let p = law.transition_density_y(20.0, 0.5, y).unwrap();
            assert_relative_eq!(p, stationary_density_y(delta, y).unwrap(), max_relative = 1e-8);
        }
    }
}

#[test]
fn killed_density_table_carries_the_survival_mass() {
    let law = BesselLaw::new(1.2).unwrap();
    let rows = law.density_table(0.7, 0.2, 100).unwrap();
    let mass: f64 = rows.iter().map(|r| r[3]).sum::<f64>() * 0.02;
    let s = law.survival_probability(0.7, 0.2).unwrap().probability;
    assert_relative_eq!(mass, s, max_relative = 1e-8);
    assert!(rows.iter().all(|r| r[0] == 0.2 && r[2] == 0.7 && r[3] >= 0.0));
}

#[test]
fn too_small_a_time_asks_for_more_terms() {
    let law = BesselLaw::new(3.0).unwrap();
    match law.density_table(1e-4, 0.0, 10) {
        Err(SleError::IncreaseOrder { required, .. }) => assert!(required > DEFAULT_ORDER),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sampler_mean_matches_series() {
    // E[cos X_t] from the series against an Euler–Maruyama ensemble
    let (delta, t, x0) = (2.5, 0.5, 0.6);
    let law = BesselLaw::new(delta).unwrap();
    let exact = gauss_legendre().integrate(0.0, PI, |th: f64| th.cos() * law.transition_density_x(t, x0, th).unwrap());
    let s = XSampler::new(delta, 1e-3, false).unwrap();
    let ys: Vec<f64> = sample_x_ensemble(&s, x0, t, 20_000, 3).iter().map(|o| o.x.cos()).collect();
    let (m, se) = mean_and_stderr(&ys);
    assert!((m - exact).abs() < 4.0 * se, "{m} ± {se} vs {exact}");
}

#[test]
fn killed_ensemble_survival() {
    let law = BesselLaw::new(1.0).unwrap();
    let s = XSampler::new(1.0, 1e-3, true).unwrap();
    let out = sample_x_ensemble(&s, FRAC_PI_2, 1.0, 20_000, 4);
    let alive = out.iter().filter(|o| o.lifetime.is_none()).count() as f64 / out.len() as f64;
    let p = law.survival_probability(1.0, 0.0).unwrap().probability;
    let se = (p * (1.0 - p) / out.len() as f64).sqrt();
    assert!((alive - p).abs() < 4.0 * se, "{alive} vs {p}");
}

#[test]
fn ensembles_are_reproducible() {
    let s = XSampler::new(3.0, 1e-2, false).unwrap();
    let a = sample_x_ensemble(&s, 1.0, 0.5, 200, 11);
    let b = sample_x_ensemble(&s, 1.0, 0.5, 200, 11);
    let c = sample_x_ensemble(&s, 1.0, 0.5, 200, 12);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sample_path_csv_columns() {
    let p = sample_y_path(1.5, 0.5, 5.0, 500, 1, true).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,y,alive\n"));
    assert_eq!(text.lines().count(), 502);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn densities_are_nonnegative_and_symmetric(delta in 2.0f64..8.0, t in 0.05f64..2.0, x in -0.99f64..0.99, y in -0.99f64..0.99) {
        let law = BesselLaw::new(delta).unwrap();
        let p = law.transition_density_y(t, x, y).unwrap();
        prop_assert!(p >= -1e-10);
        // Y and -Y have the same law
        let q = law.transition_density_y(t, -x, -y).unwrap();
        prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
    }

    #[test]
    fn survival_decreases(t in 0.1f64..3.0, x in -0.9f64..0.9, delta in 0.2f64..1.9) {
        let law = BesselLaw::new(delta).unwrap();
        let a = law.survival_probability(t, x).unwrap().probability;
        let b = law.survival_probability(t + 0.1, x).unwrap().probability;
        prop_assert!(b < a && a <= 1.0 + 1e-9 && b > 0.0);
    }

    #[test]
    fn norm_ratio_recurrence(n in 0usize..50, alpha in 0.05f64..4.0) {
        // h_{n+1} / h_n = (n + 2α)(n + α) / ((n + 1)(n + α + 1))
        let (a, b) = (gegenbauer_norm(n, alpha).unwrap(), gegenbauer_norm(n + 1, alpha).unwrap());
        let n = n as f64;
        let r = (n + 2.0 * alpha) * (n + alpha) / ((n + 1.0) * (n + alpha + 1.0));
        prop_assert!((b / a / r - 1.0).abs() < 1e-10);
    }
}
