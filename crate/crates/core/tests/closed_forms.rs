//! Closed-form losses and calibration objectives cross-checked against
//! adaptive quadrature of their defining integrals.

mod common;

use abc_gbi::calibration::{g_epsilon, match_exponential_to_uniform};
use abc_gbi::field::{FieldSource, GaussianDiscrepancyField};
use abc_gbi::loss::{cf_loss_exponential, cf_loss_gaussian, cf_loss_uniform};
use abc_gbi::ParameterPoint;
use common::{adaptive_simpson, golden_section_min, TestRng};

fn constant_field(m: f64, v: f64) -> GaussianDiscrepancyField {
    GaussianDiscrepancyField::from_functions(move |_| m, move |_| v, FieldSource::Analytic)
}

#[test]
fn cf_exponential_matches_quadrature_on_random_inputs() {
    let mut rng = TestRng(1);
    let theta = ParameterPoint::scalar(0.0);
    for _ in 0..40 {
        let m = rng.uniform(-1.0, 4.0);
        let v = rng.uniform(0.01, 2.0);
        let h = rng.uniform(0.05, 3.0);
        let field = constant_field(m, v);
        let cf = cf_loss_exponential(&field, h, &theta, false).unwrap();
        let sd = v.sqrt();
        // the tilted integrand peaks at m - v/h with width sd; factor out
        // its peak log-value c so the quadrature runs on exp(log f - c)
        let peak = m - v / h;
        let log_f = move |r: f64| {
            -r / h - 0.5 * (r - m) * (r - m) / v
                - 0.5 * (2.0 * std::f64::consts::PI * v).ln()
        };
        let c = log_f(peak);
        let integral = adaptive_simpson(
            &|r: f64| (log_f(r) - c).exp(),
            peak - 14.0 * sd,
            peak + 14.0 * sd,
            1e-13,
        );
        let oracle = -(integral.ln() + c);
        assert!(
            (cf - oracle).abs() < 1e-8,
            "m={m} v={v} h={h}: {cf} vs {oracle}"
        );
    }
}

#[test]
fn cf_uniform_matches_quadrature_on_random_inputs() {
    let mut rng = TestRng(2);
    let theta = ParameterPoint::scalar(0.0);
    for _ in 0..40 {
        let m = rng.uniform(-1.0, 4.0);
        let v = rng.uniform(0.01, 2.0);
        // standardized threshold down to z = -8, where linear-space
        // quadrature still resolves the mass
        let z_h = rng.uniform(-8.0, 3.0);
        let sd = v.sqrt();
        let h = m + z_h * sd;
        let field = constant_field(m, v);
        let cf = cf_loss_uniform(&field, h, &theta).unwrap();
        // quadrature of the standard normal mass below z_h, scaled by the
        // integrand's value at the upper limit to dodge underflow
        let log_phi = |z: f64| -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln();
        let oracle = if z_h > -1.0 {
            -adaptive_simpson(
                &|z: f64| log_phi(z).exp(),
                -16.0,
                z_h,
                1e-14,
            )
            .ln()
        } else {
            let c = log_phi(z_h);
            let lo = z_h - 45.0 / z_h.abs();
            let scaled = adaptive_simpson(&|z: f64| (log_phi(z) - c).exp(), lo, z_h, 1e-13);
            -(scaled.ln() + c)
        };
        assert!(
            (cf - oracle).abs() < 1e-8,
            "m={m} v={v} h={h} (z={z_h}): {cf} vs {oracle}"
        );
    }
}

#[test]
fn cf_gaussian_matches_quadrature_up_to_its_fixed_constant() {
    let mut rng = TestRng(3);
    let theta = ParameterPoint::scalar(0.0);
    for _ in 0..40 {
        let m = rng.uniform(-1.0, 4.0);
        let v = rng.uniform(0.01, 2.0);
        let sigma_h = rng.uniform(0.05, 2.0);
        let m_h = rng.uniform(-0.5, 1.0);
        let field = constant_field(m, v);
        let cf = cf_loss_gaussian(&field, sigma_h, m_h, &theta, false).unwrap();
        // product of two Gaussians: factor out the peak log-value of the
        // integrand so deep-tail cases stay in range
        let s2 = sigma_h * sigma_h;
        let log_f = move |r: f64| {
            -0.5 * (r - m_h) * (r - m_h) / s2 - 0.5 * (r - m) * (r - m) / v
                - 0.5 * (2.0 * std::f64::consts::PI * v).ln()
        };
        let precision = 1.0 / s2 + 1.0 / v;
        let peak = (m_h / s2 + m / v) / precision;
        let width = precision.sqrt().recip();
        let c = log_f(peak);
        let integral = adaptive_simpson(
            &|r: f64| (log_f(r) - c).exp(),
            peak - 14.0 * width,
            peak + 14.0 * width,
            1e-13,
        );
        // the loss drops the additive constant -log(sigma_h) of the raw
        // kernel integral (constants cancel in posterior normalization)
        let oracle = -(integral.ln() + c) + 0.5 * s2.ln();
        assert!(
            (cf - oracle).abs() < 1e-8,
            "m={m} v={v} s={sigma_h} mh={m_h}: {cf} vs {oracle}"
        );
    }
}

#[test]
fn matching_objective_agrees_with_l1_quadrature() {
    let mut rng = TestRng(4);
    for _ in 0..10 {
        let epsilon = rng.uniform(0.1, 5.0);
        let result = match_exponential_to_uniform(epsilon).unwrap();
        let h = result.h;
        // |1_{d <= eps}/eps - e^{-d/h}/h| integrated piecewise over the
        // kink at b (curves cross) and the jump at eps
        let f = |d: f64| ((d <= epsilon) as u8 as f64 / epsilon - (-d / h).exp() / h).abs();
        let b = h * (epsilon / h).ln();
        let quad = adaptive_simpson(&f, 0.0, b, 1e-12)
            + adaptive_simpson(&f, b, epsilon, 1e-12)
            + adaptive_simpson(&f, epsilon, epsilon + 60.0 * h, 1e-12);
        assert!(
            (result.objective_value - quad).abs() < 1e-6,
            "eps={epsilon}: {} vs {quad}",
            result.objective_value
        );
    }
}

#[test]
fn matching_root_agrees_with_direct_quadrature_minimization() {
    let epsilon = 1.0;
    let result = match_exponential_to_uniform(epsilon).unwrap();
    // independent route: minimize the quadrature of the L1 objective in h
    let objective = |h: f64| {
        let f = move |d: f64| ((d <= epsilon) as u8 as f64 / epsilon - (-d / h).exp() / h).abs();
        let b = h * (epsilon / h).ln();
        adaptive_simpson(&f, 0.0, b.max(1e-12), 1e-11)
            + adaptive_simpson(&f, b.max(1e-12), epsilon, 1e-11)
            + adaptive_simpson(&f, epsilon, epsilon + 80.0 * h, 1e-11)
    };
    let h_star = golden_section_min(&objective, 0.3, 0.95, 1e-7);
    assert!(
        (result.h - h_star).abs() < 1e-4,
        "closed-form root {} vs quadrature minimizer {h_star}",
        result.h
    );
}

#[test]
fn g_epsilon_matches_quadrature_at_the_paper_operating_point() {
    let (epsilon, h) = (1.0, 0.59);
    let f = |d: f64| ((d <= epsilon) as u8 as f64 / epsilon - (-d / h).exp() / h).abs();
    let b = h * (epsilon / h).ln();
    let quad = adaptive_simpson(&f, 0.0, b, 1e-12)
        + adaptive_simpson(&f, b, epsilon, 1e-12)
        + adaptive_simpson(&f, epsilon, epsilon + 60.0 * h, 1e-12);
    assert!((g_epsilon(h, epsilon) - quad).abs() < 1e-6);
}
