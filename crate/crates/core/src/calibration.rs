//! Bridging arithmetic between uniform-kernel ABC and Exponential-kernel /
//! generalized posteriors: L1 kernel matching, discrepancy
//! standardization, and scaling-constant selection.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GaussianDiscrepancyField;
use crate::model::{ParameterBox, ParameterPoint, SimulatorModel};
use crate::rng::RngStream;

/// Result of matching the Exponential kernel to a uniform kernel with
/// threshold `epsilon` by minimizing their L1 distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// The scale-free minimizer `a = h / epsilon` in (0, 1).
    pub ratio_a: f64,
    /// Matched Exponential bandwidth `h = a * epsilon`.
    pub h: f64,
    /// L1 distance between the two kernels at the optimum.
    pub objective_value: f64,
    /// Bisection iterations used to locate the root.
    pub iterations: usize,
}

/// L1 distance between the uniform density `1_{d <= eps}/eps` and the
/// Exponential density `e^{-d/h}/h` on `d >= 0`, in closed form.
pub fn g_epsilon(h: f64, epsilon: f64) -> f64 {
    assert!(h > 0.0 && epsilon > 0.0, "g_epsilon needs h, epsilon > 0");
    if epsilon <= h {
        2.0 * (-epsilon / h).exp()
    } else {
        // crossing point b solves 1/eps = e^{-b/h}/h
        let b = h * (epsilon / h).ln();
        2.0 * ((epsilon - h - b) / epsilon + (-epsilon / h).exp())
    }
}

/// The scale-free objective `g(a) = g_epsilon(a * epsilon)`.
pub fn g_of_a(a: f64) -> f64 {
    assert!(a > 0.0 && a <= 1.0);
    2.0 * (1.0 - a + a * a.ln() + (-1.0 / a).exp())
}

/// First derivative of `g(a)` on (0, 1].
pub fn g_prime(a: f64) -> f64 {
    2.0 * (a * a * a.ln() + (-1.0 / a).exp()) / (a * a)
}

/// Second derivative of `g(a)` on (0, 1]; positive on the whole interval,
/// which is what makes the root of `g'` the unique global minimum.
pub fn g_second(a: f64) -> f64 {
    (-1.0 / a).exp() * (a * a * a * (1.0 / a).exp() - 2.0 * a + 1.0) / (a * a * a * a)
}

fn solve_matching_ratio() -> (f64, usize) {
    // g'(a) has the sign of n(a) = a^2 log a + e^{-1/a}; bracket in (0, 1)
    let numerator = |a: f64| a * a * a.ln() + (-1.0 / a).exp();
    let mut lo = 0.4;
    let mut hi = 1.0;
    debug_assert!(numerator(lo) < 0.0 && numerator(hi) > 0.0);
    let mut iterations = 0usize;
    let mut mid = 0.5 * (lo + hi);
    while iterations < 200 {
        mid = 0.5 * (lo + hi);
        let val = g_prime(mid);
        if val.abs() < 1e-12 {
            break;
        }
        if numerator(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    (mid, iterations)
}

/// The root `h / epsilon` of the matching problem, solved once to machine
/// tolerance and cached. Numerically about 0.59 (commonly quoted as 0.6).
pub fn matching_ratio() -> f64 {
    static RATIO: OnceLock<f64> = OnceLock::new();
    *RATIO.get_or_init(|| solve_matching_ratio().0)
}

/// Match the Exponential kernel to the uniform kernel with threshold
/// `epsilon`: bisection on `g'` down to |g'| < 1e-12, second derivative
/// checked positive at the root.
pub fn match_exponential_to_uniform(epsilon: f64) -> Result<MatchResult> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel matching needs epsilon > 0, got {epsilon}"
        )));
    }
    let (ratio_a, iterations) = solve_matching_ratio();
    debug_assert!(g_second(ratio_a) > 0.0);
    Ok(MatchResult {
        ratio_a,
        h: ratio_a * epsilon,
        objective_value: g_of_a(ratio_a),
        iterations,
    })
}

/// Smallest practically attainable discrepancy under the Gaussian rule
/// `Delta_0 = m(theta*) - z * sd(theta*)`, optionally floored at zero.
pub fn delta0_gaussian(
    field: &GaussianDiscrepancyField,
    theta_star: &ParameterPoint,
    z: f64,
    nonnegative: bool,
) -> f64 {
    let d0 = field.mean(theta_star) - z * field.variance(theta_star).sqrt();
    if nonnegative {
        d0.max(0.0)
    } else {
        d0
    }
}

/// `Delta_0` as an empirical lower quantile of simulated discrepancies at
/// `theta*`.
pub fn delta0_monte_carlo(
    model: &SimulatorModel,
    theta_star: &ParameterPoint,
    quantile: f64,
    n: usize,
    stream: RngStream,
    nonnegative: bool,
) -> Result<f64> {
    if !(quantile > 0.0 && quantile <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "delta0 quantile must lie in (0, 0.5], got {quantile}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("quantile estimation needs n >= 2".into()));
    }
    let mut rng = stream.rng();
    let mut deltas = Vec::with_capacity(n);
    for _ in 0..n {
        deltas.push(model.draw_discrepancy(theta_star, &mut rng)?);
    }
    deltas.sort_by(f64::total_cmp);
    let idx = ((quantile * (n - 1) as f64).round() as usize).min(n - 1);
    let d0 = deltas[idx];
    Ok(if nonnegative { d0.max(0.0) } else { d0 })
}

/// Everything produced by the scaling-constant calibration pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub theta_star: Vec<f64>,
    /// Mean discrepancy at `theta*`.
    pub m_star: f64,
    /// Discrepancy standard deviation at `theta*`.
    pub sd_star: f64,
    /// Smallest attainable discrepancy estimate.
    pub delta0: f64,
    /// The uniform-kernel ABC threshold being translated.
    pub epsilon: f64,
    /// Standardized threshold `epsilon - delta0`.
    pub epsilon_std: f64,
    /// Matched Exponential bandwidth `h = ratio * epsilon_std`.
    pub h: f64,
    /// Scaling constant `w = 1/h` for the expected-discrepancy loss.
    pub w: f64,
    /// z multiplier used in the Gaussian `delta0` rule.
    pub z: f64,
}

/// Gaussian-rule configuration for `Delta_0` inside [`calibrate_w`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta0Rule {
    pub z: f64,
    pub nonnegative: bool,
}

impl Default for Delta0Rule {
    /// `z = 1.96` reproduces the reference arithmetic; the flooring at
    /// zero is on by default since discrepancies are non-negative.
    fn default() -> Self {
        Self {
            z: 1.96,
            nonnegative: true,
        }
    }
}

/// Moment source for calibration: a field, or raw Monte Carlo moments.
pub enum MomentSource<'a> {
    Field(&'a GaussianDiscrepancyField),
    Model { model: &'a SimulatorModel, n_sim: usize },
    /// Directly supplied `(m*, sd*)`, e.g. reported values.
    Direct { m_star: f64, sd_star: f64 },
}

/// Translate a uniform-kernel ABC threshold `epsilon` into the scaling
/// constant `w` of the expected-discrepancy generalized posterior:
/// standardize by `Delta_0`, match kernels, set `w = 1/h`.
pub fn calibrate_w(
    source: MomentSource<'_>,
    epsilon: f64,
    theta_star: &ParameterPoint,
    rule: Delta0Rule,
    stream: RngStream,
) -> Result<CalibrationReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "calibration needs epsilon > 0, got {epsilon}"
        )));
    }
    let (m_star, sd_star) = match source {
        MomentSource::Field(field) => (
            field.mean(theta_star),
            field.variance(theta_star).sqrt(),
        ),
        MomentSource::Model { model, n_sim } => {
            let (m, v) = crate::model::estimate_discrepancy_moments(model, theta_star, n_sim, stream)?;
            (m, v.sqrt())
        }
        MomentSource::Direct { m_star, sd_star } => (m_star, sd_star),
    };
    let mut delta0 = m_star - rule.z * sd_star;
    if rule.nonnegative {
        delta0 = delta0.max(0.0);
    }
    if epsilon <= delta0 {
        return Err(Error::ThresholdBelowMinimum { epsilon, delta0 });
    }
    let epsilon_std = epsilon - delta0;
    let h = matching_ratio() * epsilon_std;
    Ok(CalibrationReport {
        theta_star: theta_star.values().to_vec(),
        m_star,
        sd_star,
        delta0,
        epsilon,
        epsilon_std,
        h,
        w: 1.0 / h,
        z: rule.z,
    })
}

/// Scaling-constant denominator selection from surrogate queries:
/// `delta = max(min_theta E(Delta_theta), min_i Delta^(i))`, the maximum
/// keeping `delta` non-negative even when the surrogate minimum dips below
/// zero. Downstream usage sets `w = 1/delta`.
pub fn select_delta_thomas(
    field: &GaussianDiscrepancyField,
    bounds: &ParameterBox,
    resolution_per_dim: usize,
    sim_discrepancies: &[f64],
) -> Result<f64> {
    if sim_discrepancies.is_empty() {
        return Err(Error::InvalidArgument(
            "delta selection needs at least one recorded discrepancy".into(),
        ));
    }
    let min_sim = sim_discrepancies.iter().copied().fold(f64::INFINITY, f64::min);
    if !min_sim.is_finite() {
        return Err(Error::InvalidArgument(
            "recorded discrepancies must be finite".into(),
        ));
    }
    let min_mean = minimize_field_mean(field, bounds, resolution_per_dim)?.1;
    Ok(min_mean.max(min_sim))
}

/// Locate `argmin_theta m(theta)` over a box: dense grid scan for up to 3
/// dimensions, multi-start coordinate descent above that.
pub fn minimize_field_mean(
    field: &GaussianDiscrepancyField,
    bounds: &ParameterBox,
    resolution_per_dim: usize,
) -> Result<(ParameterPoint, f64)> {
    if resolution_per_dim < 2 {
        return Err(Error::InvalidArgument(
            "field minimization needs resolution >= 2".into(),
        ));
    }
    let dim = bounds.dim();
    if dim <= 3 {
        let axis = |d: usize, i: usize| {
            bounds.lower[d]
                + (bounds.upper[d] - bounds.lower[d]) * i as f64 / (resolution_per_dim - 1) as f64
        };
        let total = resolution_per_dim.pow(dim as u32);
        let mut best = (ParameterPoint(vec![0.0; dim]), f64::INFINITY);
        for flat in 0..total {
            let mut idx = flat;
            let mut coord = vec![0.0; dim];
            for d in (0..dim).rev() {
                coord[d] = axis(d, idx % resolution_per_dim);
                idx /= resolution_per_dim;
            }
            let p = ParameterPoint(coord);
            let m = field.mean(&p);
            if m < best.1 {
                best = (p, m);
            }
        }
        Ok(best)
    } else {
        Ok(coordinate_descent(field, bounds, resolution_per_dim))
    }
}

fn coordinate_descent(
    field: &GaussianDiscrepancyField,
    bounds: &ParameterBox,
    resolution_per_dim: usize,
) -> (ParameterPoint, f64) {
    let dim = bounds.dim();
    // deterministic starts: center plus midpoints toward each corner pair
    let mut starts = vec![bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(lo, hi)| 0.5 * (lo + hi))
        .collect::<Vec<f64>>()];
    for frac in [0.25, 0.75] {
        starts.push(
            bounds
                .lower
                .iter()
                .zip(&bounds.upper)
                .map(|(lo, hi)| lo + frac * (hi - lo))
                .collect(),
        );
    }
    let mut best = (ParameterPoint(starts[0].clone()), f64::INFINITY);
    for start in starts {
        let mut current = start;
        let mut value = field.mean(&ParameterPoint(current.clone()));
        for _sweep in 0..20 {
            let mut improved = false;
            for d in 0..dim {
                let (lo, hi) = (bounds.lower[d], bounds.upper[d]);
                for i in 0..resolution_per_dim {
                    let candidate = lo + (hi - lo) * i as f64 / (resolution_per_dim - 1) as f64;
                    let mut trial = current.clone();
                    trial[d] = candidate;
                    let v = field.mean(&ParameterPoint(trial.clone()));
                    if v < value {
                        value = v;
                        current = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if value < best.1 {
            best = (ParameterPoint(current), value);
        }
    }
    best
}

/// Inverse of the calibration map: the uniform-kernel threshold implied by
/// an Exponential bandwidth (or Thomas-style `delta`), `epsilon = delta /
/// ratio + Delta_0`.
pub fn implied_abc_epsilon(delta: f64, delta0: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "implied epsilon needs delta > 0, got {delta}"
        )));
    }
    Ok(delta / matching_ratio() + delta0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSource;
    use crate::math::folded_normal_mean;
    use crate::model::make_example1_model;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matching_root_is_near_point_six() {
        let m = match_exponential_to_uniform(1.0).unwrap();
        assert!(m.ratio_a > 0.585 && m.ratio_a < 0.595, "ratio {}", m.ratio_a);
        assert!(g_prime(m.ratio_a).abs() < 1e-12);
        assert!(g_second(m.ratio_a) > 0.0);
        assert_abs_diff_eq!(m.h, m.ratio_a, epsilon = 1e-15);
    }

    #[test]
    fn matching_is_scale_equivariant() {
        let a = match_exponential_to_uniform(0.7).unwrap();
        let b = match_exponential_to_uniform(1.4).unwrap();
        assert_eq!(b.h, 2.0 * a.h);
        assert_eq!(a.ratio_a, b.ratio_a);
    }

    #[test]
    fn g_branches_agree_at_h_equals_epsilon() {
        let eps = 1.3;
        let v = g_epsilon(eps, eps);
        assert_abs_diff_eq!(v, 2.0 * (-1.0_f64).exp(), epsilon = 1e-14);
        // approaching from below: b -> 0
        assert_abs_diff_eq!(g_epsilon(eps - 1e-9, eps), v, epsilon = 1e-7);
    }

    #[test]
    fn g_tends_to_two_for_vanishing_h() {
        assert_abs_diff_eq!(g_epsilon(1e-12, 1.0), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn bracket_and_convexity() {
        assert!(g_prime(0.4) < 0.0);
        assert_abs_diff_eq!(g_prime(1.0), 2.0 / std::f64::consts::E, epsilon = 1e-14);
        for i in 1..=100 {
            let a = i as f64 / 101.0;
            assert!(g_second(a) > 0.0, "g'' <= 0 at a = {a}");
        }
    }

    #[test]
    fn local_optimality_probe() {
        let m = match_exponential_to_uniform(1.0).unwrap();
        for bump in [0.99, 1.01] {
            assert!(g_of_a(m.ratio_a) <= g_of_a(m.ratio_a * bump));
        }
    }

    #[test]
    fn delta0_gaussian_matches_reference_arithmetic() {
        let field = GaussianDiscrepancyField::with_constant_variance(|_| 1.1, 0.11 * 0.11, FieldSource::Analytic);
        let theta = ParameterPoint::scalar(0.0);
        let d0 = delta0_gaussian(&field, &theta, 1.96, true);
        assert_abs_diff_eq!(d0, 0.8844, epsilon = 1e-10);

        // zero variance hits the field's 1e-12 floor, so sd is 1e-6
        let degenerate =
            GaussianDiscrepancyField::with_constant_variance(|_| 1.1, 0.0, FieldSource::Analytic);
        assert_abs_diff_eq!(
            delta0_gaussian(&degenerate, &theta, 1.96, true),
            1.1,
            epsilon = 1e-5
        );
    }

    #[test]
    fn delta0_monte_carlo_matches_folded_quantile() {
        let model = make_example1_model();
        let theta = ParameterPoint::scalar(3.0);
        let n = 1_000_000;
        let q = 0.025;
        let d0 = delta0_monte_carlo(&model, &theta, q, n, RngStream::from_seed(8), true).unwrap();
        // |N(0, 0.61)| has CDF 2 Phi(d / sigma) - 1; 2.5% quantile solves
        // Phi(d / sigma) = 0.5125
        let sigma = 0.61_f64.sqrt();
        let target = 0.5 + q / 2.0;
        let mut lo = 0.0;
        let mut hi = 3.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if crate::math::standard_normal_cdf(mid / sigma) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        // 3 MC standard errors of an empirical quantile: sqrt(q(1-q)/n)/f(x)
        let density = 2.0 * crate::math::standard_normal_logpdf(oracle / sigma).exp() / sigma;
        let se = (q * (1.0 - q) / n as f64).sqrt() / density;
        assert!((d0 - oracle).abs() < 3.0 * se, "{d0} vs {oracle} (se {se})");
    }

    #[test]
    fn calibrate_w_reproduces_reported_values() {
        let theta = ParameterPoint::scalar(0.0);
        let report = calibrate_w(
            MomentSource::Direct { m_star: 1.1, sd_star: 0.11 },
            1.0,
            &theta,
            Delta0Rule::default(),
            RngStream::from_seed(0),
        )
        .unwrap();
        assert_abs_diff_eq!(report.delta0, 0.8844, epsilon = 1e-12);
        assert_abs_diff_eq!(report.epsilon_std, 0.1156, epsilon = 1e-12);
        assert!(report.w > 13.0 && report.w < 16.0, "w = {}", report.w);
        assert_abs_diff_eq!(report.w, 1.0 / report.h, epsilon = 1e-12);

        // epsilon = m* - sd*: w ~ 1.7 / sd*
        let conservative = calibrate_w(
            MomentSource::Direct { m_star: 1.1, sd_star: 0.11 },
            1.1 - 0.11,
            &theta,
            Delta0Rule::default(),
            RngStream::from_seed(0),
        )
        .unwrap();
        let w_sd = conservative.w * 0.11;
        assert_abs_diff_eq!(w_sd, 1.0 / (matching_ratio() * 0.96), epsilon = 1e-9);
        assert!((w_sd - 1.77).abs() < 0.02, "w * sd = {w_sd}");

        // epsilon = m*: w ~ 0.9 / sd* within 5%
        let default_eps = calibrate_w(
            MomentSource::Direct { m_star: 1.1, sd_star: 0.11 },
            1.1,
            &theta,
            Delta0Rule::default(),
            RngStream::from_seed(0),
        )
        .unwrap();
        let w_sd = default_eps.w * 0.11;
        assert!((w_sd - 0.9).abs() / 0.9 < 0.05, "w * sd = {w_sd}");
    }

    #[test]
    fn calibrate_w_rejects_infeasible_epsilon() {
        let err = calibrate_w(
            MomentSource::Direct { m_star: 1.1, sd_star: 0.11 },
            0.5,
            &ParameterPoint::scalar(0.0),
            Delta0Rule::default(),
            RngStream::from_seed(0),
        );
        assert!(matches!(err, Err(Error::ThresholdBelowMinimum { .. })));
    }

    #[test]
    fn calibrate_w_is_monotone_in_epsilon() {
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let eps = 0.9 + 0.1 * i as f64;
            let r = calibrate_w(
                MomentSource::Direct { m_star: 1.1, sd_star: 0.11 },
                eps,
                &ParameterPoint::scalar(0.0),
                Delta0Rule::default(),
                RngStream::from_seed(0),
            )
            .unwrap();
            assert!(r.w < prev, "w not decreasing at eps = {eps}");
            prev = r.w;
        }
    }

    #[test]
    fn delta_selection_max_rule() {
        let theta = ParameterPoint::scalar(0.0);
        let bounds = ParameterBox::new(vec![0.0], vec![10.0]).unwrap();
        let field = GaussianDiscrepancyField::with_constant_variance(|_| 1.1, 0.01, FieldSource::Surrogate);
        assert_abs_diff_eq!(
            select_delta_thomas(&field, &bounds, 101, &[0.9, 2.0]).unwrap(),
            1.1,
            epsilon = 1e-12
        );
        let negative = GaussianDiscrepancyField::with_constant_variance(|_| -0.2, 0.01, FieldSource::Surrogate);
        assert_abs_diff_eq!(
            select_delta_thomas(&negative, &bounds, 101, &[0.3, 0.8]).unwrap(),
            0.3,
            epsilon = 1e-12
        );
        assert!(select_delta_thomas(&field, &bounds, 101, &[]).is_err());
        let _ = theta;
    }

    #[test]
    fn field_minimum_matches_refined_scan() {
        let field = crate::field::example1_analytic_field(Default::default());
        let bounds = ParameterBox::new(vec![0.0], vec![10.0]).unwrap();
        let coarse = minimize_field_mean(&field, &bounds, 2001).unwrap();
        let fine = minimize_field_mean(&field, &bounds, 20_001).unwrap();
        assert!((coarse.1 - fine.1).abs() < 1e-3);
        // sanity: the minimum sits where the folded mean is smallest
        let probe = folded_normal_mean(3.0 - coarse.0.values()[0], (0.2 * coarse.0.values()[0] + 0.01).sqrt());
        assert_abs_diff_eq!(coarse.1, probe, epsilon = 1e-12);
    }

    #[test]
    fn implied_epsilon_inverts_calibration() {
        assert_abs_diff_eq!(
            implied_abc_epsilon(0.6, 0.0).unwrap(),
            0.6 / matching_ratio(),
            epsilon = 1e-15
        );
        assert!((implied_abc_epsilon(0.6, 0.0).unwrap() - 1.017).abs() < 1e-3);
        assert_abs_diff_eq!(
            implied_abc_epsilon(1.0, 1.0).unwrap(),
            1.0 / matching_ratio() + 1.0,
            epsilon = 1e-15
        );

        let report = calibrate_w(
            MomentSource::Direct { m_star: 1.1, sd_star: 0.11 },
            1.0,
            &ParameterPoint::scalar(0.0),
            Delta0Rule::default(),
            RngStream::from_seed(0),
        )
        .unwrap();
        let eps = implied_abc_epsilon(report.h, report.delta0).unwrap();
        assert_abs_diff_eq!(eps, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn coordinate_descent_used_above_three_dims() {
        let field = GaussianDiscrepancyField::from_functions(
            |p: &ParameterPoint| p.values().iter().map(|x| (x - 0.3) * (x - 0.3)).sum::<f64>() + 0.5,
            |_| 1.0,
            FieldSource::Analytic,
        );
        let bounds = ParameterBox::new(vec![0.0; 4], vec![1.0; 4]).unwrap();
        let (point, value) = minimize_field_mean(&field, &bounds, 21).unwrap();
        for x in point.values() {
            assert_abs_diff_eq!(*x, 0.3, epsilon = 0.051);
        }
        assert!(value < 0.51);
    }
}
