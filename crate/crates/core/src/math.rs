//! Shared numerical helpers: log-sum-exp, Gaussian density/CDF in log
//! space, and folded-normal moments.

use std::f64::consts::{PI, SQRT_2};

pub(crate) const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// `log(sum(exp(x_i)))` computed stably. Empty input and all `-inf` both
/// yield `-inf`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        if x > m {
            m = x;
        }
    }
    if !m.is_finite() {
        return m;
    }
    let mut s = 0.0;
    for &x in xs {
        s += (x - m).exp();
    }
    m + s.ln()
}

/// Standard normal log-density.
pub fn standard_normal_logpdf(z: f64) -> f64 {
    -LOG_SQRT_2PI - 0.5 * z * z
}

/// Standard normal CDF.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / SQRT_2)
}

/// Log of the standard normal CDF, stable deep into the lower tail.
///
/// The erfc route is accurate until erfc itself underflows (z below about
/// -37); past z = -25 the classic asymptotic expansion
/// Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - ...) takes over with
/// truncation error far below f64 resolution, keeping the result finite
/// arbitrarily deep into the tail.
pub fn log_standard_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= -25.0 {
        let p = standard_normal_cdf(z);
        if p >= 1.0 {
            // ln(Phi(z)) ~ -Q(z) for large z; avoids returning exactly 0
            // prematurely through rounding of erfc.
            return -standard_normal_cdf(-z);
        }
        return p.ln();
    }
    let z2 = z * z;
    // alternating Mills-ratio series, terms (2k-1)!!/z^(2k)
    let mut series = 0.0;
    let mut term = 1.0;
    for k in 1..=12 {
        term *= -((2 * k - 1) as f64) / z2;
        series += term;
    }
    standard_normal_logpdf(z) - (-z).ln() + series.ln_1p()
}

/// Mean of |X| for X ~ Normal(mu, sigma^2).
pub fn folded_normal_mean(mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return mu.abs();
    }
    let t = mu / sigma;
    sigma * (2.0 / PI).sqrt() * (-0.5 * t * t).exp()
        + mu * statrs::function::erf::erf(t / SQRT_2)
}

/// Variance of |X| for X ~ Normal(mu, sigma^2).
pub fn folded_normal_variance(mu: f64, sigma: f64) -> f64 {
    let m = folded_normal_mean(mu, sigma);
    (mu * mu + sigma * sigma - m * m).max(0.0)
}
