//! Kernels and weight functions mapping a discrepancy value to a
//! likelihood weight, all evaluated in log space, plus the
//! transformed-discrepancy correspondence.
//!
//! "Kernel" here is used loosely: several families are asymmetric or
//! non-integrable and only make sense as weight functions. Each family
//! carries one fixed additive normalization so that constants cancel in
//! posterior normalization.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::math::LOG_SQRT_2PI;
use crate::model::Dataset;

/// A strictly increasing map supplied as a (forward, inverse) pair of
/// closures. Built-ins cover the two maps used in practice: `log`/`exp`
/// and affine rescaling.
#[derive(Clone)]
pub struct MonotoneMap {
    name: String,
    forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl MonotoneMap {
    pub fn custom(
        name: impl Into<String>,
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        }
    }

    pub fn identity() -> Self {
        Self::custom("identity", |r| r, |r| r)
    }

    /// Natural logarithm, mapping positive discrepancies to the real line.
    pub fn log() -> Self {
        Self::custom("log", f64::ln, f64::exp)
    }

    /// `r -> scale * r + shift` with `scale > 0`.
    pub fn affine(scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0 && shift.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "affine map needs finite scale > 0 and finite shift, got ({scale}, {shift})"
            )));
        }
        Ok(Self::custom(
            format!("affine({scale},{shift})"),
            move |r| scale * r + shift,
            move |r| (r - shift) / scale,
        ))
    }

    /// The same map with forward and inverse swapped.
    pub fn inverted(&self) -> Self {
        Self {
            name: format!("inverse({})", self.name),
            forward: Arc::clone(&self.inverse),
            inverse: Arc::clone(&self.forward),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn forward(&self, r: f64) -> f64 {
        (self.forward)(r)
    }

    pub fn inverse(&self, r: f64) -> f64 {
        (self.inverse)(r)
    }
}

impl std::fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MonotoneMap({})", self.name)
    }
}

type ErrorDensityFn = dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync;

/// Total mass of a weight function over its discrepancy domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMass {
    /// `log` of the integral; 0 means already normalized.
    Log(f64),
    /// The integral diverges (power-law); this family must never be
    /// reported as a probability density.
    NonIntegrable,
    /// Not tracked (weights composed with custom maps).
    Unknown,
}

/// The weight families appearing in discrepancy-based inference.
///
/// Fixed per-family normalizations: symmetric uniform and Exponential are
/// proper densities on the real line; the one-sided variants integrate to
/// one over `r >= 0`; `gaussian` is the Normal(m_h, h^2) density;
/// `log_gaussian` is the exact normalized log-Gaussian error-model
/// density; `power_law` is `-(1/h) log r` with zero additive constant.
#[derive(Clone)]
pub enum WeightFunction {
    /// `1/(2h)` on `|r| <= h`.
    UniformSymmetric { h: f64 },
    /// `1/h` on `r <= h`. Thresholds `h <= 0` are allowed for rejection
    /// sampling (the acceptance test is still well defined) but the weight
    /// cannot be evaluated there.
    UniformOneSided { h: f64 },
    /// `exp(-|r|/h) / (2h)`.
    ExponentialSymmetric { h: f64 },
    /// `exp(-r/h) / h`, defined for all real `r`.
    ExponentialOneSided { h: f64 },
    /// Normal(location, h^2) density in `r`.
    Gaussian { h: f64, location: f64 },
    /// `r^(-1/h)` for `r > 0`; not bounded at 0, not integrable. Like an
    /// improper prior, it is only usable when the resulting posterior is
    /// proper, which is on the caller to check per model.
    PowerLaw { h: f64 },
    /// Normalized density proportional to `exp(-(log r - location)^2 / (2 h^2))`
    /// on `r > 0`; zero weight for `r <= 0`.
    LogGaussian { h: f64, location: f64 },
    /// A full probabilistic error model `pi(x_o | x)` given as a
    /// log-density over datasets; `eval_log` is not defined for it.
    ErrorModel { log_density: Arc<ErrorDensityFn> },
    /// A weight composed with a monotone map: evaluates the inner weight
    /// at `map.forward(r)`.
    Transformed { inner: Box<WeightFunction>, map: MonotoneMap },
}

fn require_positive_bandwidth(h: f64, family: &str) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{family} weight requires bandwidth h > 0, got {h}"
        )))
    }
}

impl WeightFunction {
    pub fn uniform_symmetric(h: f64) -> Result<Self> {
        require_positive_bandwidth(h, "uniform")?;
        Ok(Self::UniformSymmetric { h })
    }

    /// One-sided uniform with threshold `h`. Any finite `h` is accepted so
    /// rejection sampling can express infeasible thresholds; evaluation as
    /// a weight still requires `h > 0`.
    pub fn uniform_onesided(h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "uniform-onesided threshold must be finite, got {h}"
            )));
        }
        Ok(Self::UniformOneSided { h })
    }

    pub fn exponential_symmetric(h: f64) -> Result<Self> {
        require_positive_bandwidth(h, "exponential")?;
        Ok(Self::ExponentialSymmetric { h })
    }

    pub fn exponential_onesided(h: f64) -> Result<Self> {
        require_positive_bandwidth(h, "exponential-onesided")?;
        Ok(Self::ExponentialOneSided { h })
    }

    pub fn gaussian(h: f64, location: f64) -> Result<Self> {
        require_positive_bandwidth(h, "gaussian")?;
        if !location.is_finite() {
            return Err(Error::InvalidArgument("gaussian location must be finite".into()));
        }
        Ok(Self::Gaussian { h, location })
    }

    pub fn power_law(h: f64) -> Result<Self> {
        require_positive_bandwidth(h, "power-law")?;
        Ok(Self::PowerLaw { h })
    }

    pub fn log_gaussian(h: f64, location: f64) -> Result<Self> {
        require_positive_bandwidth(h, "log-gaussian")?;
        if !location.is_finite() {
            return Err(Error::InvalidArgument("log-gaussian location must be finite".into()));
        }
        Ok(Self::LogGaussian { h, location })
    }

    pub fn error_model(
        log_density: impl Fn(&Dataset, &Dataset) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::ErrorModel {
            log_density: Arc::new(log_density),
        }
    }

    /// Config-facing family name.
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::UniformSymmetric { .. } => "uniform",
            Self::UniformOneSided { .. } => "uniform-onesided",
            Self::ExponentialSymmetric { .. } => "exponential",
            Self::ExponentialOneSided { .. } => "exponential-onesided",
            Self::Gaussian { .. } => "gaussian",
            Self::PowerLaw { .. } => "power-law",
            Self::LogGaussian { .. } => "log-gaussian",
            Self::ErrorModel { .. } => "error-model",
            Self::Transformed { .. } => "transformed",
        }
    }

    /// Construct a named family from config values.
    pub fn from_family_name(name: &str, h: f64, location: f64) -> Result<Self> {
        match name {
            "uniform" => Self::uniform_symmetric(h),
            "uniform-onesided" => Self::uniform_onesided(h),
            "exponential" => Self::exponential_symmetric(h),
            "exponential-onesided" => Self::exponential_onesided(h),
            "gaussian" => Self::gaussian(h, location),
            "power-law" => Self::power_law(h),
            "log-gaussian" => Self::log_gaussian(h, location),
            other => Err(Error::Config(format!(
                "unknown weight family \"{other}\" (expected one of: uniform, \
                 uniform-onesided, exponential, exponential-onesided, gaussian, \
                 power-law, log-gaussian)"
            ))),
        }
    }

    /// Bandwidth / threshold parameter of the family, where defined.
    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            Self::UniformSymmetric { h }
            | Self::UniformOneSided { h }
            | Self::ExponentialSymmetric { h }
            | Self::ExponentialOneSided { h }
            | Self::Gaussian { h, .. }
            | Self::PowerLaw { h }
            | Self::LogGaussian { h, .. } => Some(*h),
            Self::ErrorModel { .. } => None,
            Self::Transformed { inner, .. } => inner.bandwidth(),
        }
    }

    pub fn location(&self) -> Option<f64> {
        match self {
            Self::Gaussian { location, .. } | Self::LogGaussian { location, .. } => Some(*location),
            _ => None,
        }
    }
}

impl std::fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Transformed { inner, map } => {
                write!(f, "Transformed({:?}, {:?})", inner, map)
            }
            other => {
                write!(f, "{}", other.family_name())?;
                if let Some(h) = other.bandwidth() {
                    write!(f, "(h={h}")?;
                    if let Some(m) = other.location() {
                        write!(f, ", m={m}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// `log K_h(r)` with the family's fixed additive normalization. Returns
/// `-inf` where the weight is zero; errors where the family is undefined
/// (power-law needs `r > 0`, one-sided uniform needs `h > 0`).
pub fn eval_log_weight(w: &WeightFunction, r: f64) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::WeightDomain(format!(
            "weight evaluated at non-finite discrepancy {r}"
        )));
    }
    match w {
        WeightFunction::UniformSymmetric { h } => Ok(if r.abs() <= *h {
            -(2.0 * h).ln()
        } else {
            f64::NEG_INFINITY
        }),
        WeightFunction::UniformOneSided { h } => {
            if *h <= 0.0 {
                return Err(Error::WeightDomain(format!(
                    "one-sided uniform weight needs h > 0 to evaluate, got {h}"
                )));
            }
            Ok(if r <= *h { -h.ln() } else { f64::NEG_INFINITY })
        }
        WeightFunction::ExponentialSymmetric { h } => Ok(-(2.0 * h).ln() - r.abs() / h),
        WeightFunction::ExponentialOneSided { h } => Ok(-h.ln() - r / h),
        WeightFunction::Gaussian { h, location } => {
            let z = (r - location) / h;
            Ok(-LOG_SQRT_2PI - h.ln() - 0.5 * z * z)
        }
        WeightFunction::PowerLaw { h } => {
            if r <= 0.0 {
                return Err(Error::WeightDomain(format!(
                    "power-law weight requires r > 0, got {r}"
                )));
            }
            Ok(-r.ln() / h)
        }
        WeightFunction::LogGaussian { h, location } => {
            if r <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            let z = (r.ln() - location) / h;
            Ok(-(location + 0.5 * h * h) - LOG_SQRT_2PI - h.ln() - 0.5 * z * z)
        }
        WeightFunction::ErrorModel { .. } => Err(Error::WeightDomain(
            "error-model weights are densities over datasets; evaluate them through \
             the error-model likelihood, not through a scalar discrepancy"
                .into(),
        )),
        WeightFunction::Transformed { inner, map } => eval_log_weight(inner, map.forward(r)),
    }
}

/// Weight for the original discrepancy equivalent to placing `w` on the
/// transformed discrepancy `g(Delta)`: the result evaluates
/// `w(g(r))`, so using it with `Delta` reproduces using `w` with
/// `g(Delta)` batch for batch.
///
/// The two built-in correspondences: an Exponential weight on `log Delta`
/// becomes the power-law weight `r^(-1/h)`, and a Gaussian weight on
/// `log Delta` becomes the log-Gaussian error-model shape.
pub fn transform_weight(w: &WeightFunction, g: &MonotoneMap) -> WeightFunction {
    WeightFunction::Transformed {
        inner: Box::new(w.clone()),
        map: g.clone(),
    }
}

/// Total mass of the weight over its discrepancy domain: the real line for
/// the symmetric and Gaussian families, `r >= 0` for the one-sided and
/// log-scale families.
pub fn log_weight_normalizer(w: &WeightFunction) -> WeightMass {
    match w {
        WeightFunction::UniformSymmetric { .. } => WeightMass::Log(0.0),
        WeightFunction::UniformOneSided { h } => {
            if *h > 0.0 {
                WeightMass::Log(0.0)
            } else {
                // zero weight everywhere on r >= 0
                WeightMass::Log(f64::NEG_INFINITY)
            }
        }
        WeightFunction::ExponentialSymmetric { .. } => WeightMass::Log(0.0),
        WeightFunction::ExponentialOneSided { .. } => WeightMass::Log(0.0),
        WeightFunction::Gaussian { .. } => WeightMass::Log(0.0),
        WeightFunction::PowerLaw { .. } => WeightMass::NonIntegrable,
        WeightFunction::LogGaussian { .. } => WeightMass::Log(0.0),
        // error models are normalized densities over datasets by contract
        WeightFunction::ErrorModel { .. } => WeightMass::Log(0.0),
        WeightFunction::Transformed { .. } => WeightMass::Unknown,
    }
}
