//! Loss and log-likelihood evaluators: Monte Carlo ABC likelihoods,
//! expected-discrepancy losses, error-model and generalized ABC
//! likelihoods, and the closed-form losses available when the discrepancy
//! is modeled as Gaussian.
//!
//! Every Monte Carlo estimator draws its simulations through the same
//! helper, so two estimators handed the same [`RngStream`] see the same
//! simulated batch. The per-batch equivalences between estimators are
//! exact because of this coupling, not just in expectation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::GaussianDiscrepancyField;
use crate::math::{log_standard_normal_cdf, logsumexp};
use crate::model::{Dataset, ParameterPoint, SimulatorModel};
use crate::rng::RngStream;
use crate::weights::{eval_log_weight, WeightFunction};

/// Loss variants addressable by name in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Monte Carlo ABC log-likelihood under a kernel / weight function.
    AbcMc,
    /// Expected discrepancy (the canonical generalized-Bayes loss).
    ExpectedDiscrepancy,
    /// Expected squared discrepancy.
    ExpectedSquaredDiscrepancy,
    /// Monte Carlo likelihood under a full probabilistic error model.
    AbcErrorModel,
    /// Generalized ABC likelihood `E exp(-w l(x_o, x))`.
    SchmonGeneralized,
    /// Closed form: one-sided uniform weight under a Gaussian field.
    CfUniform,
    /// Closed form: Exponential weight under a Gaussian field.
    CfExponential,
    /// Closed form: Exponential weight, constant-variance simplification.
    CfExponentialConstVar,
    /// Closed form: Gaussian weight under a Gaussian field.
    CfGaussian,
    /// Closed form: Gaussian weight, constant variance and `m_h = 0`.
    CfGaussianConstVar,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AbcMc => "abc_mc",
            Self::ExpectedDiscrepancy => "expected_discrepancy",
            Self::ExpectedSquaredDiscrepancy => "expected_squared_discrepancy",
            Self::AbcErrorModel => "abc_error_model",
            Self::SchmonGeneralized => "schmon_generalized",
            Self::CfUniform => "cf_uniform",
            Self::CfExponential => "cf_exponential",
            Self::CfExponentialConstVar => "cf_exponential_constvar",
            Self::CfGaussian => "cf_gaussian",
            Self::CfGaussianConstVar => "cf_gaussian_constvar",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "abc_mc" => Self::AbcMc,
            "expected_discrepancy" => Self::ExpectedDiscrepancy,
            "expected_squared_discrepancy" => Self::ExpectedSquaredDiscrepancy,
            "abc_error_model" => Self::AbcErrorModel,
            "schmon_generalized" => Self::SchmonGeneralized,
            "cf_uniform" => Self::CfUniform,
            "cf_exponential" => Self::CfExponential,
            "cf_exponential_constvar" => Self::CfExponentialConstVar,
            "cf_gaussian" => Self::CfGaussian,
            "cf_gaussian_constvar" => Self::CfGaussianConstVar,
            other => {
                return Err(Error::Config(format!(
                    "unknown loss kind \"{other}\""
                )))
            }
        })
    }

    /// Kinds that need a Gaussian discrepancy field.
    pub fn needs_field(&self) -> bool {
        matches!(
            self,
            Self::CfUniform
                | Self::CfExponential
                | Self::CfExponentialConstVar
                | Self::CfGaussian
                | Self::CfGaussianConstVar
        )
    }

    /// Kinds estimated by simulation.
    pub fn is_monte_carlo(&self) -> bool {
        matches!(
            self,
            Self::AbcMc
                | Self::ExpectedDiscrepancy
                | Self::ExpectedSquaredDiscrepancy
                | Self::AbcErrorModel
                | Self::SchmonGeneralized
        )
    }
}

type DataLossFn = dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync;

/// A fully specified loss: the kind plus whatever the kind consumes
/// (weight function, scaling constant `w`, simulation budget, data-level
/// loss for the generalized ABC likelihood).
#[derive(Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    pub weight: Option<WeightFunction>,
    pub w_scale: f64,
    pub n_sim: usize,
    pub data_loss: Option<Arc<DataLossFn>>,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        Self {
            kind,
            weight: None,
            w_scale: 1.0,
            n_sim: 100,
            data_loss: None,
        }
    }

    pub fn with_weight(mut self, weight: WeightFunction) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn with_w_scale(mut self, w: f64) -> Self {
        self.w_scale = w;
        self
    }

    pub fn with_n_sim(mut self, n: usize) -> Self {
        self.n_sim = n;
        self
    }

    pub fn with_data_loss(
        mut self,
        loss: impl Fn(&Dataset, &Dataset) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.data_loss = Some(Arc::new(loss));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_scale.is_finite() && self.w_scale > 0.0) {
            return Err(Error::Config(format!(
                "loss.w_scale must be positive, got {}",
                self.w_scale
            )));
        }
        if self.kind.is_monte_carlo() && self.n_sim < 1 {
            return Err(Error::Config("loss.n_sim must be >= 1".into()));
        }
        match self.kind {
            LossKind::AbcMc if self.weight.is_none() => {
                Err(Error::Config("abc_mc needs a weight function".into()))
            }
            LossKind::AbcErrorModel
                if !matches!(self.weight, Some(WeightFunction::ErrorModel { .. })) =>
            {
                Err(Error::Config(
                    "abc_error_model needs an error-model weight".into(),
                ))
            }
            LossKind::SchmonGeneralized if self.data_loss.is_none() => Err(Error::Config(
                "schmon_generalized needs a data-level loss".into(),
            )),
            LossKind::CfUniform | LossKind::CfExponential | LossKind::CfExponentialConstVar
                if self.weight.as_ref().and_then(|w| w.bandwidth()).is_none() =>
            {
                Err(Error::Config(format!(
                    "{} needs a weight with a bandwidth",
                    self.kind.name()
                )))
            }
            LossKind::CfGaussian | LossKind::CfGaussianConstVar
                if !matches!(self.weight, Some(WeightFunction::Gaussian { .. })) =>
            {
                Err(Error::Config(format!(
                    "{} needs a gaussian weight (sigma_h, m_h)",
                    self.kind.name()
                )))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Debug for LossSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LossSpec")
            .field("kind", &self.kind.name())
            .field("weight", &self.weight)
            .field("w_scale", &self.w_scale)
            .field("n_sim", &self.n_sim)
            .finish()
    }
}

/// Simulate `n` datasets at `theta`. All Monte Carlo estimators route
/// through this, which is what makes shared-stream coupling exact.
pub fn draw_datasets(
    model: &SimulatorModel,
    theta: &ParameterPoint,
    n: usize,
    stream: RngStream,
) -> Vec<Dataset> {
    let mut rng = stream.rng();
    (0..n).map(|_| model.simulate(theta, &mut rng)).collect()
}

fn discrepancies(model: &SimulatorModel, theta: &ParameterPoint, sims: &[Dataset]) -> Result<Vec<f64>> {
    sims.iter()
        .map(|x| {
            let d = model.discrepancy(model.observed(), x);
            if d.is_finite() {
                Ok(d)
            } else {
                Err(Error::NonFiniteDiscrepancy {
                    value: d,
                    parameter: theta.values().to_vec(),
                })
            }
        })
        .collect()
}

/// Log of the unbiased Monte Carlo ABC likelihood estimate
/// `(1/n) sum_i K_h(Delta(x_o, x_i))`. Returns `-inf` when every weight
/// in the batch is zero.
pub fn mc_abc_log_likelihood(
    model: &SimulatorModel,
    weight: &WeightFunction,
    theta: &ParameterPoint,
    n: usize,
    stream: RngStream,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("abc likelihood needs n >= 1".into()));
    }
    let sims = draw_datasets(model, theta, n, stream);
    let deltas = discrepancies(model, theta, &sims)?;
    let log_weights: Result<Vec<f64>> = deltas.iter().map(|&d| eval_log_weight(weight, d)).collect();
    Ok(logsumexp(&log_weights?) - (n as f64).ln())
}

/// Monte Carlo estimate of the expected discrepancy `E Delta` (or of
/// `E Delta^2` with `squared`), the generalized-Bayes loss.
pub fn expected_discrepancy_loss(
    model: &SimulatorModel,
    theta: &ParameterPoint,
    n: usize,
    stream: RngStream,
    squared: bool,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("loss estimate needs n >= 1".into()));
    }
    let sims = draw_datasets(model, theta, n, stream);
    let deltas = discrepancies(model, theta, &sims)?;
    let total: f64 = deltas
        .iter()
        .map(|&d| if squared { d * d } else { d })
        .sum();
    Ok(total / n as f64)
}

/// Log of `(1/n) sum_i pi(x_o | x_i)` under a supplied error-model
/// log-density: the exact posterior likelihood when the kernel is read as
/// an observation error model.
pub fn error_model_log_likelihood(
    model: &SimulatorModel,
    log_error_density: impl Fn(&Dataset, &Dataset) -> f64,
    theta: &ParameterPoint,
    n: usize,
    stream: RngStream,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("likelihood estimate needs n >= 1".into()));
    }
    let sims = draw_datasets(model, theta, n, stream);
    // keep the discrepancy check so all estimators reject the same batches
    discrepancies(model, theta, &sims)?;
    let logs: Vec<f64> = sims
        .iter()
        .map(|x| log_error_density(model.observed(), x))
        .collect();
    if logs.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical(
            "error-model density returned NaN".into(),
        ));
    }
    Ok(logsumexp(&logs) - (n as f64).ln())
}

/// Log of the generalized ABC likelihood estimate
/// `(1/n) sum_i exp(-w l(x_o, x_i))`.
pub fn schmon_log_likelihood(
    model: &SimulatorModel,
    data_loss: impl Fn(&Dataset, &Dataset) -> f64,
    w_scale: f64,
    theta: &ParameterPoint,
    n: usize,
    stream: RngStream,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("likelihood estimate needs n >= 1".into()));
    }
    if !(w_scale.is_finite() && w_scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scaling constant w must be positive, got {w_scale}"
        )));
    }
    let sims = draw_datasets(model, theta, n, stream);
    discrepancies(model, theta, &sims)?;
    let logs: Vec<f64> = sims
        .iter()
        .map(|x| -w_scale * data_loss(model.observed(), x))
        .collect();
    if logs.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("data loss returned NaN".into()));
    }
    Ok(logsumexp(&logs) - (n as f64).ln())
}

fn checked_variance(field: &GaussianDiscrepancyField, theta: &ParameterPoint) -> Result<f64> {
    let v = field.variance(theta);
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Numerical(format!(
            "field variance must be positive and finite, got {v}"
        )));
    }
    Ok(v)
}

/// ABC loss for the one-sided uniform weight under a Gaussian field:
/// `-log Phi((h - m) / sqrt(v))`, stable deep into the tail.
pub fn cf_loss_uniform(
    field: &GaussianDiscrepancyField,
    h: f64,
    theta: &ParameterPoint,
) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::InvalidArgument("threshold h must be finite".into()));
    }
    let m = field.mean(theta);
    let v = checked_variance(field, theta)?;
    Ok(-log_standard_normal_cdf((h - m) / v.sqrt()))
}

/// ABC loss for the Exponential weight under a Gaussian field:
/// `m/h - v/(2 h^2)` (Gaussian moment generating function at `-1/h`).
/// With `const_var` the variance term is dropped, leaving `m/h`, i.e. the
/// expected-discrepancy loss scaled by `w = 1/h`.
pub fn cf_loss_exponential(
    field: &GaussianDiscrepancyField,
    h: f64,
    theta: &ParameterPoint,
    const_var: bool,
) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth h must be positive, got {h}"
        )));
    }
    let m = field.mean(theta);
    if const_var {
        return Ok(m / h);
    }
    let v = checked_variance(field, theta)?;
    Ok(m / h - v / (2.0 * h * h))
}

/// ABC loss for the Gaussian weight under a Gaussian field:
/// `log(v + sigma_h^2)/2 + (m - m_h)^2 / (2 (v + sigma_h^2))`.
/// With `const_var` (and `m_h = 0`): `E(Delta^2) / (2 (sigma2_delta + sigma_h^2))`
/// where `sigma2_delta` is the field's constant variance.
pub fn cf_loss_gaussian(
    field: &GaussianDiscrepancyField,
    sigma_h: f64,
    m_h: f64,
    theta: &ParameterPoint,
    const_var: bool,
) -> Result<f64> {
    if !(sigma_h.is_finite() && sigma_h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth sigma_h must be positive, got {sigma_h}"
        )));
    }
    let m = field.mean(theta);
    let v = checked_variance(field, theta)?;
    if const_var {
        let sigma2_delta = field.constant_variance().ok_or_else(|| {
            Error::InvalidArgument(
                "constant-variance Gaussian loss needs a field with constant variance".into(),
            )
        })?;
        let second_moment = v + m * m;
        return Ok(second_moment / (2.0 * (sigma2_delta + sigma_h * sigma_h)));
    }
    let total = v + sigma_h * sigma_h;
    let centered = m - m_h;
    Ok(0.5 * total.ln() + 0.5 * centered * centered / total)
}

/// Evaluate a loss spec at one parameter point, producing the posterior's
/// negative log-likelihood contribution `w * loss` (ABC kinds return
/// `-log p_ABC` directly; the scaling constant applies to the GBI kinds).
pub fn evaluate_scaled_loss(
    model: &SimulatorModel,
    spec: &LossSpec,
    field: Option<&GaussianDiscrepancyField>,
    theta: &ParameterPoint,
    stream: RngStream,
) -> Result<f64> {
    spec.validate()?;
    let need_field = || {
        field.ok_or_else(|| {
            Error::Config(format!(
                "loss kind {} requires a Gaussian discrepancy field",
                spec.kind.name()
            ))
        })
    };
    match spec.kind {
        LossKind::AbcMc => {
            let w = spec.weight.as_ref().expect("validated");
            Ok(-mc_abc_log_likelihood(model, w, theta, spec.n_sim, stream)?)
        }
        LossKind::ExpectedDiscrepancy => match field {
            // surrogate-backed generalized posterior: deterministic loss
            Some(f) => Ok(spec.w_scale * f.expected_discrepancy(theta)),
            None => Ok(spec.w_scale
                * expected_discrepancy_loss(model, theta, spec.n_sim, stream, false)?),
        },
        LossKind::ExpectedSquaredDiscrepancy => match field {
            Some(f) => Ok(spec.w_scale * f.expected_squared_discrepancy(theta)),
            None => Ok(spec.w_scale
                * expected_discrepancy_loss(model, theta, spec.n_sim, stream, true)?),
        },
        LossKind::AbcErrorModel => {
            let Some(WeightFunction::ErrorModel { log_density }) = &spec.weight else {
                unreachable!("validated")
            };
            let density = Arc::clone(log_density);
            Ok(-error_model_log_likelihood(
                model,
                move |o: &Dataset, s: &Dataset| density(o, s),
                theta,
                spec.n_sim,
                stream,
            )?)
        }
        LossKind::SchmonGeneralized => {
            let loss = Arc::clone(spec.data_loss.as_ref().expect("validated"));
            Ok(-schmon_log_likelihood(
                model,
                move |o: &Dataset, s: &Dataset| loss(o, s),
                spec.w_scale,
                theta,
                spec.n_sim,
                stream,
            )?)
        }
        LossKind::CfUniform => {
            let h = spec.weight.as_ref().and_then(|w| w.bandwidth()).expect("validated");
            cf_loss_uniform(need_field()?, h, theta)
        }
        LossKind::CfExponential | LossKind::CfExponentialConstVar => {
            let h = spec.weight.as_ref().and_then(|w| w.bandwidth()).expect("validated");
            cf_loss_exponential(
                need_field()?,
                h,
                theta,
                spec.kind == LossKind::CfExponentialConstVar,
            )
        }
        LossKind::CfGaussian | LossKind::CfGaussianConstVar => {
            let w = spec.weight.as_ref().expect("validated");
            let sigma_h = w.bandwidth().expect("validated");
            let m_h = w.location().unwrap_or(0.0);
            cf_loss_gaussian(
                need_field()?,
                sigma_h,
                m_h,
                theta,
                spec.kind == LossKind::CfGaussianConstVar,
            )
        }
    }
}
