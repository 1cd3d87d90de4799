//! Gaussian-process regression on observed discrepancy values, producing a
//! [`GaussianDiscrepancyField`] without fresh simulations.
//!
//! The kernel is squared-exponential with per-dimension lengthscales and a
//! constant mean function. Hyperparameters are either fixed or picked by
//! exhaustive marginal-likelihood search over a log-spaced grid (7 points
//! per hyperparameter across 4 decades): deterministic and adequate at the
//! few-hundred-point training sizes this crate targets.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{DiscrepancyScale, FieldSource, GaussianDiscrepancyField};
use crate::model::ParameterPoint;

/// Output transform applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputTransform {
    #[default]
    Identity,
    /// Fit on `log Delta`; requires strictly positive outputs.
    Log,
}

/// Discrepancy observations at known parameter values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub transform: OutputTransform,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>, transform: OutputTransform) -> Result<Self> {
        if inputs.len() != outputs.len() || inputs.len() < 2 {
            return Err(Error::InvalidArgument(
                "training set needs >= 2 input/output pairs of equal length".into(),
            ));
        }
        let dim = inputs[0].len();
        if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
            return Err(Error::InvalidArgument(
                "training inputs must share one nonzero dimension".into(),
            ));
        }
        if outputs.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidArgument("training outputs must be finite".into()));
        }
        if transform == OutputTransform::Log && outputs.iter().any(|y| *y <= 0.0) {
            return Err(Error::InvalidArgument(
                "log transform requires strictly positive outputs".into(),
            ));
        }
        Ok(Self {
            inputs,
            outputs,
            transform,
        })
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Outputs on the fitting scale (log-transformed when requested).
    fn fitted_outputs(&self) -> Vec<f64> {
        match self.transform {
            OutputTransform::Identity => self.outputs.clone(),
            OutputTransform::Log => self.outputs.iter().map(|y| y.ln()).collect(),
        }
    }

    /// Load from CSV with columns `theta_1..theta_p,delta`.
    pub fn read_csv_file(path: &Path, transform: OutputTransform) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::Config(
                "training CSV needs theta_1..theta_p and delta columns".into(),
            ));
        }
        let dim = headers.len() - 1;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad float {s:?} in training CSV: {e}")))
            };
            let row: Result<Vec<f64>> = (0..dim).map(|d| parse(&record[d])).collect();
            inputs.push(row?);
            outputs.push(parse(&record[dim])?);
        }
        Self::new(inputs, outputs, transform)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.dim()).map(|d| format!("theta_{d}")).collect();
        header.push("delta".into());
        w.write_record(&header)?;
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            let mut record: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            record.push(format!("{y}"));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Squared-exponential kernel hyperparameters plus observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl Hyperparameters {
    fn validate(&self, dim: usize) -> Result<()> {
        let ok = self.signal_variance > 0.0
            && self.noise_variance > 0.0
            && self.lengthscales.len() == dim
            && self.lengthscales.iter().all(|l| *l > 0.0 && l.is_finite())
            && self.signal_variance.is_finite()
            && self.noise_variance.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "hyperparameters must be strictly positive with {dim} lengthscales: {self:?}"
            )))
        }
    }
}

/// Hyperparameter selection mode for [`fit`].
#[derive(Debug, Clone)]
pub enum HyperMode {
    Fixed(Hyperparameters),
    /// Exhaustive search over [`hyper_grid`] maximizing the log marginal
    /// likelihood. One shared lengthscale multiplier is searched and
    /// scaled per dimension by the input range.
    MaximizeLikelihood,
}

/// A trained GP: hyperparameters, constant mean, and the factorized
/// training covariance with its dual weights.
pub struct GpModel {
    hyper: Hyperparameters,
    mean_const: f64,
    transform: OutputTransform,
    inputs: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter_used: f64,
    log_marginal: f64,
}

fn kernel(hyper: &Hyperparameters, a: &[f64], b: &[f64]) -> f64 {
    let mut q = 0.0;
    for ((x, y), l) in a.iter().zip(b).zip(&hyper.lengthscales) {
        let d = (x - y) / l;
        q += d * d;
    }
    hyper.signal_variance * (-0.5 * q).exp()
}

fn factorize(
    hyper: &Hyperparameters,
    inputs: &[Vec<f64>],
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel(hyper, &inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    for i in 0..n {
        k[(i, i)] += hyper.noise_variance;
    }
    // jitter schedule: 1e-10 doubling up to 1e-4
    let mut jitter = 0.0;
    loop {
        let mut attempt = k.clone();
        if jitter > 0.0 {
            for i in 0..n {
                attempt[(i, i)] += jitter;
            }
        }
        if let Some(c) = Cholesky::new(attempt) {
            return Ok((c, jitter));
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 2.0 };
        if jitter > 1e-4 {
            return Err(Error::Numerical(
                "GP covariance factorization failed even with maximum jitter 1e-4".into(),
            ));
        }
    }
}

/// Log marginal likelihood of the training outputs under `hyper` (constant
/// mean at the output average).
pub fn log_marginal_likelihood(ts: &TrainingSet, hyper: &Hyperparameters) -> Result<f64> {
    hyper.validate(ts.dim())?;
    let y = ts.fitted_outputs();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let centered = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean));
    let (chol, _) = factorize(hyper, &ts.inputs)?;
    let alpha = chol.solve(&centered);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    let n = y.len() as f64;
    Ok(-0.5 * centered.dot(&alpha) - 0.5 * log_det - 0.5 * n * crate::math::LOG_SQRT_2PI * 2.0)
}

/// The deterministic hyperparameter grid searched by
/// [`HyperMode::MaximizeLikelihood`]: 7 log-spaced points over 4 decades
/// for each of signal variance, lengthscale multiplier and noise variance,
/// centered on data-driven scales.
pub fn hyper_grid(ts: &TrainingSet) -> Vec<Hyperparameters> {
    let y = ts.fitted_outputs();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64).max(1e-12);
    let dim = ts.dim();
    let mut ranges = vec![0.0_f64; dim];
    for d in 0..dim {
        let lo = ts.inputs.iter().map(|x| x[d]).fold(f64::INFINITY, f64::min);
        let hi = ts.inputs.iter().map(|x| x[d]).fold(f64::NEG_INFINITY, f64::max);
        ranges[d] = (hi - lo).max(1e-6);
    }
    let logspace = |lo_exp: f64, hi_exp: f64| -> Vec<f64> {
        (0..7)
            .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / 6.0))
            .collect()
    };
    let mut grid = Vec::with_capacity(343);
    for &sv in &logspace(-2.0, 2.0) {
        for &ls in &logspace(-2.0, 2.0) {
            for &nv in &logspace(-5.0, -1.0) {
                grid.push(Hyperparameters {
                    signal_variance: sv * var,
                    lengthscales: ranges.iter().map(|r| ls * r).collect(),
                    noise_variance: nv * var,
                });
            }
        }
    }
    grid
}

/// Fit a GP to the training set.
pub fn fit(ts: &TrainingSet, mode: HyperMode) -> Result<GpModel> {
    let hyper = match mode {
        HyperMode::Fixed(h) => {
            h.validate(ts.dim())?;
            h
        }
        HyperMode::MaximizeLikelihood => {
            let mut best: Option<(f64, Hyperparameters)> = None;
            for candidate in hyper_grid(ts) {
                let Ok(ll) = log_marginal_likelihood(ts, &candidate) else {
                    continue;
                };
                if best.as_ref().is_none_or(|(b, _)| ll > *b) {
                    best = Some((ll, candidate));
                }
            }
            best.ok_or_else(|| {
                Error::Numerical("no hyperparameter candidate produced a usable fit".into())
            })?
            .1
        }
    };
    let y = ts.fitted_outputs();
    let mean_const = y.iter().sum::<f64>() / y.len() as f64;
    let centered = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean_const));
    let (chol, jitter_used) = factorize(&hyper, &ts.inputs)?;
    let alpha = chol.solve(&centered);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    let log_marginal = -0.5 * centered.dot(&alpha)
        - 0.5 * log_det
        - (y.len() as f64) * crate::math::LOG_SQRT_2PI;
    Ok(GpModel {
        hyper,
        mean_const,
        transform: ts.transform,
        inputs: ts.inputs.clone(),
        chol,
        alpha,
        jitter_used,
        log_marginal,
    })
}

impl GpModel {
    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn mean_const(&self) -> f64 {
        self.mean_const
    }

    pub fn transform(&self) -> OutputTransform {
        self.transform
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    /// Posterior predictive mean and variance of the latent function (on
    /// the fitting scale; no observation noise). Variance is clamped at 0.
    pub fn predict(&self, theta: &ParameterPoint) -> (f64, f64) {
        let n = self.inputs.len();
        let k_star =
            DVector::from_iterator(n, self.inputs.iter().map(|x| kernel(&self.hyper, x, theta.values())));
        let mean = self.mean_const + k_star.dot(&self.alpha);
        let v = self.chol.solve(&k_star);
        let var = self.hyper.signal_variance - k_star.dot(&v);
        (mean, var.max(0.0))
    }

    /// Residuals of the training outputs on the fitting scale.
    fn residuals(&self, ts: &TrainingSet) -> Vec<f64> {
        ts.inputs
            .iter()
            .zip(ts.fitted_outputs())
            .map(|(x, y)| y - self.predict(&ParameterPoint(x.clone())).0)
            .collect()
    }

    pub fn to_spec(&self, ts: &TrainingSet) -> GpModelSpec {
        GpModelSpec {
            hyper: self.hyper.clone(),
            transform: self.transform,
            training: ts.clone(),
        }
    }
}

impl std::fmt::Debug for GpModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GpModel")
            .field("hyper", &self.hyper)
            .field("mean_const", &self.mean_const)
            .field("n_train", &self.inputs.len())
            .field("jitter_used", &self.jitter_used)
            .finish()
    }
}

/// Serializable form of a trained model: hyperparameters plus training
/// data; the factorization is recomputed on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpModelSpec {
    pub hyper: Hyperparameters,
    pub transform: OutputTransform,
    pub training: TrainingSet,
}

impl GpModelSpec {
    pub fn write_json_file(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }

    pub fn read_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn load(&self) -> Result<(GpModel, TrainingSet)> {
        let mut ts = self.training.clone();
        ts.transform = self.transform;
        let gp = fit(&ts, HyperMode::Fixed(self.hyper.clone()))?;
        Ok((gp, ts))
    }
}

/// How the field's variance function is produced in [`to_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode {
    /// Pooled residual variance, constant across the parameter space.
    Constant,
    /// A second GP fit on log squared residuals; a pragmatic model for
    /// variance that grows with the mean discrepancy.
    HeteroscedasticResidual,
}

/// Wrap a trained GP as a Gaussian discrepancy field.
///
/// The field's Gaussian moments live on the fitting scale (so a log-fit
/// yields a log-scale field whose closed-form losses implement the
/// transformed-discrepancy substitution); its `expected_discrepancy`
/// accessor back-transforms the mean to the original scale via the
/// log-normal mean `exp(m + v/2)` where applicable.
pub fn to_field(gp: &GpModel, ts: &TrainingSet, mode: VarianceMode) -> Result<GaussianDiscrepancyField> {
    if gp.transform != ts.transform || gp.inputs.len() != ts.len() {
        return Err(Error::InvalidArgument(
            "to_field needs the training set the model was fitted on".into(),
        ));
    }
    let residuals = gp.residuals(ts);
    let n = residuals.len() as f64;
    let mean_fn = {
        let gp = Arc::new(predictor(gp));
        move |theta: &ParameterPoint| gp(theta).0
    };
    let scale = match ts.transform {
        OutputTransform::Identity => DiscrepancyScale::Identity,
        OutputTransform::Log => DiscrepancyScale::Log,
    };
    let field = match mode {
        VarianceMode::Constant => {
            let pooled = residuals.iter().map(|r| r * r).sum::<f64>() / (n - 1.0);
            GaussianDiscrepancyField::with_constant_variance(mean_fn, pooled, FieldSource::Surrogate)
        }
        VarianceMode::HeteroscedasticResidual => {
            let log_sq: Vec<f64> = residuals.iter().map(|r| (r * r + 1e-12).ln()).collect();
            let var_ts = TrainingSet::new(ts.inputs.clone(), log_sq, OutputTransform::Identity)?;
            let var_gp = fit(&var_ts, HyperMode::MaximizeLikelihood)?;
            let var_pred = Arc::new(predictor(&var_gp));
            GaussianDiscrepancyField::from_functions(
                mean_fn,
                move |theta: &ParameterPoint| var_pred(theta).0.exp(),
                FieldSource::Surrogate,
            )
        }
    };
    Ok(field.with_scale(scale))
}

/// Ownable closure over `predict`, detached from the model's lifetime.
fn predictor(gp: &GpModel) -> impl Fn(&ParameterPoint) -> (f64, f64) + Send + Sync + 'static {
    let hyper = gp.hyper.clone();
    let inputs = gp.inputs.clone();
    let alpha = gp.alpha.clone();
    let mean_const = gp.mean_const;
    // refactorize once; Cholesky itself is not clonable across threads here
    let (chol, _) = factorize(&hyper, &inputs).expect("refactorizing a factorizable matrix");
    move |theta: &ParameterPoint| {
        let n = inputs.len();
        let k_star = DVector::from_iterator(n, inputs.iter().map(|x| kernel(&hyper, x, theta.values())));
        let mean = mean_const + k_star.dot(&alpha);
        let v = chol.solve(&k_star);
        let var = hyper.signal_variance - k_star.dot(&v);
        (mean, var.max(0.0))
    }
}
