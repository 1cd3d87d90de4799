//! Declarative experiment configuration: one JSON document (schema 1)
//! describing model, method, loss/weight, grid, sampler and output paths.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{LossKind, LossSpec};
use crate::model::{Dataset, ParameterBox};
use crate::weights::WeightFunction;

fn default_schema() -> u32 {
    1
}

fn default_w_scale() -> f64 {
    1.0
}

fn default_n_sim() -> usize {
    100
}

fn default_burn_in() -> f64 {
    0.2
}

fn default_thin() -> usize {
    1
}

fn default_timeout() -> f64 {
    60.0
}

fn default_z() -> f64 {
    1.96
}

fn default_true() -> bool {
    true
}

/// Top-level experiment description. Either a single implicit run
/// (`method` + `loss`/`weight` at the top level), a comparison experiment
/// (`runs` array sharing the model/grid/seed), a calibration block, or a
/// combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    /// Mandatory: no wall-clock default, reproducibility is the contract.
    pub seed: u64,
    pub output_dir: String,
    /// 0 = one worker per logical core.
    #[serde(default)]
    pub max_workers: usize,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Shared sampler defaults, overridable per run.
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    #[serde(default)]
    pub surrogate: Option<SurrogateConfig>,
    #[serde(default)]
    pub runs: Vec<RunConfig>,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub loss: Option<LossConfig>,
    #[serde(default)]
    pub weight: Option<WeightConfig>,
    #[serde(default)]
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub calibrate: Option<CalibrateConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub method: String,
    #[serde(default)]
    pub loss: Option<LossConfig>,
    #[serde(default)]
    pub weight: Option<WeightConfig>,
    #[serde(default)]
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub builtin: Option<String>,
    /// Parameters for the builtin (heteroscedastic Gaussian model knobs).
    #[serde(default)]
    pub params: Option<Example1ParamsConfig>,
    #[serde(default)]
    pub external: Option<ExternalConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Example1ParamsConfig {
    pub observed: Option<f64>,
    pub noise_slope: Option<f64>,
    pub noise_floor: Option<f64>,
    pub prior_lo: Option<f64>,
    pub prior_hi: Option<f64>,
}

impl Example1ParamsConfig {
    pub fn resolve(&self) -> crate::model::Example1Params {
        let d = crate::model::Example1Params::default();
        crate::model::Example1Params {
            observed: self.observed.unwrap_or(d.observed),
            noise_slope: self.noise_slope.unwrap_or(d.noise_slope),
            noise_floor: self.noise_floor.unwrap_or(d.noise_floor),
            prior_lo: self.prior_lo.unwrap_or(d.prior_lo),
            prior_hi: self.prior_hi.unwrap_or(d.prior_hi),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    /// Executable plus fixed arguments.
    pub command: Vec<String>,
    /// How theta/seed reach the child: "stdin" (JSON line on stdin) or
    /// "arg" (JSON line appended as the final argument).
    #[serde(default)]
    pub protocol: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    pub observed: Vec<f64>,
    pub prior: BoxConfig,
    /// "abs" (1-D absolute difference), "euclidean" or "manhattan".
    pub discrepancy: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxConfig {
    pub fn resolve(&self) -> Result<ParameterBox> {
        ParameterBox::new(self.lower.clone(), self.upper.clone())
            .map_err(|e| Error::Config(format!("grid/prior bounds: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
    /// "vertices" (trapezoid rule, default) or "cells" (midpoints,
    /// comparable with sample histograms).
    #[serde(default)]
    pub layout: Option<String>,
}

impl GridConfig {
    pub fn resolve(&self) -> Result<crate::grid::GridSpec> {
        let bounds = ParameterBox::new(self.lower.clone(), self.upper.clone())
            .map_err(|e| Error::Config(format!("grid bounds: {e}")))?;
        match self.layout.as_deref().unwrap_or("vertices") {
            "vertices" => crate::grid::GridSpec::vertices(bounds, self.resolution.clone()),
            "cells" => crate::grid::GridSpec::cells(bounds, self.resolution.clone()),
            other => Err(Error::Config(format!(
                "grid.layout must be \"vertices\" or \"cells\", got \"{other}\""
            ))),
        }
        .map_err(|e| Error::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub steps: Option<usize>,
    pub n_sim: Option<usize>,
    pub n_prior_draws: Option<usize>,
    pub proposal_sd: Option<f64>,
    pub burn_in: Option<f64>,
    pub thin: Option<usize>,
}

impl SamplerConfig {
    /// Per-run override on top of shared defaults.
    pub fn merged_over(self, base: Option<SamplerConfig>) -> SamplerConfig {
        let base = base.unwrap_or_default();
        SamplerConfig {
            steps: self.steps.or(base.steps),
            n_sim: self.n_sim.or(base.n_sim),
            n_prior_draws: self.n_prior_draws.or(base.n_prior_draws),
            proposal_sd: self.proposal_sd.or(base.proposal_sd),
            burn_in: self.burn_in.or(base.burn_in),
            thin: self.thin.or(base.thin),
        }
    }

    pub fn burn_in_or_default(&self) -> f64 {
        self.burn_in.unwrap_or_else(default_burn_in)
    }

    pub fn thin_or_default(&self) -> usize {
        self.thin.unwrap_or_else(default_thin)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateConfig {
    pub design_points: usize,
    pub n_sim_per_point: usize,
    #[serde(default)]
    pub transform: Option<String>,
    #[serde(default)]
    pub variance_mode: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub family: String,
    pub h: f64,
    #[serde(default)]
    pub location: f64,
}

impl WeightConfig {
    pub fn resolve(&self) -> Result<WeightFunction> {
        WeightFunction::from_family_name(&self.family, self.h, self.location)
            .map_err(|e| Error::Config(format!("weight.family: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub kind: String,
    #[serde(default = "default_w_scale")]
    pub w_scale: f64,
    #[serde(default = "default_n_sim")]
    pub n_sim: usize,
    /// For schmon_generalized: "delta" or "log-delta".
    #[serde(default)]
    pub data_loss: Option<String>,
    /// For abc_error_model: a named density over the discrepancy.
    #[serde(default)]
    pub error_density: Option<ErrorDensityConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDensityConfig {
    /// "exponential" (one-sided in Delta) or "gaussian" (in Delta).
    pub family: String,
    pub scale: f64,
}

impl LossConfig {
    /// Lower to a runtime [`LossSpec`], wiring in the weight and the
    /// model's discrepancy where the kind needs them.
    pub fn resolve(
        &self,
        weight: Option<&WeightConfig>,
        discrepancy: Arc<dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync>,
    ) -> Result<LossSpec> {
        let kind = LossKind::from_name(&self.kind)?;
        let mut spec = LossSpec::new(kind)
            .with_w_scale(self.w_scale)
            .with_n_sim(self.n_sim);
        match kind {
            LossKind::AbcErrorModel => {
                let density = self.error_density.as_ref().ok_or_else(|| {
                    Error::Config("abc_error_model needs loss.error_density".into())
                })?;
                let scale = density.scale;
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::Config(
                        "loss.error_density.scale must be positive".into(),
                    ));
                }
                let disc = Arc::clone(&discrepancy);
                let log_density: Box<dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync> =
                    match density.family.as_str() {
                        "exponential" => Box::new(move |o: &Dataset, x: &Dataset| {
                            -scale.ln() - disc(o, x) / scale
                        }),
                        "gaussian" => Box::new(move |o: &Dataset, x: &Dataset| {
                            let z = disc(o, x) / scale;
                            -crate::math::LOG_SQRT_2PI - scale.ln() - 0.5 * z * z
                        }),
                        other => {
                            return Err(Error::Config(format!(
                                "loss.error_density.family must be \"exponential\" or \
                                 \"gaussian\", got \"{other}\""
                            )))
                        }
                    };
                spec = spec.with_weight(WeightFunction::error_model(log_density));
            }
            LossKind::SchmonGeneralized => {
                let disc = Arc::clone(&discrepancy);
                match self.data_loss.as_deref() {
                    Some("delta") => {
                        spec = spec.with_data_loss(move |o: &Dataset, x: &Dataset| disc(o, x));
                    }
                    Some("log-delta") => {
                        spec = spec.with_data_loss(move |o: &Dataset, x: &Dataset| disc(o, x).ln());
                    }
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "loss.data_loss must be \"delta\" or \"log-delta\", got \"{other}\""
                        )))
                    }
                    None => {
                        return Err(Error::Config(
                            "schmon_generalized needs loss.data_loss".into(),
                        ))
                    }
                }
            }
            _ => {
                if let Some(w) = weight {
                    spec = spec.with_weight(w.resolve()?);
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// "analytic" (builtin model's exact moments), "mc" (moments tabulated
    /// by simulation at the grid points) or "surrogate" (GP fit per the
    /// surrogate block).
    pub source: String,
    #[serde(default)]
    pub n_sim: Option<usize>,
    /// Force a constant-variance field with this sigma^2_Delta.
    #[serde(default)]
    pub constant_variance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub m_star: Option<f64>,
    #[serde(default)]
    pub sd_star: Option<f64>,
    /// Estimate (m*, sd*) by simulation at this point instead.
    #[serde(default)]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default)]
    pub n_sim: Option<usize>,
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default = "default_true")]
    pub nonnegative: bool,
    /// Optional gate: fail the run (exit 3) if w falls outside [lo, hi].
    #[serde(default)]
    pub assert_w: Option<[f64; 2]>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != 1 {
            return Err(Error::Config(format!(
                "unsupported schema {} (this build reads schema 1)",
                self.schema
            )));
        }
        if let Some(model) = &self.model {
            match (&model.builtin, &model.external) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(Error::Config(
                        "model must set exactly one of model.builtin / model.external".into(),
                    ))
                }
                (Some(name), None) if name != "example1" => {
                    return Err(Error::Config(format!(
                        "unknown builtin model \"{name}\" (available: example1)"
                    )))
                }
                _ => {}
            }
        }
        if !self.runs.is_empty() && self.method.is_some() {
            return Err(Error::Config(
                "use either a top-level method or a runs array, not both".into(),
            ));
        }
        if self.runs.is_empty() && self.method.is_none() && self.calibrate.is_none() {
            return Err(Error::Config(
                "config declares nothing to do: set method, runs or calibrate".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for run in &self.runs {
            if !seen.insert(run.name.clone()) {
                return Err(Error::Config(format!("duplicate run name \"{}\"", run.name)));
            }
            validate_method(&run.method)?;
        }
        if let Some(m) = &self.method {
            validate_method(m)?;
        }
        if let Some(c) = &self.calibrate {
            let direct = c.m_star.is_some() && c.sd_star.is_some();
            let via_model = c.theta_star.is_some();
            if direct == via_model {
                return Err(Error::Config(
                    "calibrate needs either m_star + sd_star or theta_star (not both)".into(),
                ));
            }
            if !(c.epsilon.is_finite() && c.epsilon > 0.0) {
                return Err(Error::Config("calibrate.epsilon must be positive".into()));
            }
        }
        Ok(())
    }

    /// The effective run list: explicit runs or the single implicit one.
    pub fn effective_runs(&self) -> Vec<RunConfig> {
        if !self.runs.is_empty() {
            return self.runs.clone();
        }
        match &self.method {
            Some(method) => vec![RunConfig {
                name: "run".into(),
                method: method.clone(),
                loss: self.loss.clone(),
                weight: self.weight.clone(),
                field: self.field.clone(),
                sampler: self.sampler,
            }],
            None => Vec::new(),
        }
    }
}

fn validate_method(method: &str) -> Result<()> {
    match method {
        "grid" | "rejection" | "pm_mcmc" | "surrogate_mh" => Ok(()),
        other => Err(Error::Config(format!(
            "method must be one of grid, rejection, pm_mcmc, surrogate_mh; got \"{other}\""
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let text = r#"{
            "schema": 1,
            "seed": 7,
            "output_dir": "out",
            "model": {"builtin": "example1"},
            "grid": {"lower": [0.0], "upper": [10.0], "resolution": [101]},
            "method": "grid",
            "loss": {"kind": "cf_exponential"},
            "weight": {"family": "exponential-onesided", "h": 0.2},
            "field": {"source": "analytic"}
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(config.effective_runs().len(), 1);
        assert_eq!(config.seed, 7);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = r#"{"output_dir": "out", "method": "grid"}"#;
        assert!(matches!(
            ExperimentConfig::from_json(text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_weight_family_names_the_field() {
        let w = WeightConfig {
            family: "triangle".into(),
            h: 0.5,
            location: 0.0,
        };
        let err = w.resolve().unwrap_err().to_string();
        assert!(err.contains("weight.family"), "{err}");
        assert!(err.contains("triangle"), "{err}");
    }

    #[test]
    fn unknown_builtin_model_rejected() {
        let text = r#"{
            "seed": 1, "output_dir": "o", "method": "grid",
            "model": {"builtin": "daycare"}
        }"#;
        let err = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("daycare"), "{err}");
    }

    #[test]
    fn calibrate_requires_exactly_one_moment_source() {
        let text = r#"{
            "seed": 1, "output_dir": "o",
            "calibrate": {"epsilon": 1.0}
        }"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        let ok = r#"{
            "seed": 1, "output_dir": "o",
            "calibrate": {"epsilon": 1.0, "m_star": 1.1, "sd_star": 0.11}
        }"#;
        assert!(ExperimentConfig::from_json(ok).is_ok());
    }

    #[test]
    fn schmon_config_lowers_to_spec() {
        let loss = LossConfig {
            kind: "schmon_generalized".into(),
            w_scale: 2.0,
            n_sim: 10,
            data_loss: Some("log-delta".into()),
            error_density: None,
        };
        let disc: Arc<dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync> =
            Arc::new(|o: &Dataset, x: &Dataset| (o.values()[0] - x.values()[0]).abs());
        let spec = loss.resolve(None, disc).unwrap();
        assert_eq!(spec.kind, LossKind::SchmonGeneralized);
        assert!(spec.data_loss.is_some());
    }
}
