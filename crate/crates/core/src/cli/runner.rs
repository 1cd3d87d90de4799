//! Config-driven experiment execution: grid evaluations, samplers,
//! surrogate training and calibration pipelines, with every artifact
//! recorded in a manifest.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_w, CalibrationReport, Delta0Rule, MomentSource};
use crate::cli::config::{
    CalibrateConfig, ExperimentConfig, FieldConfig, ModelConfig, RunConfig, SamplerConfig,
};
use crate::cli::external::{
    determinism_probe, external_model, named_discrepancy, ExternalProtocol, ExternalSimulator,
};
use crate::error::{Error, Result};
use crate::field::{FieldSource, GaussianDiscrepancyField};
use crate::grid::{distance, evaluate_on_grid, histogram_grid, DistanceMetric, GridLayout, GridSpec, PosteriorGrid};
use crate::model::{make_example1_model_with, Dataset, ParameterPoint, SimulatorModel};
use crate::rng::RngStream;
use crate::samplers::{pm_abc_mcmc, rejection_abc, surrogate_mh, SampleChain};
use crate::surrogate::{fit, to_field, HyperMode, OutputTransform, TrainingSet, VarianceMode};

/// Grid geometry stored per posterior artifact so quadrature weights can
/// be rebuilt exactly on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
    pub layout: String,
}

impl GridMeta {
    pub fn from_spec(spec: &GridSpec) -> Self {
        Self {
            lower: spec.bounds.lower.clone(),
            upper: spec.bounds.upper.clone(),
            resolution: spec.resolution.clone(),
            layout: match spec.layout {
                GridLayout::Vertices => "vertices".into(),
                GridLayout::Cells => "cells".into(),
            },
        }
    }

    pub fn to_spec(&self) -> Result<GridSpec> {
        let bounds = crate::model::ParameterBox::new(self.lower.clone(), self.upper.clone())?;
        match self.layout.as_str() {
            "vertices" => GridSpec::vertices(bounds, self.resolution.clone()),
            "cells" => GridSpec::cells(bounds, self.resolution.clone()),
            other => Err(Error::Config(format!("manifest grid layout {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub file: String,
    /// "posterior", "chain", "chain-meta", "distances" or "calibration".
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub crate_version: String,
    pub seed: u64,
    pub runtime_seconds: f64,
    pub config: serde_json::Value,
    pub artifacts: Vec<ArtifactRecord>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text).map_err(|e| Error::Config(format!("manifest: {e}")))?)
    }
}

struct ResolvedModel {
    model: SimulatorModel,
    /// Present for the builtin model; enables analytic fields.
    example1: Option<crate::model::Example1Params>,
    external_error: Option<Arc<std::sync::Mutex<Option<String>>>>,
    warnings: Vec<String>,
}

fn resolve_model(config: &ModelConfig, seed: u64) -> Result<ResolvedModel> {
    if let Some(name) = &config.builtin {
        // validated earlier: the only builtin is the heteroscedastic model
        debug_assert_eq!(name, "example1");
        let params = config.params.unwrap_or_default().resolve();
        return Ok(ResolvedModel {
            model: make_example1_model_with(params),
            example1: Some(params),
            external_error: None,
            warnings: Vec::new(),
        });
    }
    let ext = config.external.as_ref().expect("validated");
    let protocol = match ext.protocol.as_deref().unwrap_or("stdin") {
        "stdin" => ExternalProtocol::Stdin,
        "arg" => ExternalProtocol::Arg,
        other => {
            return Err(Error::Config(format!(
                "model.external.protocol must be \"stdin\" or \"arg\", got \"{other}\""
            )))
        }
    };
    let simulator = ExternalSimulator::new(
        ext.command.clone(),
        protocol,
        Duration::from_secs_f64(ext.timeout_s),
    )?;
    let prior = ext.prior.resolve()?;
    let discrepancy = named_discrepancy(&ext.discrepancy)?;
    let observed = Dataset(ext.observed.clone());
    if observed.values().is_empty() {
        return Err(Error::Config("model.external.observed is empty".into()));
    }

    // determinism contract spot check: same (theta, seed) twice
    let mut warnings = Vec::new();
    let probe_theta = ParameterPoint(
        prior
            .lower
            .iter()
            .zip(&prior.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect(),
    );
    match determinism_probe(&simulator, &probe_theta, seed) {
        Ok(true) => {}
        Ok(false) => warnings.push(
            "external simulator violated the determinism contract: identical (theta, seed) \
             produced different datasets (determinism_violations=1)"
                .to_string(),
        ),
        Err(e) => return Err(e),
    }

    let (model, error_slot) = external_model(simulator, observed, prior, discrepancy);
    Ok(ResolvedModel {
        model,
        example1: None,
        external_error: Some(error_slot),
        warnings,
    })
}

/// Per-run stream namespaces: grid evaluations share the base stream (so
/// Monte Carlo losses reuse one simulation batch per point across runs),
/// while samplers and surrogate designs get disjoint high stream ids.
fn sampler_stream(seed: u64, run_index: usize) -> RngStream {
    RngStream::new(seed, ((run_index as u64) + 1) << 40)
}

const SURROGATE_DESIGN_OFFSET: u64 = 1 << 20;

fn resolve_field(
    field_config: &FieldConfig,
    resolved: &ResolvedModel,
    config: &ExperimentConfig,
    grid: Option<&GridSpec>,
    loss_n_sim: usize,
    run_index: usize,
) -> Result<GaussianDiscrepancyField> {
    let base = match field_config.source.as_str() {
        "analytic" => {
            let params = resolved.example1.ok_or_else(|| {
                Error::Config("field.source \"analytic\" requires the builtin model".into())
            })?;
            crate::field::example1_analytic_field(params)
        }
        "mc" => {
            let spec = grid.ok_or_else(|| {
                Error::Config("field.source \"mc\" tabulates moments on the grid; add a grid".into())
            })?;
            let (points, _) = spec.points_and_weights();
            let n = field_config.n_sim.unwrap_or(loss_n_sim.max(100));
            GaussianDiscrepancyField::monte_carlo_tabulated(
                &resolved.model,
                &points,
                n,
                RngStream::new(config.seed, 0),
            )?
        }
        "surrogate" => {
            let sur = config.surrogate.as_ref().ok_or_else(|| {
                Error::Config("field.source \"surrogate\" needs a surrogate block".into())
            })?;
            if sur.design_points < 2 {
                return Err(Error::Config("surrogate.design_points must be >= 2".into()));
            }
            let transform = match sur.transform.as_deref().unwrap_or("identity") {
                "identity" => OutputTransform::Identity,
                "log" => OutputTransform::Log,
                other => {
                    return Err(Error::Config(format!(
                        "surrogate.transform must be \"identity\" or \"log\", got \"{other}\""
                    )))
                }
            };
            let variance_mode = match sur.variance_mode.as_deref().unwrap_or("constant") {
                "constant" => VarianceMode::Constant,
                "heteroscedastic" => VarianceMode::HeteroscedasticResidual,
                other => {
                    return Err(Error::Config(format!(
                        "surrogate.variance_mode must be \"constant\" or \"heteroscedastic\", \
                         got \"{other}\""
                    )))
                }
            };
            let bounds = match grid {
                Some(spec) => spec.bounds.clone(),
                None => {
                    return Err(Error::Config(
                        "surrogate training uses the grid bounds as its design space; add a grid"
                            .into(),
                    ))
                }
            };
            if bounds.dim() != 1 {
                return Err(Error::Config(
                    "surrogate design lattices are 1-D in this runner; use the library API \
                     for higher dimensions"
                        .into(),
                ));
            }
            let design_stream = sampler_stream(config.seed, run_index);
            let (lo, hi) = (bounds.lower[0], bounds.upper[0]);
            let mut inputs = Vec::with_capacity(sur.design_points);
            let mut outputs = Vec::with_capacity(sur.design_points);
            for j in 0..sur.design_points {
                let t = lo + (hi - lo) * (j as f64 + 0.5) / sur.design_points as f64;
                let (mean, _) = crate::model::estimate_discrepancy_moments(
                    &resolved.model,
                    &ParameterPoint::scalar(t),
                    sur.n_sim_per_point,
                    design_stream.offset(SURROGATE_DESIGN_OFFSET + j as u64),
                )?;
                inputs.push(vec![t]);
                if transform == OutputTransform::Log && mean <= 0.0 {
                    return Err(Error::Numerical(format!(
                        "log-transformed surrogate needs positive mean discrepancies, got \
                         {mean} at theta = {t}"
                    )));
                }
                outputs.push(mean);
            }
            let ts = TrainingSet::new(inputs, outputs, transform)?;
            let gp = fit(&ts, HyperMode::MaximizeLikelihood)?;
            to_field(&gp, &ts, variance_mode)?
        }
        other => {
            return Err(Error::Config(format!(
                "field.source must be \"analytic\", \"mc\" or \"surrogate\", got \"{other}\""
            )))
        }
    };
    Ok(match field_config.constant_variance {
        Some(v) => {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(
                    "field.constant_variance must be positive".into(),
                ));
            }
            let scale = base.scale();
            GaussianDiscrepancyField::with_constant_variance(
                move |theta: &ParameterPoint| base.mean(theta),
                v,
                FieldSource::Analytic,
            )
            .with_scale(scale)
        }
        None => base,
    })
}

struct RunProducts {
    posterior: Option<(String, PosteriorGrid, GridMeta)>,
    chain: Option<(String, SampleChain)>,
}

#[allow(clippy::too_many_arguments)]
fn execute_run(
    run: &RunConfig,
    run_index: usize,
    config: &ExperimentConfig,
    resolved: &ResolvedModel,
    grid: Option<&GridSpec>,
) -> Result<RunProducts> {
    let model = &resolved.model;
    let sampler: SamplerConfig = run
        .sampler
        .unwrap_or_default()
        .merged_over(config.sampler);
    let discrepancy = model_discrepancy(model);

    let make_loss = || -> Result<crate::loss::LossSpec> {
        let loss_config = run
            .loss
            .as_ref()
            .ok_or_else(|| Error::Config(format!("run \"{}\" needs a loss", run.name)))?;
        loss_config.resolve(run.weight.as_ref(), Arc::clone(&discrepancy))
    };

    match run.method.as_str() {
        "grid" => {
            let spec = grid.ok_or_else(|| {
                Error::Config(format!("run \"{}\" uses method grid; add a grid", run.name))
            })?;
            let loss = make_loss()?;
            let field = match &run.field {
                Some(fc) => Some(resolve_field(fc, resolved, config, grid, loss.n_sim, run_index)?),
                None => None,
            };
            let posterior = evaluate_on_grid(
                model,
                &loss,
                field.as_ref(),
                spec,
                RngStream::new(config.seed, 0),
            )?
            .normalize()?;
            Ok(RunProducts {
                posterior: Some((run.name.clone(), posterior, GridMeta::from_spec(spec))),
                chain: None,
            })
        }
        "rejection" => {
            let weight = run
                .weight
                .as_ref()
                .ok_or_else(|| Error::Config(format!("run \"{}\" needs a weight", run.name)))?
                .resolve()?;
            let n = sampler.n_prior_draws.ok_or_else(|| {
                Error::Config(format!("run \"{}\" needs sampler.n_prior_draws", run.name))
            })?;
            let chain = rejection_abc(model, &weight, n, sampler_stream(config.seed, run_index))?;
            let posterior = sample_histogram(&chain.draws, grid)?;
            Ok(RunProducts {
                posterior: posterior.map(|(g, m)| (run.name.clone(), g, m)),
                chain: Some((run.name.clone(), chain)),
            })
        }
        "pm_mcmc" => {
            let weight = run
                .weight
                .as_ref()
                .ok_or_else(|| Error::Config(format!("run \"{}\" needs a weight", run.name)))?
                .resolve()?;
            let steps = sampler.steps.ok_or_else(|| {
                Error::Config(format!("run \"{}\" needs sampler.steps", run.name))
            })?;
            let n_sim = sampler.n_sim.unwrap_or(1);
            let proposal = proposal_vector(&sampler, model.dim(), &run.name)?;
            let chain = pm_abc_mcmc(
                model,
                &weight,
                n_sim,
                steps,
                &proposal,
                sampler_stream(config.seed, run_index),
            )?;
            let kept = chain.thinned(sampler.burn_in_or_default(), sampler.thin_or_default());
            let posterior = sample_histogram(&kept, grid)?;
            Ok(RunProducts {
                posterior: posterior.map(|(g, m)| (run.name.clone(), g, m)),
                chain: Some((run.name.clone(), chain)),
            })
        }
        "surrogate_mh" => {
            let loss = make_loss()?;
            let field_config = run.field.as_ref().ok_or_else(|| {
                Error::Config(format!("run \"{}\" (surrogate_mh) needs a field", run.name))
            })?;
            let field = resolve_field(field_config, resolved, config, grid, loss.n_sim, run_index)?;
            let steps = sampler.steps.ok_or_else(|| {
                Error::Config(format!("run \"{}\" needs sampler.steps", run.name))
            })?;
            let proposal = proposal_vector(&sampler, model.dim(), &run.name)?;
            let w_scale = loss.w_scale;
            let chain = surrogate_mh(
                model,
                &field,
                &loss,
                w_scale,
                steps,
                &proposal,
                sampler_stream(config.seed, run_index),
            )?;
            let kept = chain.thinned(sampler.burn_in_or_default(), sampler.thin_or_default());
            let posterior = sample_histogram(&kept, grid)?;
            Ok(RunProducts {
                posterior: posterior.map(|(g, m)| (run.name.clone(), g, m)),
                chain: Some((run.name.clone(), chain)),
            })
        }
        other => Err(Error::Config(format!("unknown method \"{other}\""))),
    }
}

fn model_discrepancy(
    model: &SimulatorModel,
) -> Arc<dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync> {
    let model = model.clone();
    Arc::new(move |o: &Dataset, x: &Dataset| model.discrepancy(o, x))
}

fn proposal_vector(sampler: &SamplerConfig, dim: usize, run: &str) -> Result<Vec<f64>> {
    let sd = sampler
        .proposal_sd
        .ok_or_else(|| Error::Config(format!("run \"{run}\" needs sampler.proposal_sd")))?;
    Ok(vec![sd; dim])
}

/// Histogram sampler output onto the shared comparison grid when one is
/// configured with cell layout; otherwise fall back to Freedman-Diaconis
/// binning over the sample range (1-D only).
fn sample_histogram(
    draws: &[ParameterPoint],
    grid: Option<&GridSpec>,
) -> Result<Option<(PosteriorGrid, GridMeta)>> {
    match grid {
        Some(spec) if spec.layout == GridLayout::Cells => {
            let hist = histogram_grid(draws, spec)?;
            Ok(Some((hist, GridMeta::from_spec(spec))))
        }
        _ => {
            if draws.first().map_or(0, |p| p.dim()) != 1 {
                return Ok(None);
            }
            let values: Vec<f64> = draws.iter().map(|p| p.values()[0]).collect();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Ok(None);
            }
            let bins = crate::grid::freedman_diaconis_bins(&values, lo, hi);
            let spec = GridSpec::cells(
                crate::model::ParameterBox::new(vec![lo], vec![hi])?,
                vec![bins],
            )?;
            let hist = histogram_grid(draws, &spec)?;
            Ok(Some((hist, GridMeta::from_spec(&spec))))
        }
    }
}

fn run_calibration(
    calibrate: &CalibrateConfig,
    resolved: Option<&ResolvedModel>,
    seed: u64,
) -> Result<CalibrationReport> {
    let rule = Delta0Rule {
        z: calibrate.z,
        nonnegative: calibrate.nonnegative,
    };
    let report = match (calibrate.m_star, calibrate.sd_star, &calibrate.theta_star) {
        (Some(m_star), Some(sd_star), None) => calibrate_w(
            MomentSource::Direct { m_star, sd_star },
            calibrate.epsilon,
            &ParameterPoint(vec![f64::NAN]),
            rule,
            RngStream::new(seed, 0),
        )?,
        (None, None, Some(theta)) => {
            let resolved = resolved.ok_or_else(|| {
                Error::Config("calibrate.theta_star needs a model to simulate from".into())
            })?;
            calibrate_w(
                MomentSource::Model {
                    model: &resolved.model,
                    n_sim: calibrate.n_sim.unwrap_or(100_000),
                },
                calibrate.epsilon,
                &ParameterPoint(theta.clone()),
                rule,
                RngStream::new(seed, 1 << 48),
            )?
        }
        _ => unreachable!("validated"),
    };
    if let Some([lo, hi]) = calibrate.assert_w {
        if !(report.w >= lo && report.w <= hi) {
            return Err(Error::Numerical(format!(
                "calibration gate failed: w = {} outside [{lo}, {hi}]",
                report.w
            )));
        }
    }
    Ok(report)
}

/// Execute a parsed config, writing artifacts and a manifest into the
/// output directory. Returns the output directory.
pub fn run_config(config: &ExperimentConfig, output_override: Option<&Path>) -> Result<PathBuf> {
    config.validate()?;
    let started = Instant::now();
    let out_dir = output_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));
    std::fs::create_dir_all(&out_dir)?;

    let mut effective = config.clone();
    effective.output_dir = out_dir.display().to_string();

    let execute = || -> Result<(Vec<ArtifactRecord>, Vec<String>)> {
        let mut artifacts = Vec::new();
        let mut warnings = Vec::new();

        let resolved = match &effective.model {
            Some(mc) => Some(resolve_model(mc, effective.seed)?),
            None => None,
        };
        if let Some(r) = &resolved {
            warnings.extend(r.warnings.clone());
        }
        let grid = match &effective.grid {
            Some(gc) => Some(gc.resolve()?),
            None => None,
        };

        let mut posteriors: Vec<(String, PosteriorGrid, GridMeta)> = Vec::new();
        for (idx, run) in effective.effective_runs().iter().enumerate() {
            let resolved = resolved.as_ref().ok_or_else(|| {
                Error::Config(format!("run \"{}\" needs a model", run.name))
            })?;
            let products = execute_run(run, idx, &effective, resolved, grid.as_ref()).map_err(
                |e| attach_external_context(e, resolved),
            )?;
            if let Some((name, chain)) = products.chain {
                let chain_file = format!("{name}_chain.csv");
                chain.write_csv_file(&out_dir.join(&chain_file))?;
                artifacts.push(ArtifactRecord {
                    file: chain_file,
                    kind: "chain".into(),
                    run: Some(name.clone()),
                    grid: None,
                });
                let meta_file = format!("{name}_chain.json");
                std::fs::write(
                    out_dir.join(&meta_file),
                    serde_json::to_string_pretty(&chain.sidecar_json())?,
                )?;
                artifacts.push(ArtifactRecord {
                    file: meta_file,
                    kind: "chain-meta".into(),
                    run: Some(name),
                    grid: None,
                });
            }
            if let Some((name, posterior, meta)) = products.posterior {
                let file = format!("{name}_posterior.csv");
                posterior.write_csv_file(&out_dir.join(&file))?;
                artifacts.push(ArtifactRecord {
                    file: file.clone(),
                    kind: "posterior".into(),
                    run: Some(name.clone()),
                    grid: Some(meta.clone()),
                });
                posteriors.push((name, posterior, meta));
            }
        }

        // pairwise distances between posteriors sharing a grid
        let mut rows = Vec::new();
        for i in 0..posteriors.len() {
            for j in (i + 1)..posteriors.len() {
                if posteriors[i].2 != posteriors[j].2 {
                    continue;
                }
                let tv = distance(&posteriors[i].1, &posteriors[j].1, DistanceMetric::TotalVariation)?;
                let hell = distance(&posteriors[i].1, &posteriors[j].1, DistanceMetric::Hellinger)?;
                rows.push((posteriors[i].0.clone(), posteriors[j].0.clone(), tv, hell));
            }
        }
        if !rows.is_empty() {
            let file = "distances.csv";
            let mut w = csv::Writer::from_path(out_dir.join(file))?;
            w.write_record(["a", "b", "tv", "hellinger"])?;
            for (a, b, tv, hell) in rows {
                w.write_record([a, b, format!("{tv}"), format!("{hell}")])?;
            }
            w.flush()?;
            artifacts.push(ArtifactRecord {
                file: file.into(),
                kind: "distances".into(),
                run: None,
                grid: None,
            });
        }

        if let Some(calibrate) = &effective.calibrate {
            let report = run_calibration(calibrate, resolved.as_ref(), effective.seed)?;
            let file = "calibration.json";
            std::fs::write(out_dir.join(file), serde_json::to_string_pretty(&report)?)?;
            artifacts.push(ArtifactRecord {
                file: file.into(),
                kind: "calibration".into(),
                run: None,
                grid: None,
            });
        }
        Ok((artifacts, warnings))
    };

    let (artifacts, warnings) = if effective.max_workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(effective.max_workers)
            .build()
            .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?
            .install(execute)?
    } else {
        execute()?
    };

    let manifest = Manifest {
        schema: 1,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: effective.seed,
        runtime_seconds: started.elapsed().as_secs_f64(),
        config: serde_json::to_value(&effective)?,
        artifacts,
        warnings,
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(out_dir)
}

fn attach_external_context(error: Error, resolved: &ResolvedModel) -> Error {
    if let Some(slot) = &resolved.external_error {
        if let Some(message) = slot.lock().unwrap().take() {
            return Error::Simulation(format!("{error}; external simulator: {message}"));
        }
    }
    error
}

/// Load, validate and execute a config file.
pub fn run_config_file(path: &Path, output_override: Option<&Path>) -> Result<PathBuf> {
    let config = ExperimentConfig::from_file(path)?;
    run_config(&config, output_override)
}

/// Run only the calibration block of a config (the `calibrate` verb).
pub fn calibrate_config_file(path: &Path, output_override: Option<&Path>) -> Result<(PathBuf, CalibrationReport)> {
    let config = ExperimentConfig::from_file(path)?;
    let calibrate = config
        .calibrate
        .clone()
        .ok_or_else(|| Error::Config("config has no calibrate block".into()))?;
    let out_dir = output_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));
    std::fs::create_dir_all(&out_dir)?;
    let resolved = match &config.model {
        Some(mc) => Some(resolve_model(mc, config.seed)?),
        None => None,
    };
    let started = Instant::now();
    let report = run_calibration(&calibrate, resolved.as_ref(), config.seed)?;
    std::fs::write(
        out_dir.join("calibration.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    let manifest = Manifest {
        schema: 1,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        runtime_seconds: started.elapsed().as_secs_f64(),
        config: serde_json::to_value(&config)?,
        artifacts: vec![ArtifactRecord {
            file: "calibration.json".into(),
            kind: "calibration".into(),
            run: None,
            grid: None,
        }],
        warnings: Vec::new(),
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok((out_dir, report))
}
