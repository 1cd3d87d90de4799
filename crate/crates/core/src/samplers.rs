//! Monte Carlo samplers targeting the ABC and generalized posteriors:
//! rejection ABC, pseudo-marginal ABC-MCMC, and field-backed
//! Metropolis-Hastings for surrogate targets.
//!
//! A single chain is strictly sequential; multiple chains stay independent
//! by giving each its own stream id. Identical `(seed, stream_id, config)`
//! reproduce bit-identical chains.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GaussianDiscrepancyField;
use crate::loss::{evaluate_scaled_loss, LossKind, LossSpec};
use crate::math::logsumexp;
use crate::model::{ParameterPoint, SimulatorModel};
use crate::rng::RngStream;
use crate::weights::{eval_log_weight, WeightFunction};

/// Bookkeeping counters for a finished chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChainStats {
    pub proposed: usize,
    pub accepted: usize,
    /// Proposals rejected through the prior's `-inf` path without touching
    /// the likelihood estimator.
    pub out_of_support: usize,
    /// Likelihood-estimator evaluations. Pseudo-marginal correctness keeps
    /// this at one per in-support proposal plus one for the initial state:
    /// the current state's estimate is recycled, never re-drawn.
    pub estimator_evals: usize,
}

/// Draws from one sampler run plus the per-draw log-target values.
#[derive(Debug, Clone)]
pub struct SampleChain {
    pub draws: Vec<ParameterPoint>,
    pub log_target_values: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed_record: (u64, u64),
    pub stats: ChainStats,
}

impl SampleChain {
    /// Post-processing view: drop a burn-in fraction, keep every `thin`-th
    /// draw. Defaults elsewhere are 20% burn-in, thin 1.
    pub fn thinned(&self, burn_in_fraction: f64, thin: usize) -> Vec<ParameterPoint> {
        let burn = ((self.draws.len() as f64) * burn_in_fraction.clamp(0.0, 0.95)) as usize;
        let step = thin.max(1);
        self.draws[burn..].iter().step_by(step).cloned().collect()
    }

    /// Serialize draws as CSV (`step,theta_1..theta_p,log_target`).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let dim = self.draws.first().map_or(0, |p| p.dim());
        let mut header = vec!["step".to_string()];
        header.extend((1..=dim).map(|d| format!("theta_{d}")));
        header.push("log_target".into());
        w.write_record(&header)?;
        for (i, p) in self.draws.iter().enumerate() {
            let mut record = vec![format!("{i}")];
            record.extend(p.values().iter().map(|v| format!("{v}")));
            record.push(format!("{}", self.log_target_values[i]));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// JSON sidecar with the acceptance rate, seed record and counters.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "acceptance_rate": self.acceptance_rate,
            "seed_record": { "seed": self.seed_record.0, "stream_id": self.seed_record.1 },
            "stats": self.stats,
            "draws": self.draws.len(),
        })
    }
}

/// Plain rejection ABC under the one-sided uniform kernel: keep prior
/// draws whose simulated discrepancy is at most the threshold.
pub fn rejection_abc(
    model: &SimulatorModel,
    weight: &WeightFunction,
    n_prior_draws: usize,
    stream: RngStream,
) -> Result<SampleChain> {
    let WeightFunction::UniformOneSided { h } = weight else {
        return Err(Error::InvalidArgument(format!(
            "rejection ABC requires the uniform-onesided weight, got {}",
            weight.family_name()
        )));
    };
    if n_prior_draws == 0 {
        return Err(Error::InvalidArgument("rejection ABC needs at least one draw".into()));
    }
    let mut rng = stream.rng();
    let mut draws = Vec::new();
    let mut log_targets = Vec::new();
    let mut min_discrepancy = f64::INFINITY;
    for _ in 0..n_prior_draws {
        let theta = model.sample_prior(&mut rng);
        let d = model.draw_discrepancy(&theta, &mut rng)?;
        min_discrepancy = min_discrepancy.min(d);
        if d <= *h {
            log_targets.push(model.prior_log_density(&theta));
            draws.push(theta);
        }
    }
    if draws.is_empty() {
        return Err(Error::ZeroAcceptance {
            proposed: n_prior_draws,
            min_discrepancy,
        });
    }
    let acceptance_rate = draws.len() as f64 / n_prior_draws as f64;
    let stats = ChainStats {
        proposed: n_prior_draws,
        accepted: draws.len(),
        out_of_support: 0,
        estimator_evals: n_prior_draws,
    };
    Ok(SampleChain {
        draws,
        log_target_values: log_targets,
        acceptance_rate,
        seed_record: (stream.seed, stream.stream_id),
        stats,
    })
}

fn check_proposal_sd(proposal_sd: &[f64], dim: usize) -> Result<()> {
    if proposal_sd.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "proposal sd has {} entries for a {dim}-dimensional parameter",
            proposal_sd.len()
        )));
    }
    if proposal_sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidArgument(
            "proposal standard deviations must all be positive".into(),
        ));
    }
    Ok(())
}

fn propose(current: &ParameterPoint, sd: &[f64], rng: &mut ChaCha8Rng) -> ParameterPoint {
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    ParameterPoint(
        current
            .values()
            .iter()
            .zip(sd)
            .map(|(x, s)| x + s * std_normal.sample(rng))
            .collect(),
    )
}

/// Unbiased log-likelihood estimate used by the pseudo-marginal chain.
fn abc_estimate(
    model: &SimulatorModel,
    weight: &WeightFunction,
    theta: &ParameterPoint,
    n_sim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut log_weights = Vec::with_capacity(n_sim);
    for _ in 0..n_sim {
        let d = model.draw_discrepancy(theta, rng)?;
        log_weights.push(eval_log_weight(weight, d)?);
    }
    let est = logsumexp(&log_weights) - (n_sim as f64).ln();
    if est.is_nan() {
        return Err(Error::Numerical("ABC likelihood estimate is NaN".into()));
    }
    Ok(est)
}

/// Pseudo-marginal ABC-MCMC: Metropolis-Hastings with an isotropic
/// Gaussian random walk where the intractable ABC likelihood is replaced
/// by its unbiased estimator. The current state's estimate is recycled
/// (never refreshed), which is what keeps the chain exact for the ABC
/// target.
///
/// Not offered for expected-discrepancy targets: there the unbiased
/// estimate is of the log-density, which breaks the pseudo-marginal
/// argument.
pub fn pm_abc_mcmc(
    model: &SimulatorModel,
    weight: &WeightFunction,
    n_sim_per_step: usize,
    n_steps: usize,
    proposal_sd: &[f64],
    stream: RngStream,
) -> Result<SampleChain> {
    if !matches!(
        weight,
        WeightFunction::UniformSymmetric { .. }
            | WeightFunction::UniformOneSided { .. }
            | WeightFunction::ExponentialSymmetric { .. }
            | WeightFunction::ExponentialOneSided { .. }
            | WeightFunction::Gaussian { .. }
    ) {
        return Err(Error::InvalidArgument(format!(
            "pseudo-marginal ABC-MCMC needs a bounded non-negative kernel \
             (uniform / exponential / gaussian families), got {}",
            weight.family_name()
        )));
    }
    if n_sim_per_step == 0 || n_steps == 0 {
        return Err(Error::InvalidArgument(
            "pm_abc_mcmc needs n_sim_per_step >= 1 and n_steps >= 1".into(),
        ));
    }
    check_proposal_sd(proposal_sd, model.dim())?;

    let mut rng = stream.rng();
    let mut stats = ChainStats::default();

    // initial state: a prior draw with a usable (finite) estimate
    let mut current = model.sample_prior(&mut rng);
    let mut current_prior = model.prior_log_density(&current);
    let mut current_est = abc_estimate(model, weight, &current, n_sim_per_step, &mut rng)?;
    stats.estimator_evals += 1;
    let mut attempts = 0;
    while current_est == f64::NEG_INFINITY {
        attempts += 1;
        if attempts > 1000 {
            return Err(Error::Numerical(
                "could not initialize pm_abc_mcmc: every prior draw had zero estimated \
                 likelihood (threshold too small?)"
                    .into(),
            ));
        }
        current = model.sample_prior(&mut rng);
        current_prior = model.prior_log_density(&current);
        current_est = abc_estimate(model, weight, &current, n_sim_per_step, &mut rng)?;
        stats.estimator_evals += 1;
    }

    let mut draws = Vec::with_capacity(n_steps);
    let mut log_targets = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        stats.proposed += 1;
        let candidate = propose(&current, proposal_sd, &mut rng);
        let cand_prior = model.prior_log_density(&candidate);
        if cand_prior == f64::NEG_INFINITY {
            stats.out_of_support += 1;
        } else {
            let cand_est = abc_estimate(model, weight, &candidate, n_sim_per_step, &mut rng)?;
            stats.estimator_evals += 1;
            let log_alpha = cand_prior + cand_est - current_prior - current_est;
            if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
                current = candidate;
                current_prior = cand_prior;
                current_est = cand_est;
                stats.accepted += 1;
            }
        }
        draws.push(current.clone());
        log_targets.push(current_prior + current_est);
    }
    let acceptance_rate = stats.accepted as f64 / stats.proposed as f64;
    Ok(SampleChain {
        draws,
        log_target_values: log_targets,
        acceptance_rate,
        seed_record: (stream.seed, stream.stream_id),
        stats,
    })
}

/// Metropolis-Hastings targeting `prior(theta) * exp(-loss(theta))` where
/// the loss is evaluated deterministically through a discrepancy field (no
/// fresh simulations while sampling). Closed-form ABC kinds use their loss
/// as-is; the expected-(squared-)discrepancy kinds scale the field mean by
/// `w_scale`.
pub fn surrogate_mh(
    model: &SimulatorModel,
    field: &GaussianDiscrepancyField,
    spec: &LossSpec,
    w_scale: f64,
    n_steps: usize,
    proposal_sd: &[f64],
    stream: RngStream,
) -> Result<SampleChain> {
    if !(spec.kind.needs_field()
        || matches!(
            spec.kind,
            LossKind::ExpectedDiscrepancy | LossKind::ExpectedSquaredDiscrepancy
        ))
    {
        return Err(Error::InvalidArgument(format!(
            "surrogate MH supports field-backed losses (cf_* or expected discrepancy), got {}",
            spec.kind.name()
        )));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("surrogate MH needs n_steps >= 1".into()));
    }
    check_proposal_sd(proposal_sd, model.dim())?;
    let spec = spec.clone().with_w_scale(w_scale);

    let log_target = |theta: &ParameterPoint| -> Result<f64> {
        let prior = model.prior_log_density(theta);
        if prior == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        // field-backed losses never consume randomness
        let scaled = evaluate_scaled_loss(model, &spec, Some(field), theta, RngStream::new(0, 0))?;
        if scaled.is_nan() {
            return Err(Error::Numerical("surrogate loss is NaN".into()));
        }
        Ok(prior - scaled)
    };

    let mut rng = stream.rng();
    let mut stats = ChainStats::default();
    let mut current = model.sample_prior(&mut rng);
    let mut current_lt = log_target(&current)?;
    stats.estimator_evals += 1;

    let mut draws = Vec::with_capacity(n_steps);
    let mut log_targets = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        stats.proposed += 1;
        let candidate = propose(&current, proposal_sd, &mut rng);
        if model.prior_log_density(&candidate) == f64::NEG_INFINITY {
            stats.out_of_support += 1;
        } else {
            let cand_lt = log_target(&candidate)?;
            stats.estimator_evals += 1;
            let log_alpha = cand_lt - current_lt;
            if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
                current = candidate;
                current_lt = cand_lt;
                stats.accepted += 1;
            }
        }
        draws.push(current.clone());
        log_targets.push(current_lt);
    }
    let acceptance_rate = stats.accepted as f64 / stats.proposed as f64;
    Ok(SampleChain {
        draws,
        log_target_values: log_targets,
        acceptance_rate,
        seed_record: (stream.seed, stream.stream_id),
        stats,
    })
}
