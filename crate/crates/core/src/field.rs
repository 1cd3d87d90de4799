//! Gaussian discrepancy fields: `theta -> (m(theta), v(theta))` under the
//! modeling assumption that the (possibly transformed) discrepancy is
//! Gaussian at every parameter value.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::math::{folded_normal_mean, folded_normal_variance};
use crate::model::{Example1Params, ParameterPoint, SimulatorModel};
use crate::rng::RngStream;

/// Where the field's moment functions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSource {
    Analytic,
    MonteCarlo,
    Surrogate,
}

/// Scale on which the Gaussian assumption is placed. With `Log`, the field
/// models `log Delta` and the original discrepancy is log-normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiscrepancyScale {
    #[default]
    Identity,
    Log,
}

type MomentFn = dyn Fn(&ParameterPoint) -> f64 + Send + Sync;

/// The pair of moment functions behind every closed-form loss.
///
/// `mean`/`variance` return the Gaussian moments on the field's scale;
/// negative means are allowed by design (the Gaussian model is an
/// approximation whose lower tail is usually negligible). Variances are
/// clamped below at `1e-12` and each clamp increments a warning counter.
#[derive(Clone)]
pub struct GaussianDiscrepancyField {
    mean_fn: Arc<MomentFn>,
    var_fn: Arc<MomentFn>,
    source: FieldSource,
    scale: DiscrepancyScale,
    constant_variance: Option<f64>,
    clamp_count: Arc<AtomicU64>,
}

pub const VARIANCE_FLOOR: f64 = 1e-12;

impl GaussianDiscrepancyField {
    pub fn from_functions(
        mean_fn: impl Fn(&ParameterPoint) -> f64 + Send + Sync + 'static,
        var_fn: impl Fn(&ParameterPoint) -> f64 + Send + Sync + 'static,
        source: FieldSource,
    ) -> Self {
        Self {
            mean_fn: Arc::new(mean_fn),
            var_fn: Arc::new(var_fn),
            source,
            scale: DiscrepancyScale::Identity,
            constant_variance: None,
            clamp_count: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Field with variance constant across the parameter space.
    pub fn with_constant_variance(
        mean_fn: impl Fn(&ParameterPoint) -> f64 + Send + Sync + 'static,
        variance: f64,
        source: FieldSource,
    ) -> Self {
        let v = variance.max(VARIANCE_FLOOR);
        let mut field = Self::from_functions(mean_fn, move |_| v, source);
        field.constant_variance = Some(v);
        field
    }

    pub fn with_scale(mut self, scale: DiscrepancyScale) -> Self {
        self.scale = scale;
        self
    }

    /// Gaussian mean `m(theta)` on the field's scale.
    pub fn mean(&self, theta: &ParameterPoint) -> f64 {
        (self.mean_fn)(theta)
    }

    /// Gaussian variance `v(theta)` on the field's scale, floored at
    /// `1e-12` (surrogate fields can dip to zero).
    pub fn variance(&self, theta: &ParameterPoint) -> f64 {
        let v = (self.var_fn)(theta);
        if v < VARIANCE_FLOOR {
            self.clamp_count.fetch_add(1, Ordering::Relaxed);
            VARIANCE_FLOOR
        } else {
            v
        }
    }

    /// Expected discrepancy on the original scale: `m(theta)` for identity
    /// fields, the log-normal mean `exp(m + v/2)` for log-scale fields.
    pub fn expected_discrepancy(&self, theta: &ParameterPoint) -> f64 {
        match self.scale {
            DiscrepancyScale::Identity => self.mean(theta),
            DiscrepancyScale::Log => (self.mean(theta) + 0.5 * self.variance(theta)).exp(),
        }
    }

    /// Expected squared discrepancy `E(Delta^2) = v + m^2` (identity scale).
    pub fn expected_squared_discrepancy(&self, theta: &ParameterPoint) -> f64 {
        match self.scale {
            DiscrepancyScale::Identity => {
                let m = self.mean(theta);
                self.variance(theta) + m * m
            }
            DiscrepancyScale::Log => (2.0 * self.mean(theta) + 2.0 * self.variance(theta)).exp(),
        }
    }

    pub fn source(&self) -> FieldSource {
        self.source
    }

    pub fn scale(&self) -> DiscrepancyScale {
        self.scale
    }

    /// The constant variance `sigma^2_Delta`, where the field has one.
    pub fn constant_variance(&self) -> Option<f64> {
        self.constant_variance
    }

    /// Number of variance evaluations that hit the floor so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count.load(Ordering::Relaxed)
    }

    /// Tabulated Monte Carlo field: moments estimated with `n_sim` draws at
    /// each of `points` (stream id offset by point index), then looked up
    /// by nearest tabulated point. Intended for grid evaluations where the
    /// query points are exactly the tabulation points.
    pub fn monte_carlo_tabulated(
        model: &SimulatorModel,
        points: &[ParameterPoint],
        n_sim: usize,
        stream: RngStream,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "monte carlo field needs at least one tabulation point".into(),
            ));
        }
        use rayon::prelude::*;
        let moments: Result<Vec<(f64, f64)>> = points
            .par_iter()
            .enumerate()
            .map(|(i, theta)| {
                crate::model::estimate_discrepancy_moments(
                    model,
                    theta,
                    n_sim,
                    stream.offset(i as u64),
                )
            })
            .collect();
        let moments = moments?;
        let table: Arc<Vec<(Vec<f64>, f64, f64)>> = Arc::new(
            points
                .iter()
                .zip(&moments)
                .map(|(p, &(m, v))| (p.values().to_vec(), m, v))
                .collect(),
        );

        fn nearest(table: &[(Vec<f64>, f64, f64)], theta: &ParameterPoint) -> (f64, f64) {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for (p, m, v) in table {
                let d2: f64 = p
                    .iter()
                    .zip(theta.values())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 < best.0 {
                    best = (d2, *m, *v);
                }
            }
            (best.1, best.2)
        }

        let t_mean = Arc::clone(&table);
        let t_var = Arc::clone(&table);
        Ok(Self::from_functions(
            move |theta| nearest(&t_mean, theta).0,
            move |theta| nearest(&t_var, theta).1,
            FieldSource::MonteCarlo,
        ))
    }
}

impl std::fmt::Debug for GaussianDiscrepancyField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianDiscrepancyField")
            .field("source", &self.source)
            .field("scale", &self.scale)
            .field("constant_variance", &self.constant_variance)
            .finish()
    }
}

/// Exact moment field of the built-in heteroscedastic Gaussian model: the
/// discrepancy `|x_o - x|` at `theta` is folded normal with location
/// `x_o - theta` and scale `sqrt(noise_variance(theta))`.
pub fn example1_analytic_field(params: Example1Params) -> GaussianDiscrepancyField {
    let mean_params = params;
    let var_params = params;
    GaussianDiscrepancyField::from_functions(
        move |theta: &ParameterPoint| {
            let t = theta.values()[0];
            let sigma = mean_params.noise_variance(t).max(0.0).sqrt();
            folded_normal_mean(mean_params.observed - t, sigma)
        },
        move |theta: &ParameterPoint| {
            let t = theta.values()[0];
            let sigma = var_params.noise_variance(t).max(0.0).sqrt();
            folded_normal_variance(var_params.observed - t, sigma)
        },
        FieldSource::Analytic,
    )
}
