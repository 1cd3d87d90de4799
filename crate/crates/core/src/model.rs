//! Inference problem definition: parameter space, prior, simulator and
//! discrepancy, plus the built-in models used throughout the test suite.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::weights::MonotoneMap;

/// A point in parameter space (dimension fixed per problem).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint(pub Vec<f64>);

impl ParameterPoint {
    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Axis-aligned box in parameter space; the support of uniform priors and
/// the domain of posterior grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParameterBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidArgument(
                "parameter box bounds must be non-empty and of equal dimension".into(),
            ));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "parameter box requires finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &ParameterPoint) -> bool {
        theta.dim() == self.dim()
            && theta
                .values()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    /// Log-volume of the box; the normalizing constant of a uniform prior.
    pub fn log_volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).ln())
            .sum()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> ParameterPoint {
        ParameterPoint(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| rng.random_range(*lo..*hi))
                .collect(),
        )
    }
}

/// Observed or simulated data: a flat vector of reals (raw data or summary
/// statistics; any summarizing happens inside `simulate`/`discrepancy`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset(pub Vec<f64>);

impl Dataset {
    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Dataset {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

type PriorLogDensityFn = dyn Fn(&ParameterPoint) -> f64 + Send + Sync;
type PriorSamplerFn = dyn Fn(&mut ChaCha8Rng) -> ParameterPoint + Send + Sync;
type SimulateFn = dyn Fn(&ParameterPoint, &mut ChaCha8Rng) -> Dataset + Send + Sync;
type DiscrepancyFn = dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync;

/// The full inference problem: prior, stochastic forward simulator,
/// discrepancy function and the fixed observed data.
///
/// `simulate` is a pure function of the parameter and the generator state,
/// so identical [`RngStream`]s reproduce identical datasets. All fields are
/// immutable after construction; concurrent workers may share the model as
/// long as each owns a distinct stream.
#[derive(Clone)]
pub struct SimulatorModel {
    dim: usize,
    prior_log_density: Arc<PriorLogDensityFn>,
    prior_sampler: Arc<PriorSamplerFn>,
    simulate: Arc<SimulateFn>,
    discrepancy: Arc<DiscrepancyFn>,
    observed: Dataset,
}

impl SimulatorModel {
    pub fn new(
        dim: usize,
        prior_log_density: impl Fn(&ParameterPoint) -> f64 + Send + Sync + 'static,
        prior_sampler: impl Fn(&mut ChaCha8Rng) -> ParameterPoint + Send + Sync + 'static,
        simulate: impl Fn(&ParameterPoint, &mut ChaCha8Rng) -> Dataset + Send + Sync + 'static,
        discrepancy: impl Fn(&Dataset, &Dataset) -> f64 + Send + Sync + 'static,
        observed: Dataset,
    ) -> Self {
        Self {
            dim,
            prior_log_density: Arc::new(prior_log_density),
            prior_sampler: Arc::new(prior_sampler),
            simulate: Arc::new(simulate),
            discrepancy: Arc::new(discrepancy),
            observed,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Prior log-density; `-inf` outside the support (samplers reject
    /// through this path rather than erroring).
    pub fn prior_log_density(&self, theta: &ParameterPoint) -> f64 {
        (self.prior_log_density)(theta)
    }

    pub fn sample_prior(&self, rng: &mut ChaCha8Rng) -> ParameterPoint {
        (self.prior_sampler)(rng)
    }

    pub fn simulate(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng) -> Dataset {
        (self.simulate)(theta, rng)
    }

    pub fn discrepancy(&self, observed: &Dataset, simulated: &Dataset) -> f64 {
        (self.discrepancy)(observed, simulated)
    }

    pub fn observed(&self) -> &Dataset {
        &self.observed
    }

    /// Simulate once at `theta` and return the discrepancy to the observed
    /// data. Errors if the simulator produced a non-finite discrepancy.
    pub fn draw_discrepancy(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng) -> Result<f64> {
        let x = self.simulate(theta, rng);
        let d = self.discrepancy(&self.observed, &x);
        if !d.is_finite() {
            return Err(Error::NonFiniteDiscrepancy {
                value: d,
                parameter: theta.values().to_vec(),
            });
        }
        Ok(d)
    }

    /// Same model with the discrepancy replaced by `map(discrepancy)`.
    ///
    /// This is how transformed-discrepancy runs (e.g. `log Delta`) are set
    /// up; pair it with [`crate::weights::transform_weight`] to keep the
    /// target posterior unchanged where the theory says it should be.
    pub fn with_transformed_discrepancy(&self, map: MonotoneMap) -> Self {
        let inner = Arc::clone(&self.discrepancy);
        Self {
            discrepancy: Arc::new(move |o: &Dataset, s: &Dataset| map.forward(inner(o, s))),
            ..self.clone()
        }
    }
}

impl std::fmt::Debug for SimulatorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimulatorModel")
            .field("dim", &self.dim)
            .field("observed", &self.observed)
            .finish()
    }
}

/// Uniform prior over a box, as a `(log_density, sampler)` pair.
fn uniform_prior(
    support: ParameterBox,
) -> (
    impl Fn(&ParameterPoint) -> f64 + Send + Sync + 'static,
    impl Fn(&mut ChaCha8Rng) -> ParameterPoint + Send + Sync + 'static,
) {
    let log_density_box = support.clone();
    let neg_log_volume = -support.log_volume();
    let log_density = move |theta: &ParameterPoint| {
        if log_density_box.contains(theta) {
            neg_log_volume
        } else {
            f64::NEG_INFINITY
        }
    };
    let sampler = move |rng: &mut ChaCha8Rng| support.sample(rng);
    (log_density, sampler)
}

/// Parameters of the built-in heteroscedastic Gaussian model:
/// `x | theta ~ Normal(theta, noise_slope * theta + noise_floor)` with a
/// uniform prior on `[prior_lo, prior_hi]` and discrepancy `|x_o - x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Params {
    pub observed: f64,
    pub noise_slope: f64,
    pub noise_floor: f64,
    pub prior_lo: f64,
    pub prior_hi: f64,
}

impl Default for Example1Params {
    fn default() -> Self {
        Self {
            observed: 3.0,
            noise_slope: 0.2,
            noise_floor: 0.01,
            prior_lo: 0.0,
            prior_hi: 10.0,
        }
    }
}

impl Example1Params {
    /// Variance of the simulator output at `theta`.
    pub fn noise_variance(&self, theta: f64) -> f64 {
        self.noise_slope * theta + self.noise_floor
    }
}

/// The heteroscedastic Gaussian validation model with default parameters:
/// `x | theta ~ Normal(theta, 0.2 theta + 0.01)`, `theta ~ Uniform[0, 10]`,
/// `Delta(x_o, x) = |x_o - x|`, observed `x_o = 3`.
pub fn make_example1_model() -> SimulatorModel {
    make_example1_model_with(Example1Params::default())
}

pub fn make_example1_model_with(params: Example1Params) -> SimulatorModel {
    let support =
        ParameterBox::new(vec![params.prior_lo], vec![params.prior_hi]).expect("valid support");
    let (prior_log_density, prior_sampler) = uniform_prior(support);
    let simulate = move |theta: &ParameterPoint, rng: &mut ChaCha8Rng| {
        let t = theta.values()[0];
        let sd = params.noise_variance(t).max(0.0).sqrt();
        let x = Normal::new(t, sd).expect("valid normal").sample(rng);
        Dataset::scalar(x)
    };
    SimulatorModel::new(
        1,
        prior_log_density,
        prior_sampler,
        simulate,
        |obs: &Dataset, sim: &Dataset| (obs.values()[0] - sim.values()[0]).abs(),
        Dataset::scalar(params.observed),
    )
}

/// A noise-free model: `simulate` ignores the generator and always returns
/// `f(theta)`, so the discrepancy at each `theta` is a fixed number.
pub fn make_deterministic_model(
    f: impl Fn(&ParameterPoint) -> Dataset + Send + Sync + 'static,
    observed: Dataset,
    discrepancy: impl Fn(&Dataset, &Dataset) -> f64 + Send + Sync + 'static,
    support: ParameterBox,
) -> SimulatorModel {
    let dim = support.dim();
    let (prior_log_density, prior_sampler) = uniform_prior(support);
    SimulatorModel::new(
        dim,
        prior_log_density,
        prior_sampler,
        move |theta: &ParameterPoint, _rng: &mut ChaCha8Rng| f(theta),
        discrepancy,
        observed,
    )
}

/// Sample mean and unbiased sample variance of `n` i.i.d. discrepancy draws
/// at `theta`.
pub fn estimate_discrepancy_moments(
    model: &SimulatorModel,
    theta: &ParameterPoint,
    n: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "moment estimation needs n >= 2 draws".into(),
        ));
    }
    let mut rng = stream.rng();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let d = model.draw_discrepancy(theta, &mut rng)?;
        sum += d;
        sum_sq += d * d;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let variance = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok((mean, variance))
}
