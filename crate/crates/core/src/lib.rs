//! Simulation-based Bayesian inference with discrepancies instead of
//! likelihoods.
//!
//! The crate implements two families of approximate posteriors over the
//! parameters of a stochastic simulator and the machinery to show when
//! they agree:
//!
//! * **ABC**: the likelihood is replaced by the expected kernel weight of
//!   the discrepancy between simulated and observed data,
//!   `E K_h(Delta(x_o, x))`.
//! * **Generalized (Gibbs) posteriors**: the prior is updated through
//!   `exp(-w * loss)` with the expected discrepancy `E Delta` (or its
//!   square) as the loss.
//!
//! When the discrepancy is modeled as Gaussian at each parameter value,
//! both reduce to closed forms ([`loss::cf_loss_uniform`],
//! [`loss::cf_loss_exponential`], [`loss::cf_loss_gaussian`]) that expose
//! the exact correspondences between kernel choices and loss scalings; the
//! [`calibration`] module turns those correspondences into usable rules
//! (uniform/Exponential kernel matching, discrepancy standardization,
//! selection of the scaling constant `w`).
//!
//! Posteriors are evaluated exactly (up to quadrature) on [`grid`]s,
//! sampled with the [`samplers`] (rejection ABC, pseudo-marginal ABC-MCMC,
//! surrogate Metropolis-Hastings), or driven through Gaussian-process
//! [`surrogate`] models of the discrepancy surface. The [`cli`] module and
//! the `abc-gbi` binary run declarative JSON experiment configs; see the
//! crate examples for library-level walkthroughs of each capability.

pub mod calibration;
pub mod cli;
pub mod error;
pub mod field;
pub mod grid;
pub mod loss;
pub mod math;
pub mod model;
pub mod rng;
pub mod samplers;
pub mod surrogate;
pub mod weights;

pub use error::{Error, Result};
pub use field::{example1_analytic_field, DiscrepancyScale, FieldSource, GaussianDiscrepancyField};
pub use loss::{LossKind, LossSpec};
pub use model::{
    make_deterministic_model, make_example1_model, Dataset, Example1Params, ParameterBox,
    ParameterPoint, SimulatorModel,
};
pub use rng::RngStream;
pub use weights::{MonotoneMap, WeightFunction};
