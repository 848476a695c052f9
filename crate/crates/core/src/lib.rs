//! Constrained black-box optimization with augmented-Lagrangian Bayesian
//! optimization.
//!
//! The toolkit bundles:
//!
//! - [`problems`]: the sinusoid/circle toy problem with three objective
//!   variants, a slack-variable linearization transform, and the 1D
//!   counterexample where the maximum-free penalty provably fails;
//! - [`gp`]: squared-exponential Gaussian-process regression with
//!   deterministic hyperparameter fitting, plus Latin hypercube designs;
//! - [`lmc`]: a correlated multi-output constraint surrogate coupling
//!   independent score GPs through the economy-size SVD of the
//!   observations;
//! - [`auglag`]: both augmented-Lagrangian penalty variants, multiplier
//!   and penalty updates, a numerical KKT checker, and an exact outer
//!   loop separating the two variants;
//! - [`acquisition`]: Monte-Carlo expected improvement over the
//!   surrogate-composed AL, with a closed form for the maximum-free
//!   variant;
//! - [`strategies`]: the random, classic, and maximum-free optimization
//!   strategies with trajectory bookkeeping;
//! - [`harness`]: a multi-restart experiment runner with CSV persistence
//!   and SVG convergence plots.
//!
//! Everything is deterministic given the configured seeds: rerunning an
//! experiment reproduces its output files byte for byte.

pub mod acquisition;
pub mod auglag;
pub mod gp;
pub mod harness;
pub mod lmc;
mod opt;
pub mod problems;
pub mod strategies;

pub use auglag::{al_saddle_check, kkt_residual, AlState, AlVariant, KktReport};
pub use harness::{run_experiment, AggregateResult, ExperimentConfig};
pub use problems::{BoxDomain, ConstrainedProblem, Evaluation};
pub use strategies::{
    bo_auglag, bo_auglag_with_log, random_search, StrategyConfig, SurrogateKind, Trajectory,
};
