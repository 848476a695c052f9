//! The three optimization strategies under comparison: uniform random
//! search and the augmented-Lagrangian Bayesian-optimization loop in its
//! classic and maximum-free variants, with shared trajectory bookkeeping.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{
    select_next, AcquisitionError, ConstraintSurrogate, ObjectiveModel, SurrogateBundle,
};
use crate::auglag::{AlState, AlVariant, AuglagError};
use crate::gp::{self, GpError};
use crate::lmc::{lmc_fit, LmcError};
use crate::problems::{ConstrainedProblem, Evaluation, ProblemError};

/// Minimum decrease of the best feasible objective that counts as progress
/// for the penalty-parameter update.
pub const IMPROVEMENT_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("invalid strategy configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Lmc(#[from] LmcError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Auglag(#[from] AuglagError),
}

/// Multipliers and penalty parameter recorded alongside an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlSnapshot {
    pub lambda: Vec<f64>,
    pub rho: f64,
}

impl From<&AlState> for AlSnapshot {
    fn from(s: &AlState) -> Self {
        Self {
            lambda: s.lambda().to_vec(),
            rho: s.rho(),
        }
    }
}

/// Ordered record of one optimization run: every evaluation, the running
/// best feasible objective, and the AL state under which each point was
/// selected (absent for design/random points).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    evaluations: Vec<Evaluation>,
    best_feasible: Vec<Option<f64>>,
    al_states: Vec<Option<AlSnapshot>>,
}

impl Trajectory {
    pub fn push(&mut self, eval: Evaluation, state: Option<AlSnapshot>) {
        let prev = self.best_feasible.last().copied().flatten();
        let next = if eval.feasible {
            Some(prev.map_or(eval.f, |b| b.min(eval.f)))
        } else {
            prev
        };
        self.best_feasible.push(next);
        self.al_states.push(state);
        self.evaluations.push(eval);
    }

    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        &self.evaluations
    }

    pub fn al_states(&self) -> &[Option<AlSnapshot>] {
        &self.al_states
    }

    /// Running minima of the objective over feasible evaluations; entry k
    /// covers the first k+1 evaluations and is `None` until the first
    /// feasible point.
    pub fn best_feasible(&self) -> &[Option<f64>] {
        &self.best_feasible
    }

    /// Best feasible objective among the first `at_eval` evaluations.
    pub fn best_feasible_value(&self, at_eval: usize) -> Result<Option<f64>, StrategyError> {
        if at_eval > self.len() {
            return Err(StrategyError::InvalidConfig(format!(
                "at_eval {} exceeds trajectory length {}",
                at_eval,
                self.len()
            )));
        }
        Ok(if at_eval == 0 {
            None
        } else {
            self.best_feasible[at_eval - 1]
        })
    }

    pub fn final_best_feasible(&self) -> Option<f64> {
        self.best_feasible.last().copied().flatten()
    }
}

/// Per-iteration surrogate diagnostics for the JSON experiment log: the
/// fitted hyperparameters (one entry per constraint GP, or per score GP
/// for the coupled model) and the coupling matrix when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateLogEntry {
    pub iteration: usize,
    pub models: Vec<crate::gp::GpHyperparameters>,
    /// Row-major coupling matrix; `None` for independent surrogates.
    pub coupling: Option<Vec<Vec<f64>>>,
}

/// Which constraint surrogate the BO loop fits each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurrogateKind {
    #[serde(rename = "indep")]
    Independent,
    Lmc,
}

impl SurrogateKind {
    pub fn from_id(id: &str) -> Result<Self, StrategyError> {
        match id {
            "indep" => Ok(Self::Independent),
            "lmc" => Ok(Self::Lmc),
            other => Err(StrategyError::InvalidConfig(format!(
                "unknown surrogate id {other:?} (expected \"indep\" or \"lmc\")"
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Independent => "indep",
            Self::Lmc => "lmc",
        }
    }
}

/// Configuration of one BO run. `budget` must equal `n_init + n_iter`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub n_init: usize,
    pub n_iter: usize,
    pub budget: usize,
    pub candidate_count: usize,
    pub mc_draws: usize,
    pub surrogate: SurrogateKind,
    pub variant: AlVariant,
    /// Initial multipliers; `None` means zeros.
    pub lambda0: Option<Vec<f64>>,
    pub rho0: f64,
    pub seed: u64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            n_init: 10,
            n_iter: 100,
            budget: 110,
            candidate_count: 200,
            mc_draws: 1000,
            surrogate: SurrogateKind::Independent,
            variant: AlVariant::WithMax,
            lambda0: None,
            rho0: 0.5,
            seed: 0,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self, p: &ConstrainedProblem) -> Result<(), StrategyError> {
        if self.n_init + self.n_iter != self.budget {
            return Err(StrategyError::InvalidConfig(format!(
                "budget {} must equal n_init {} + n_iter {}",
                self.budget, self.n_init, self.n_iter
            )));
        }
        if self.n_init < p.dim() + 1 {
            return Err(StrategyError::InvalidConfig(format!(
                "n_init {} too small for dimension {} (need at least d+1)",
                self.n_init,
                p.dim()
            )));
        }
        if self.candidate_count == 0 || self.mc_draws == 0 {
            return Err(StrategyError::InvalidConfig(
                "candidate_count and mc_draws must be positive".into(),
            ));
        }
        if !self.rho0.is_finite() || self.rho0 <= 0.0 {
            return Err(StrategyError::InvalidConfig(format!(
                "rho0 must be positive, got {}",
                self.rho0
            )));
        }
        if let Some(l) = &self.lambda0 {
            if l.len() != p.n_constraints() {
                return Err(StrategyError::InvalidConfig(format!(
                    "lambda0 has {} entries for {} constraints",
                    l.len(),
                    p.n_constraints()
                )));
            }
        }
        Ok(())
    }
}

/// Named sub-streams derived from one run seed (splitmix64 mixing), so the
/// initial design, each candidate set, and each Monte-Carlo scoring pass
/// get independent reproducible randomness.
pub(crate) fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_INIT: u64 = 1;
const STREAM_CANDIDATES: u64 = 2;
const STREAM_MC: u64 = 3;

/// Uniform random search: `budget` i.i.d. draws over the box. A run that
/// never hits the feasible region leaves `best_feasible` absent.
pub fn random_search(p: &ConstrainedProblem, budget: usize, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.dim();
    let (lower, upper) = (p.domain().lower().to_vec(), p.domain().upper().to_vec());
    let mut t = Trajectory::default();
    let mut x = vec![0.0; d];
    for _ in 0..budget {
        for j in 0..d {
            x[j] = lower[j] + rng.gen::<f64>() * (upper[j] - lower[j]);
        }
        let eval = p.evaluate(&x).expect("uniform draw lies in the domain");
        t.push(eval, None);
    }
    t
}

fn fit_constraint_surrogate(
    kind: SurrogateKind,
    x: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<ConstraintSurrogate, StrategyError> {
    match kind {
        SurrogateKind::Independent => {
            let gps = (0..c.ncols())
                .map(|j| gp::fit(x, &c.column(j).into_owned()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ConstraintSurrogate::Independent(gps))
        }
        SurrogateKind::Lmc => Ok(ConstraintSurrogate::Coupled(lmc_fit(x, c)?)),
    }
}

fn log_entry(iteration: usize, surrogate: &ConstraintSurrogate) -> SurrogateLogEntry {
    match surrogate {
        ConstraintSurrogate::Independent(gps) => SurrogateLogEntry {
            iteration,
            models: gps.iter().map(|g| g.hyperparameters()).collect(),
            coupling: None,
        },
        ConstraintSurrogate::Coupled(m) => {
            let a = m.coupling();
            SurrogateLogEntry {
                iteration,
                models: m.score_gps().iter().map(|g| g.hyperparameters()).collect(),
                coupling: Some(
                    (0..a.nrows())
                        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
                        .collect(),
                ),
            }
        }
    }
}

/// Augmented-Lagrangian Bayesian optimization: a Latin hypercube design
/// followed by `n_iter` rounds of surrogate refit, expected-improvement
/// candidate selection, evaluation, and multiplier/penalty updates.
///
/// Progress for the penalty update means the new point is feasible and
/// improved the best feasible objective by at least [`IMPROVEMENT_EPS`]
/// (finding the first feasible point counts); any other outcome is
/// stagnation and halves `rho`.
pub fn bo_auglag(p: &ConstrainedProblem, cfg: &StrategyConfig) -> Result<Trajectory, StrategyError> {
    bo_auglag_with_log(p, cfg).map(|(t, _)| t)
}

/// [`bo_auglag`] plus the per-iteration surrogate log (fitted
/// hyperparameters, and the coupling matrix for the coupled model).
pub fn bo_auglag_with_log(
    p: &ConstrainedProblem,
    cfg: &StrategyConfig,
) -> Result<(Trajectory, Vec<SurrogateLogEntry>), StrategyError> {
    cfg.validate(p)?;
    let d = p.dim();
    let m = p.n_constraints();
    let domain = p.domain();

    let mut state = AlState::new(
        cfg.lambda0.clone().unwrap_or_else(|| vec![0.0; m]),
        cfg.rho0,
        cfg.variant,
    )?;

    let mut t = Trajectory::default();

    // Initial space-filling design.
    let design = gp::lhs_sample(cfg.n_init, d, derive_seed(cfg.seed, STREAM_INIT, 0))?;
    for i in 0..cfg.n_init {
        let u: Vec<f64> = (0..d).map(|j| design[(i, j)]).collect();
        let x = domain.from_unit(&u);
        t.push(p.evaluate(&x)?, None);
    }

    let objective_fn: crate::problems::ScalarFn = std::sync::Arc::new({
        let p = p.clone();
        move |x: &[f64]| p.objective(x)
    });

    let mut surrogate_log = Vec::with_capacity(cfg.n_iter);
    for iter in 0..cfg.n_iter {
        let n = t.len();
        let x_train = DMatrix::from_fn(n, d, |i, j| t.evaluations()[i].x[j]);
        let c_train = DMatrix::from_fn(n, m, |i, j| t.evaluations()[i].c[j]);
        let constraints = fit_constraint_surrogate(cfg.surrogate, &x_train, &c_train)?;
        surrogate_log.push(log_entry(iter, &constraints));
        let bundle = SurrogateBundle {
            constraints,
            objective: ObjectiveModel::Known(objective_fn.clone()),
        };

        // The AL surface moves with (lambda, rho), so the incumbent is
        // recomputed from scratch each iteration.
        let best_al = t
            .evaluations()
            .iter()
            .map(|e| state.value(e.f, &e.c))
            .fold(f64::INFINITY, f64::min);

        let unit = gp::lhs_sample(
            cfg.candidate_count,
            d,
            derive_seed(cfg.seed, STREAM_CANDIDATES, iter as u64),
        )?;
        let candidates = DMatrix::from_fn(cfg.candidate_count, d, |i, j| {
            domain.lower()[j] + unit[(i, j)] * (domain.upper()[j] - domain.lower()[j])
        });

        let (x_next, _score) = select_next(
            &bundle,
            &state,
            best_al,
            &candidates,
            cfg.mc_draws,
            derive_seed(cfg.seed, STREAM_MC, iter as u64),
        )?;

        let previous_best = t.final_best_feasible();
        let eval = p.evaluate(&x_next)?;
        let snapshot = AlSnapshot::from(&state);
        let feasible = eval.feasible;
        let f_new = eval.f;
        t.push(eval, Some(snapshot));

        let improved = feasible
            && match previous_best {
                None => true,
                Some(b) => f_new <= b - IMPROVEMENT_EPS,
            };
        state = state.update_multipliers(&t.evaluations()[t.len() - 1].c);
        state = state.update_rho(improved);
    }

    debug_assert_eq!(t.len(), cfg.budget);
    Ok((t, surrogate_log))
}

/// Strategy identifiers accepted by the harness CLI.
pub const STRATEGY_IDS: [&str; 3] = ["random", "nomax", "withmax"];
