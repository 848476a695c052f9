//! Experiment runner: configuration, multi-restart execution with derived
//! seeds, CSV persistence, aggregation, and SVG plot emission.

mod csv;
mod plot;

pub use csv::{
    aggregate_to_csv, parse_aggregate_csv, parse_trajectory_csv, read_aggregate_csv,
    read_trajectory_csv, trajectory_to_csv, write_aggregate_csv, write_trajectory_csv,
};
pub use plot::{emit_plot, render_svg, PlotSeries};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auglag::AlVariant;
use crate::problems::{problem_from_id, ProblemError};
use crate::strategies::{
    bo_auglag_with_log, random_search, StrategyConfig, StrategyError, SurrogateKind,
    SurrogateLogEntry, Trajectory,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Problem(_) => 2,
            HarnessError::Strategy(StrategyError::InvalidConfig(_)) => 2,
            HarnessError::Strategy(StrategyError::Problem(_)) => 2,
            _ => 3,
        }
    }
}

fn default_problem() -> String {
    "v2".into()
}
fn default_strategy() -> String {
    "withmax".into()
}
fn default_surrogate() -> String {
    "indep".into()
}
fn default_restarts() -> usize {
    1
}
fn default_n_init() -> usize {
    10
}
fn default_budget() -> usize {
    110
}
fn default_candidate_count() -> usize {
    200
}
fn default_mc_draws() -> usize {
    1000
}
fn default_rho0() -> f64 {
    0.5
}
fn default_jobs() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Flat experiment configuration, readable from JSON with CLI overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_problem")]
    pub problem: String,
    /// "random", "nomax", or "withmax".
    #[serde(default = "default_strategy")]
    pub strategy: String,
    /// "indep" or "lmc".
    #[serde(default = "default_surrogate")]
    pub surrogate: String,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Total evaluations per restart.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    /// Acquisition iterations; defaults to `budget - n_init`.
    #[serde(default)]
    pub n_iter: Option<usize>,
    #[serde(default = "default_candidate_count")]
    pub candidate_count: usize,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    #[serde(default)]
    pub lambda0: Option<Vec<f64>>,
    #[serde(default = "default_rho0")]
    pub rho0: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults are total")
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{path:?}: {e}")))
    }

    fn variant(&self) -> Result<Option<AlVariant>, HarnessError> {
        match self.strategy.as_str() {
            "random" => Ok(None),
            "nomax" => Ok(Some(AlVariant::NoMax)),
            "withmax" => Ok(Some(AlVariant::WithMax)),
            other => Err(HarnessError::Config(format!(
                "unknown strategy id {other:?} (expected random, nomax, or withmax)"
            ))),
        }
    }

    fn strategy_config(&self, seed: u64) -> Result<Option<StrategyConfig>, HarnessError> {
        let Some(variant) = self.variant()? else {
            return Ok(None);
        };
        let n_iter = self.n_iter.unwrap_or_else(|| self.budget.saturating_sub(self.n_init));
        Ok(Some(StrategyConfig {
            n_init: self.n_init,
            n_iter,
            budget: self.budget,
            candidate_count: self.candidate_count,
            mc_draws: self.mc_draws,
            surrogate: SurrogateKind::from_id(&self.surrogate)?,
            variant,
            lambda0: self.lambda0.clone(),
            rho0: self.rho0,
            seed,
        }))
    }

    /// File stem shared by this experiment's outputs.
    pub fn stem(&self) -> String {
        match self.strategy.as_str() {
            "random" => format!("{}_random", self.problem),
            _ => format!("{}_{}_{}", self.problem, self.strategy, self.surrogate),
        }
    }
}

/// Across-restart aggregate of best-feasible trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    /// Per-evaluation mean of best-feasible over included restarts;
    /// `None` until every included restart has found a feasible point.
    pub mean_trajectory: Vec<Option<f64>>,
    pub stderr_trajectory: Vec<Option<f64>>,
    pub final_mean: f64,
    pub final_stderr: f64,
    /// Restarts that found at least one feasible point.
    pub n_included: usize,
    /// Restarts excluded from the means for never becoming feasible.
    pub n_excluded: usize,
}

/// Aggregate trajectories: restarts that never found a feasible point are
/// excluded (and tallied); the mean at evaluation k is defined once every
/// included restart has a best-feasible value there.
pub fn aggregate(trajectories: &[Trajectory]) -> Result<AggregateResult, HarnessError> {
    if trajectories.is_empty() {
        return Err(HarnessError::Runtime("no trajectories to aggregate".into()));
    }
    let budget = trajectories[0].len();
    if trajectories.iter().any(|t| t.len() != budget) || budget == 0 {
        return Err(HarnessError::Runtime(
            "trajectories must be non-empty and of equal length".into(),
        ));
    }
    let included: Vec<&Trajectory> = trajectories
        .iter()
        .filter(|t| t.final_best_feasible().is_some())
        .collect();
    let n_excluded = trajectories.len() - included.len();
    if included.is_empty() {
        return Err(HarnessError::Runtime(
            "every restart failed to find a feasible point".into(),
        ));
    }

    let mut mean_trajectory = Vec::with_capacity(budget);
    let mut stderr_trajectory = Vec::with_capacity(budget);
    for k in 0..budget {
        let values: Vec<f64> = included
            .iter()
            .filter_map(|t| t.best_feasible()[k])
            .collect();
        if values.len() == included.len() {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let stderr = if values.len() > 1 {
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            mean_trajectory.push(Some(mean));
            stderr_trajectory.push(Some(stderr));
        } else {
            mean_trajectory.push(None);
            stderr_trajectory.push(None);
        }
    }
    let final_mean = mean_trajectory
        .last()
        .copied()
        .flatten()
        .expect("included restarts all have final values");
    let final_stderr = stderr_trajectory.last().copied().flatten().unwrap_or(0.0);
    Ok(AggregateResult {
        mean_trajectory,
        stderr_trajectory,
        final_mean,
        final_stderr,
        n_included: included.len(),
        n_excluded,
    })
}

fn run_restart_logged(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(Trajectory, Option<Vec<SurrogateLogEntry>>), HarnessError> {
    let p = problem_from_id(&cfg.problem)?;
    match cfg.strategy_config(seed)? {
        None => Ok((random_search(&p, cfg.budget, seed), None)),
        Some(sc) => {
            let (t, log) = bo_auglag_with_log(&p, &sc)?;
            Ok((t, Some(log)))
        }
    }
}

/// Run one restart of the configured strategy with the given seed.
pub fn run_restart(cfg: &ExperimentConfig, seed: u64) -> Result<Trajectory, HarnessError> {
    run_restart_logged(cfg, seed).map(|(t, _)| t)
}

/// Execute all restarts (seeded `base_seed + index`), write one CSV per
/// restart (plus a surrogate-hyperparameter JSON log for BO strategies)
/// and the aggregate CSV, and return the aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult, HarnessError> {
    if cfg.restarts == 0 {
        return Err(HarnessError::Config("restarts must be at least 1".into()));
    }
    // Fail fast on bad identifiers before any work.
    problem_from_id(&cfg.problem)?;
    cfg.strategy_config(cfg.seed)?;
    std::fs::create_dir_all(&cfg.output_dir)?;

    type RestartOutput = (Trajectory, Option<Vec<SurrogateLogEntry>>);
    let run_all = || -> Result<Vec<RestartOutput>, HarnessError> {
        use rayon::prelude::*;
        (0..cfg.restarts)
            .into_par_iter()
            .map(|i| run_restart_logged(cfg, cfg.seed + i as u64))
            .collect()
    };
    let outputs = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        pool.install(run_all)?
    } else {
        (0..cfg.restarts)
            .map(|i| run_restart_logged(cfg, cfg.seed + i as u64))
            .collect::<Result<Vec<_>, _>>()?
    };

    let stem = cfg.stem();
    let mut trajectories = Vec::with_capacity(outputs.len());
    for (i, (t, log)) in outputs.into_iter().enumerate() {
        write_trajectory_csv(i, &t, &cfg.output_dir.join(format!("{stem}_r{i:04}.csv")))?;
        if let Some(log) = log {
            let text = serde_json::to_string_pretty(&log)
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            std::fs::write(
                cfg.output_dir.join(format!("{stem}_r{i:04}_surrogates.json")),
                text,
            )?;
        }
        trajectories.push(t);
    }
    let agg = aggregate(&trajectories)?;
    write_aggregate_csv(&agg, &cfg.output_dir.join(format!("{stem}_aggregate.csv")))?;
    Ok(agg)
}
