//! Acquisition functions over surrogate-composed augmented-Lagrangian
//! values: Monte-Carlo expected improvement (either penalty variant) and
//! the closed-form expected AL available for the maximum-free variant.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::auglag::{AlState, AlVariant};
use crate::gp::{GpError, GpModel};
use crate::lmc::{LmcError, LmcModel};
use crate::problems::ScalarFn;

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("need at least one Monte-Carlo draw")]
    NoDraws,
    #[error("closed-form expected AL exists only for the maximum-free variant")]
    VariantHasNoClosedForm,
    #[error("closed-form expected AL needs a known objective")]
    ObjectiveNotKnown,
    #[error("{got} constraint models for {expected} multipliers")]
    SurrogateMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Lmc(#[from] LmcError),
}

/// Constraint surrogate: one GP per constraint, or the coupled model.
pub enum ConstraintSurrogate {
    Independent(Vec<GpModel>),
    Coupled(LmcModel),
}

impl ConstraintSurrogate {
    pub fn n_outputs(&self) -> usize {
        match self {
            Self::Independent(gps) => gps.len(),
            Self::Coupled(m) => m.n_outputs(),
        }
    }
}

/// Objective model: the toy objectives are cheap and analytic, so the
/// default is the known function; a GP emulator is supported for problems
/// where the objective is also a black box.
pub enum ObjectiveModel {
    Known(ScalarFn),
    Emulated(GpModel),
}

/// Everything the acquisition needs to score a candidate.
pub struct SurrogateBundle {
    pub constraints: ConstraintSurrogate,
    pub objective: ObjectiveModel,
}

impl SurrogateBundle {
    pub fn n_constraints(&self) -> usize {
        self.constraints.n_outputs()
    }
}

/// Gaussian description of the constraint draw at one candidate: either
/// per-output moments (independent) or score moments plus the coupling.
enum DrawSpec<'a> {
    Independent { mean: Vec<f64>, sd: Vec<f64> },
    Coupled { mean: Vec<f64>, sd: Vec<f64>, a: &'a DMatrix<f64> },
}

impl DrawSpec<'_> {
    fn n_scores(&self) -> usize {
        match self {
            DrawSpec::Independent { mean, .. } => mean.len(),
            DrawSpec::Coupled { mean, .. } => mean.len(),
        }
    }

    /// Map one row of standard normals to a constraint draw.
    fn realize(&self, z: &[f64], out: &mut [f64]) {
        match self {
            DrawSpec::Independent { mean, sd } => {
                for i in 0..mean.len() {
                    out[i] = mean[i] + sd[i] * z[i];
                }
            }
            DrawSpec::Coupled { mean, sd, a } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut v = 0.0;
                    for j in 0..mean.len() {
                        v += a[(i, j)] * (mean[j] + sd[j] * z[j]);
                    }
                    *o = v;
                }
            }
        }
    }
}

fn draw_spec<'a>(b: &'a SurrogateBundle, x: &[f64]) -> Result<DrawSpec<'a>, AcquisitionError> {
    match &b.constraints {
        ConstraintSurrogate::Independent(gps) => {
            let mut mean = Vec::with_capacity(gps.len());
            let mut sd = Vec::with_capacity(gps.len());
            for g in gps {
                let p = g.predict(x)?;
                mean.push(p.mean);
                sd.push(p.variance.sqrt());
            }
            Ok(DrawSpec::Independent { mean, sd })
        }
        ConstraintSurrogate::Coupled(m) => {
            let mut mean = Vec::with_capacity(m.score_gps().len());
            let mut sd = Vec::with_capacity(m.score_gps().len());
            for g in m.score_gps() {
                let p = g.predict(x)?;
                mean.push(p.mean);
                sd.push(p.variance.sqrt());
            }
            Ok(DrawSpec::Coupled { mean, sd, a: m.coupling() })
        }
    }
}

fn objective_moments(b: &SurrogateBundle, x: &[f64]) -> Result<(f64, f64), AcquisitionError> {
    match &b.objective {
        ObjectiveModel::Known(f) => Ok((f(x), 0.0)),
        ObjectiveModel::Emulated(g) => {
            let p = g.predict(x)?;
            Ok((p.mean, p.variance.sqrt()))
        }
    }
}

/// Standard normal draw matrix: `k` rows of `cols` independent values.
fn normal_draws(k: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(k, cols, |_, _| StandardNormal.sample(&mut rng))
}

fn ei_with_draws(
    b: &SurrogateBundle,
    x: &[f64],
    s: &AlState,
    best_al: f64,
    z: &DMatrix<f64>,
) -> Result<f64, AcquisitionError> {
    let m = b.n_constraints();
    if s.lambda().len() != m {
        return Err(AcquisitionError::SurrogateMismatch {
            expected: s.lambda().len(),
            got: m,
        });
    }
    let spec = draw_spec(b, x)?;
    let (f_mean, f_sd) = objective_moments(b, x)?;
    let n_scores = spec.n_scores();

    let mut c = vec![0.0; m];
    let mut zrow = vec![0.0; n_scores];
    let mut total = 0.0;
    let k = z.nrows();
    for row in 0..k {
        for j in 0..n_scores {
            zrow[j] = z[(row, j)];
        }
        spec.realize(&zrow, &mut c);
        let f_draw = f_mean + f_sd * z[(row, n_scores)];
        let al = s.value(f_draw, &c);
        let gain = best_al - al;
        if gain > 0.0 {
            total += gain;
        }
    }
    Ok(total / k as f64)
}

fn draw_columns(b: &SurrogateBundle) -> usize {
    // One column per score plus one for the objective draw (unused when
    // the objective is known; keeping it makes draw reuse layout-stable).
    let scores = match &b.constraints {
        ConstraintSurrogate::Independent(gps) => gps.len(),
        ConstraintSurrogate::Coupled(m) => m.score_gps().len(),
    };
    scores + 1
}

/// Monte-Carlo expected improvement of the augmented Lagrangian at `x`:
/// the mean of `max(0, best_al - AL(draw))` over `k` joint surrogate
/// draws. Deterministic given the seed.
pub fn ei_montecarlo(
    b: &SurrogateBundle,
    x: &[f64],
    s: &AlState,
    best_al: f64,
    k: usize,
    seed: u64,
) -> Result<f64, AcquisitionError> {
    if k == 0 {
        return Err(AcquisitionError::NoDraws);
    }
    let z = normal_draws(k, draw_columns(b), seed);
    ei_with_draws(b, x, s, best_al, &z)
}

/// Closed-form expected value of the maximum-free augmented Lagrangian:
/// `f(x) + lambda . mu + (sum_i mu_i^2 + var_i) / (2 rho)` with `mu`, `var`
/// the constraint posterior moments. Errors under the classic variant
/// (no closed form; callers fall back to Monte Carlo).
pub fn expected_al_nomax(
    b: &SurrogateBundle,
    x: &[f64],
    s: &AlState,
) -> Result<f64, AcquisitionError> {
    if s.variant() != AlVariant::NoMax {
        return Err(AcquisitionError::VariantHasNoClosedForm);
    }
    let f = match &b.objective {
        ObjectiveModel::Known(f) => f(x),
        ObjectiveModel::Emulated(_) => return Err(AcquisitionError::ObjectiveNotKnown),
    };
    let m = b.n_constraints();
    if s.lambda().len() != m {
        return Err(AcquisitionError::SurrogateMismatch {
            expected: s.lambda().len(),
            got: m,
        });
    }
    let (mean, var): (Vec<f64>, Vec<f64>) = match &b.constraints {
        ConstraintSurrogate::Independent(gps) => {
            let mut mean = Vec::with_capacity(m);
            let mut var = Vec::with_capacity(m);
            for g in gps {
                let p = g.predict(x)?;
                mean.push(p.mean);
                var.push(p.variance);
            }
            (mean, var)
        }
        ConstraintSurrogate::Coupled(model) => {
            let p = model.predict(x)?;
            (
                p.mean.iter().copied().collect(),
                (0..m).map(|i| p.covariance[(i, i)]).collect(),
            )
        }
    };
    let mut value = f;
    for i in 0..m {
        value += s.lambda()[i] * mean[i];
        value += (mean[i] * mean[i] + var[i]) / (2.0 * s.rho());
    }
    Ok(value)
}

/// Score every candidate row with common random draws and return the
/// expected-improvement maximizer (ties broken by lowest row index).
///
/// Sharing one draw matrix across candidates makes the selection
/// reproducible, permutation-stable, and cheap to parallelize; a single
/// candidate scored through [`ei_montecarlo`] with the same seed gets
/// exactly the same value.
pub fn select_next(
    b: &SurrogateBundle,
    s: &AlState,
    best_al: f64,
    candidates: &DMatrix<f64>,
    k: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64), AcquisitionError> {
    if candidates.nrows() == 0 {
        return Err(AcquisitionError::EmptyCandidates);
    }
    if k == 0 {
        return Err(AcquisitionError::NoDraws);
    }
    let z = normal_draws(k, draw_columns(b), seed);
    let mut best: Option<(usize, f64)> = None;
    let mut x = vec![0.0; candidates.ncols()];
    for row in 0..candidates.nrows() {
        for j in 0..candidates.ncols() {
            x[j] = candidates[(row, j)];
        }
        let score = ei_with_draws(b, &x, s, best_al, &z)?;
        match best {
            Some((_, bs)) if score <= bs => {}
            _ => best = Some((row, score)),
        }
    }
    let (row, score) = best.expect("non-empty candidates");
    Ok((
        (0..candidates.ncols()).map(|j| candidates[(row, j)]).collect(),
        score,
    ))
}
