//! Test problems: the two-constraint toy problem and its three objective
//! variants, the slack-variable linearization transform, and the 1D
//! counterexample that separates the two augmented-Lagrangian penalties.
//!
//! Problem definitions are immutable after construction and cheap to clone,
//! so they can be shared freely across concurrent evaluators.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::opt::grid_then_refine_1d;

/// A scalar function of a point, callable anywhere (problem formulas are
/// total, which finite-difference gradient checks near the box rely on).
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid box domain: {0}")]
    InvalidDomain(String),
    #[error("point {point:?} is outside the domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("rho must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("unknown problem id {0:?}")]
    UnknownProblem(String),
}

/// Axis-aligned box of admissible inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProblemError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(ProblemError::InvalidDomain(format!(
                "need matching non-empty bounds, got {} lower / {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(ProblemError::InvalidDomain(format!(
                    "dimension {i}: lower {lo} must be < upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit box `[0, 1]^d`.
    pub fn unit(dim: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&xi, (&lo, &hi))| xi >= lo && xi <= hi)
    }

    /// Map a point in `[0,1]^d` onto this box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&ui, (&lo, &hi))| lo + ui * (hi - lo))
            .collect()
    }

    /// Project a point onto the box.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| xi.clamp(lo, hi))
            .collect()
    }
}

/// One black-box evaluation. `feasible` holds exactly when every
/// constraint value is non-positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub f: f64,
    pub c: Vec<f64>,
    pub feasible: bool,
}

impl Evaluation {
    pub fn new(x: Vec<f64>, f: f64, c: Vec<f64>) -> Self {
        let feasible = c.iter().all(|&v| v <= 0.0);
        Self { x, f, c, feasible }
    }
}

/// `min f(x)` subject to `c_i(x) <= 0` over a box domain.
#[derive(Clone)]
pub struct ConstrainedProblem {
    id: String,
    objective: ScalarFn,
    constraints: Vec<ScalarFn>,
    domain: BoxDomain,
    known_optimum: Option<(f64, Vec<f64>)>,
}

impl fmt::Debug for ConstrainedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstrainedProblem")
            .field("id", &self.id)
            .field("dim", &self.domain.dim())
            .field("m", &self.constraints.len())
            .field("known_optimum", &self.known_optimum)
            .finish()
    }
}

impl ConstrainedProblem {
    pub fn new(
        id: impl Into<String>,
        objective: ScalarFn,
        constraints: Vec<ScalarFn>,
        domain: BoxDomain,
        known_optimum: Option<(f64, Vec<f64>)>,
    ) -> Self {
        assert!(!constraints.is_empty(), "need at least one constraint");
        Self {
            id: id.into(),
            objective,
            constraints,
            domain,
            known_optimum,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of constraints `m`.
    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn known_optimum(&self) -> Option<(f64, &[f64])> {
        self.known_optimum.as_ref().map(|(v, x)| (*v, x.as_slice()))
    }

    /// Raw objective value; callable outside the box (total formula).
    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Raw value of constraint `i`; callable outside the box.
    pub fn constraint(&self, i: usize, x: &[f64]) -> f64 {
        (self.constraints[i])(x)
    }

    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| c(x)).collect()
    }

    /// Evaluate the black box at a point inside the domain.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation, ProblemError> {
        if !self.domain.contains(x) {
            return Err(ProblemError::OutOfDomain { point: x.to_vec() });
        }
        Ok(Evaluation::new(
            x.to_vec(),
            self.objective(x),
            self.constraint_values(x),
        ))
    }

    pub fn is_feasible(&self, x: &[f64]) -> Result<bool, ProblemError> {
        Ok(self.evaluate(x)?.feasible)
    }
}

/// Objective variants of the toy problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyVersion {
    /// Linear objective `x1 - x2`; solution -1 at (0, 1).
    V1,
    /// Quadratic objective `(x1-0.6)^2/2 + (x2-0.6)^2`; solution 0 at (0.6, 0.6).
    V2,
    /// Slack-linearized V2: objective `x3` with the extra constraint
    /// `(x1-0.6)^2/2 + (x2-0.6)^2 - x3 <= 0`.
    V3,
}

/// Upper bound of the slack coordinate in [`ToyVersion::V3`]. The quadratic
/// it bounds peaks at 0.54 over the unit square, so the bound is slack at
/// the optimum while keeping uniform sampling of the third coordinate
/// meaningful.
pub const V3_SLACK_UPPER: f64 = 0.6;

fn toy_c1(x: &[f64]) -> f64 {
    1.5 - x[0] - 2.0 * x[1] - 0.5 * (TAU * (x[0] * x[0] - 2.0 * x[1])).sin()
}

fn toy_c2(x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1] - 1.5
}

fn quadratic_objective(x: &[f64]) -> f64 {
    0.5 * (x[0] - 0.6) * (x[0] - 0.6) + (x[1] - 0.6) * (x[1] - 0.6)
}

fn toy_constraints() -> Vec<ScalarFn> {
    vec![Arc::new(toy_c1) as ScalarFn, Arc::new(toy_c2) as ScalarFn]
}

/// Location of the original toy problem's constrained minimum, derived by
/// tracing the active branch of `c1 = 0` and minimizing along it (see the
/// oracle in this module's tests).
pub const TOY_OPTIMUM_X: [f64; 2] = [0.195122683430973, 0.404665368579095];
/// Objective value at [`TOY_OPTIMUM_X`].
pub const TOY_OPTIMUM_VALUE: f64 = 0.599788052010067;

/// Original toy problem: `min x1 + x2` over the unit square with the
/// sinusoidal and circular constraints.
pub fn make_toy_original() -> ConstrainedProblem {
    ConstrainedProblem::new(
        "toy",
        Arc::new(|x: &[f64]| x[0] + x[1]) as ScalarFn,
        toy_constraints(),
        BoxDomain::unit(2),
        Some((TOY_OPTIMUM_VALUE, TOY_OPTIMUM_X.to_vec())),
    )
}

/// One of the three objective variants over the toy constraint set.
pub fn make_version(version: ToyVersion) -> ConstrainedProblem {
    match version {
        ToyVersion::V1 => ConstrainedProblem::new(
            "v1",
            Arc::new(|x: &[f64]| x[0] - x[1]) as ScalarFn,
            toy_constraints(),
            BoxDomain::unit(2),
            Some((-1.0, vec![0.0, 1.0])),
        ),
        ToyVersion::V2 => ConstrainedProblem::new(
            "v2",
            Arc::new(quadratic_objective) as ScalarFn,
            toy_constraints(),
            BoxDomain::unit(2),
            Some((0.0, vec![0.6, 0.6])),
        ),
        ToyVersion::V3 => {
            let mut constraints = toy_constraints();
            constraints
                .push(Arc::new(|x: &[f64]| quadratic_objective(x) - x[2]) as ScalarFn);
            let domain = BoxDomain::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, V3_SLACK_UPPER])
                .expect("valid V3 domain");
            ConstrainedProblem::new(
                "v3",
                Arc::new(|x: &[f64]| x[2]) as ScalarFn,
                constraints,
                domain,
                Some((0.0, vec![0.6, 0.6, 0.0])),
            )
        }
    }
}

/// Rewrite `min f(x)` as `min r` subject to `f(x) - r <= 0`, appending the
/// slack coordinate `r` (bounded by `r_bounds`) as the last dimension. The
/// original constraints are retained ahead of the new one.
///
/// `r_bounds` must contain the range of `f` over the domain for the
/// transform to preserve the optimum.
pub fn slack_linearize(
    p: &ConstrainedProblem,
    r_bounds: (f64, f64),
) -> Result<ConstrainedProblem, ProblemError> {
    let d = p.dim();
    let mut lower = p.domain().lower().to_vec();
    let mut upper = p.domain().upper().to_vec();
    lower.push(r_bounds.0);
    upper.push(r_bounds.1);
    let domain = BoxDomain::new(lower, upper)?;

    let mut constraints: Vec<ScalarFn> = p
        .constraints
        .iter()
        .map(|c| {
            let c = Arc::clone(c);
            Arc::new(move |x: &[f64]| c(&x[..d])) as ScalarFn
        })
        .collect();
    let f = Arc::clone(&p.objective);
    constraints.push(Arc::new(move |x: &[f64]| f(&x[..d]) - x[d]) as ScalarFn);

    let known_optimum = p
        .known_optimum
        .as_ref()
        .map(|(v, x)| {
            let mut loc = x.clone();
            loc.push(*v);
            (*v, loc)
        })
        .filter(|(v, _)| *v >= r_bounds.0 && *v <= r_bounds.1);

    Ok(ConstrainedProblem::new(
        format!("{}-slack", p.id),
        Arc::new(move |x: &[f64]| x[d]) as ScalarFn,
        constraints,
        domain,
        known_optimum,
    ))
}

/// `min (x - 0.5)^2` subject to `x^2 - 1 <= 0` on `[-1, 1]`: the problem on
/// which the maximum-free penalty provably misses the interior optimum.
pub fn make_counterexample_1d() -> ConstrainedProblem {
    ConstrainedProblem::new(
        "counterexample-1d",
        Arc::new(|x: &[f64]| (x[0] - 0.5) * (x[0] - 0.5)) as ScalarFn,
        vec![Arc::new(|x: &[f64]| x[0] * x[0] - 1.0) as ScalarFn],
        BoxDomain::new(vec![-1.0], vec![1.0]).expect("valid 1d box"),
        Some((0.0, vec![0.5])),
    )
}

/// The maximum-free penalized objective `(x-0.5)^2 + (x^2-1)^2 / (2 rho)`
/// of the reduced 1D subproblem.
pub fn counterexample_penalized(x: f64, rho: f64) -> Result<f64, ProblemError> {
    if rho <= 0.0 {
        return Err(ProblemError::NonPositiveRho(rho));
    }
    let slack = x * x - 1.0;
    Ok((x - 0.5) * (x - 0.5) + slack * slack / (2.0 * rho))
}

/// Analytic derivative of [`counterexample_penalized`] in `x`:
/// `2 (x - 0.5) + 2 x (x^2 - 1) / rho`. At `x = 0.5` this is
/// `-3 / (4 rho)`, nonzero for every `rho`, so the penalized problem never
/// returns the true minimizer.
pub fn counterexample_penalized_gradient(x: f64, rho: f64) -> Result<f64, ProblemError> {
    if rho <= 0.0 {
        return Err(ProblemError::NonPositiveRho(rho));
    }
    Ok(2.0 * (x - 0.5) + 2.0 * x * (x * x - 1.0) / rho)
}

/// Argmin of [`counterexample_penalized`] over `[-1, 1]`, located by a
/// dense scan plus golden-section refinement to 1e-8.
pub fn counterexample_minimizer(rho: f64) -> Result<f64, ProblemError> {
    if rho <= 0.0 {
        return Err(ProblemError::NonPositiveRho(rho));
    }
    Ok(grid_then_refine_1d(
        |x| counterexample_penalized(x, rho).expect("rho already validated"),
        -1.0,
        1.0,
        8193,
        1e-9,
    ))
}

/// Resolve a problem from its CLI identifier.
pub fn problem_from_id(id: &str) -> Result<ConstrainedProblem, ProblemError> {
    match id {
        "toy" => Ok(make_toy_original()),
        "v1" => Ok(make_version(ToyVersion::V1)),
        "v2" => Ok(make_version(ToyVersion::V2)),
        "v3" => Ok(make_version(ToyVersion::V3)),
        "counterexample-1d" => Ok(make_counterexample_1d()),
        other => Err(ProblemError::UnknownProblem(other.to_string())),
    }
}

/// Identifiers accepted by [`problem_from_id`].
pub const PROBLEM_IDS: [&str; 5] = ["toy", "v1", "v2", "v3", "counterexample-1d"];
