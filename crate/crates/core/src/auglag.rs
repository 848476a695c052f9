//! Augmented-Lagrangian machinery: both penalty variants, multiplier and
//! penalty-parameter updates, a numerical KKT residual, and an exact outer
//! loop that witnesses where the two variants part ways.

use thiserror::Error;

use crate::opt::grid_multistart_minimize;
use crate::problems::{ConstrainedProblem, ProblemError};

/// Smallest value the penalty parameter is allowed to reach.
pub const RHO_FLOOR: f64 = 1e-12;

/// Finite-difference step used by the KKT residual (relative).
pub const KKT_FD_STEP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AuglagError {
    #[error("invalid augmented-Lagrangian state: {0}")]
    InvalidState(String),
    #[error("{got} multipliers for {expected} constraints")]
    MultiplierMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("inner minimization failed: {0}")]
    InnerMinimization(String),
}

/// Which quadratic penalty the augmented Lagrangian carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AlVariant {
    /// Classic penalty `sum max(0, c_i)^2`: satisfied constraints cost nothing.
    WithMax,
    /// Maximum-free penalty `sum c_i^2`: slack is penalized like violation.
    NoMax,
}

/// Multipliers and penalty parameter of one augmented-Lagrangian iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AlState {
    lambda: Vec<f64>,
    rho: f64,
    variant: AlVariant,
}

impl AlState {
    pub fn new(lambda: Vec<f64>, rho: f64, variant: AlVariant) -> Result<Self, AuglagError> {
        if lambda.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(AuglagError::InvalidState(format!(
                "multipliers must be finite and non-negative, got {lambda:?}"
            )));
        }
        if !rho.is_finite() || rho <= 0.0 {
            return Err(AuglagError::InvalidState(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { lambda, rho, variant })
    }

    /// Zero multipliers for `m` constraints.
    pub fn zeros(m: usize, rho: f64, variant: AlVariant) -> Result<Self, AuglagError> {
        Self::new(vec![0.0; m], rho, variant)
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn variant(&self) -> AlVariant {
        self.variant
    }

    /// Augmented-Lagrangian value `f + lambda . c + penalty / (2 rho)`.
    pub fn value(&self, f: f64, c: &[f64]) -> f64 {
        debug_assert_eq!(c.len(), self.lambda.len());
        let mut linear = 0.0;
        let mut penalty = 0.0;
        for (&li, &ci) in self.lambda.iter().zip(c) {
            linear += li * ci;
            let v = match self.variant {
                AlVariant::WithMax => ci.max(0.0),
                AlVariant::NoMax => ci,
            };
            penalty += v * v;
        }
        f + linear + penalty / (2.0 * self.rho)
    }

    /// First-order multiplier update `lambda_i <- max(0, lambda_i + c_i / rho)`,
    /// identical for both variants; `rho` is untouched.
    pub fn update_multipliers(&self, c: &[f64]) -> Self {
        debug_assert_eq!(c.len(), self.lambda.len());
        let lambda = self
            .lambda
            .iter()
            .zip(c)
            .map(|(&li, &ci)| (li + ci / self.rho).max(0.0))
            .collect();
        Self {
            lambda,
            rho: self.rho,
            variant: self.variant,
        }
    }

    /// Halve `rho` (floored at [`RHO_FLOOR`]) unless progress was made.
    pub fn update_rho(&self, made_feasible_progress: bool) -> Self {
        let rho = if made_feasible_progress {
            self.rho
        } else {
            (self.rho / 2.0).max(RHO_FLOOR)
        };
        Self {
            lambda: self.lambda.clone(),
            rho,
            variant: self.variant,
        }
    }
}

/// First-order optimality residuals at a point, box bounds included.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Norm of the projected Lagrangian gradient (zero at a critical point).
    pub stationarity: f64,
    /// Largest constraint violation `max(0, max_i c_i)`.
    pub feasibility: f64,
    /// Largest complementary-slackness defect `max_i |lambda_i c_i|`.
    pub complementarity: f64,
    pub multipliers: Vec<f64>,
}

/// Numerical KKT residuals of `p` at `x` with multipliers `lambda`.
///
/// The Lagrangian gradient is taken by central finite differences (step
/// [`KKT_FD_STEP`], relative) and projected against the box: the
/// stationarity measure is `|x - clamp(x - grad)|`, which ignores exactly
/// those gradient components that push outward across an active bound.
pub fn kkt_residual(
    p: &ConstrainedProblem,
    x: &[f64],
    lambda: &[f64],
) -> Result<KktReport, AuglagError> {
    if !p.domain().contains(x) {
        return Err(AuglagError::Problem(ProblemError::OutOfDomain {
            point: x.to_vec(),
        }));
    }
    if lambda.len() != p.n_constraints() {
        return Err(AuglagError::MultiplierMismatch {
            expected: p.n_constraints(),
            got: lambda.len(),
        });
    }
    if lambda.iter().any(|&l| l < 0.0) {
        return Err(AuglagError::InvalidState(format!(
            "multipliers must be non-negative, got {lambda:?}"
        )));
    }

    let lagrangian = |z: &[f64]| -> f64 {
        let mut v = p.objective(z);
        for (i, &li) in lambda.iter().enumerate() {
            if li != 0.0 {
                v += li * p.constraint(i, z);
            }
        }
        v
    };

    let d = x.len();
    let mut grad = vec![0.0; d];
    for j in 0..d {
        let h = KKT_FD_STEP * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        grad[j] = (lagrangian(&xp) - lagrangian(&xm)) / (2.0 * h);
    }

    let stepped: Vec<f64> = x.iter().zip(&grad).map(|(&xi, &gi)| xi - gi).collect();
    let projected = p.domain().clamp(&stepped);
    let stationarity = x
        .iter()
        .zip(&projected)
        .map(|(&xi, &pi)| (xi - pi) * (xi - pi))
        .sum::<f64>()
        .sqrt();

    let c = p.constraint_values(x);
    let feasibility = c.iter().fold(0.0f64, |acc, &ci| acc.max(ci)).max(0.0);
    let complementarity = lambda
        .iter()
        .zip(&c)
        .fold(0.0f64, |acc, (&li, &ci)| acc.max((li * ci).abs()));

    Ok(KktReport {
        stationarity,
        feasibility,
        complementarity,
        multipliers: lambda.to_vec(),
    })
}

fn inner_grid(dim: usize) -> usize {
    match dim {
        1 => 4097,
        2 => 129,
        3 => 33,
        _ => 9,
    }
}

/// Classical augmented-Lagrangian outer loop with exact inner minimization
/// over the box (dense grid plus multistart refinement), run for up to 100
/// iterations. Returns the final iterate and its KKT report under the
/// final multiplier estimates.
///
/// `rho` is halved only while the iterate stays infeasible; with an exact
/// inner solve, a feasible iterate is already the fixed point of the
/// subproblem and further penalty tightening would only chase constraint
/// boundaries.
pub fn al_saddle_check(
    p: &ConstrainedProblem,
    s0: &AlState,
    x0: &[f64],
) -> Result<(Vec<f64>, KktReport), AuglagError> {
    if s0.lambda.len() != p.n_constraints() {
        return Err(AuglagError::MultiplierMismatch {
            expected: p.n_constraints(),
            got: s0.lambda.len(),
        });
    }
    let lower = p.domain().lower();
    let upper = p.domain().upper();
    let grid = inner_grid(p.dim());

    let mut state = s0.clone();
    let mut x = p.domain().clamp(x0);
    for _ in 0..100 {
        let objective = |z: &[f64]| state.value(p.objective(z), &p.constraint_values(z));
        let starts = [x.clone()];
        let (x_new, v) = grid_multistart_minimize(objective, lower, upper, grid, &starts);
        if !v.is_finite() {
            return Err(AuglagError::InnerMinimization(format!(
                "non-finite subproblem value {v} at {x_new:?}"
            )));
        }
        let c = p.constraint_values(&x_new);
        let feasible = c.iter().all(|&ci| ci <= 0.0);
        let next = state.update_multipliers(&c).update_rho(feasible);

        let moved = x
            .iter()
            .zip(&x_new)
            .fold(0.0f64, |acc, (&a, &b)| acc.max((a - b).abs()));
        let lambda_moved = state
            .lambda
            .iter()
            .zip(&next.lambda)
            .fold(0.0f64, |acc, (&a, &b)| acc.max((a - b).abs()));
        let converged = moved <= 1e-10 && lambda_moved <= 1e-12 && next.rho == state.rho;

        x = x_new;
        state = next;
        if converged {
            break;
        }
    }

    let report = kkt_residual(p, &x, &state.lambda)?;
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{
        counterexample_penalized, make_counterexample_1d, make_toy_original, make_version,
        ToyVersion, TOY_OPTIMUM_X,
    };
    use approx::assert_abs_diff_eq;

    #[test]
    fn value_anchors() {
        let with_max = AlState::new(vec![0.0, 0.0], 1.0, AlVariant::WithMax).unwrap();
        // lambda = 0 and satisfied constraints leave exactly f.
        assert_eq!(with_max.value(0.7, &[-0.2, -1.0]), 0.7);

        let nm = AlState::new(vec![0.2], 1.0, AlVariant::NoMax).unwrap();
        let wm = AlState::new(vec![0.2], 1.0, AlVariant::WithMax).unwrap();
        assert_abs_diff_eq!(nm.value(0.25, &[-1.0]), 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(wm.value(0.25, &[-1.0]), 0.05, epsilon = 1e-15);

        // Consistency with the reduced counterexample subproblem.
        let p = make_counterexample_1d();
        let s = AlState::zeros(1, 0.1, AlVariant::NoMax).unwrap();
        let x = [0.0];
        assert_abs_diff_eq!(
            s.value(p.objective(&x), &p.constraint_values(&x)),
            counterexample_penalized(0.0, 0.1).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s.value(0.25, &[-1.0]), 5.25, epsilon = 1e-12);
    }

    #[test]
    fn with_max_never_exceeds_no_max() {
        let mut worst = 0.0f64;
        for k in 0..1000 {
            let t = k as f64 / 999.0;
            let f = 2.0 * t - 1.0;
            let c = [2.0 * (1.0 - t) - 1.2, (3.7 * t).sin()];
            let lam = vec![t, 1.0 - t];
            let rho = 0.05 + t;
            let wm = AlState::new(lam.clone(), rho, AlVariant::WithMax).unwrap();
            let nm = AlState::new(lam, rho, AlVariant::NoMax).unwrap();
            let (a, b) = (wm.value(f, &c), nm.value(f, &c));
            assert!(a <= b + 1e-12);
            if c.iter().all(|&ci| ci >= 0.0) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            } else {
                worst = worst.max(b - a);
            }
        }
        assert!(worst > 0.0);
    }

    #[test]
    fn value_invariant_under_consistent_reordering() {
        let c = [0.3, -0.8, 0.1];
        let lam = vec![0.5, 1.5, 0.0];
        let a = AlState::new(lam, 0.7, AlVariant::NoMax).unwrap().value(1.0, &c);
        let b = AlState::new(vec![0.0, 0.5, 1.5], 0.7, AlVariant::NoMax)
            .unwrap()
            .value(1.0, &[0.1, 0.3, -0.8]);
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn multiplier_update_anchors() {
        let s = AlState::zeros(1, 1.0, AlVariant::WithMax).unwrap();
        assert_eq!(s.update_multipliers(&[-1.0]).lambda(), &[0.0]);

        let s = AlState::new(vec![0.5], 0.5, AlVariant::NoMax).unwrap();
        assert_eq!(s.update_multipliers(&[1.0]).lambda(), &[2.5]);

        let s = AlState::new(vec![0.7], 0.25, AlVariant::WithMax).unwrap();
        let mut t = s.clone();
        for _ in 0..5 {
            t = t.update_multipliers(&[0.0]);
        }
        assert_eq!(t.lambda(), s.lambda());
        assert!(t.update_multipliers(&[-0.1]).lambda().iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn rho_update_anchors() {
        let s = AlState::zeros(1, 1.0, AlVariant::NoMax).unwrap();
        assert_eq!(s.update_rho(false).rho(), 0.5);
        assert_eq!(s.update_rho(true).rho(), 1.0);
        let mut t = s;
        for _ in 0..50 {
            t = t.update_rho(false);
            assert!(t.rho() > 0.0);
        }
        assert_eq!(t.rho(), RHO_FLOOR);
    }

    #[test]
    fn state_validation() {
        assert!(AlState::new(vec![-0.1], 1.0, AlVariant::NoMax).is_err());
        assert!(AlState::new(vec![0.0], 0.0, AlVariant::NoMax).is_err());
        assert!(AlState::new(vec![0.0], -2.0, AlVariant::WithMax).is_err());
    }

    #[test]
    fn kkt_at_counterexample_points() {
        let p = make_counterexample_1d();
        let r = kkt_residual(&p, &[0.5], &[0.0]).unwrap();
        assert!(r.stationarity <= 1e-6);
        assert_eq!(r.feasibility, 0.0);
        assert_eq!(r.complementarity, 0.0);

        // grad f at 0 is -1; projecting the unit step keeps it inside.
        let r = kkt_residual(&p, &[0.0], &[0.0]).unwrap();
        assert_abs_diff_eq!(r.stationarity, 1.0, epsilon = 1e-4);

        assert!(kkt_residual(&p, &[2.0], &[0.0]).is_err());
        assert!(kkt_residual(&p, &[0.0], &[0.0, 0.0]).is_err());
        assert!(kkt_residual(&p, &[0.0], &[-0.5]).is_err());
    }

    #[test]
    fn kkt_at_toy_optimum_with_least_squares_multipliers() {
        // Oracle: lambda for the single active constraint from the normal
        // equation lambda = -(grad f . grad c1) / |grad c1|^2 at the frozen
        // optimum, with gradients by the same central differences.
        let p = make_toy_original();
        let x = TOY_OPTIMUM_X;
        let h = 1e-6;
        let mut gf = [0.0; 2];
        let mut gc = [0.0; 2];
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            gf[j] = (p.objective(&xp) - p.objective(&xm)) / (2.0 * h);
            gc[j] = (p.constraint(0, &xp) - p.constraint(0, &xm)) / (2.0 * h);
        }
        let lam1 = -((gf[0] * gc[0] + gf[1] * gc[1]) / (gc[0] * gc[0] + gc[1] * gc[1]));
        assert_abs_diff_eq!(lam1, 0.859648745103, epsilon = 1e-6);
        let r = kkt_residual(&p, &x, &[lam1, 0.0]).unwrap();
        assert!(r.stationarity <= 1e-3, "stationarity {}", r.stationarity);
        assert!(r.feasibility <= 1e-12);
        assert!(r.complementarity <= 1e-9);
    }

    #[test]
    fn saddle_with_max_finds_the_interior_optimum() {
        let p = make_counterexample_1d();
        for rho0 in [10.0, 1.0, 0.1] {
            let s0 = AlState::zeros(1, rho0, AlVariant::WithMax).unwrap();
            let (x, report) = al_saddle_check(&p, &s0, &[-0.7]).unwrap();
            assert!(
                (x[0] - 0.5).abs() <= 1e-4,
                "rho0={rho0}: landed at {x:?}"
            );
            assert!(report.stationarity <= 1e-4);
            assert!(report.feasibility <= 1e-4);
            assert!(report.complementarity <= 1e-4);
        }
    }

    #[test]
    fn saddle_no_max_is_pulled_to_the_boundary() {
        let p = make_counterexample_1d();
        let s0 = AlState::zeros(1, 0.1, AlVariant::NoMax).unwrap();
        let (x, _) = al_saddle_check(&p, &s0, &[0.5]).unwrap();
        // Grid oracle for the penalized minimizer at rho = 0.1 is ~0.9753.
        assert!(
            (x[0] - 0.5).abs() >= 0.3,
            "expected boundary pull, got {x:?}"
        );
        assert_abs_diff_eq!(x[0], crate::problems::counterexample_minimizer(0.1).unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn saddle_no_max_stays_viable_for_a_linear_objective() {
        let p = make_version(ToyVersion::V1);
        let s0 = AlState::zeros(2, 0.5, AlVariant::NoMax).unwrap();
        let (x, report) = al_saddle_check(&p, &s0, &[0.5, 0.5]).unwrap();
        let dist = ((x[0] - 0.0).powi(2) + (x[1] - 1.0).powi(2)).sqrt();
        assert!(dist <= 0.05, "expected the box-corner optimum, got {x:?}");
        assert!(report.stationarity <= 1e-4);
    }

    #[test]
    fn saddle_with_max_on_the_quadratic_variant() {
        let p = make_version(ToyVersion::V2);
        let s0 = AlState::zeros(2, 0.5, AlVariant::WithMax).unwrap();
        let (x, _) = al_saddle_check(&p, &s0, &[0.2, 0.2]).unwrap();
        let dist = ((x[0] - 0.6).powi(2) + (x[1] - 0.6).powi(2)).sqrt();
        assert!(dist <= 1e-4, "got {x:?}");
    }
}
