//! Single-output Gaussian-process regression with an anisotropic
//! squared-exponential kernel, plus Latin hypercube design generation.
//!
//! Hyperparameters are chosen by maximizing the log marginal likelihood
//! with a deterministic multistart coordinate descent in log-space, so a
//! fit of the same data always reproduces the same model bit for bit.
//! The variance of `y` is normalized out before the search and folded
//! back into the returned hyperparameters, so the search itself is
//! insensitive to the output scale.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::opt::golden_section;

/// Search bounds for lengthscales, in every dimension.
pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-2, 1e2);
/// Search bounds for the signal variance of the variance-normalized outputs.
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-6, 1e2);
/// Jitter added to the covariance diagonal (on the normalized output scale).
pub const BASE_NUGGET: f64 = 1e-8;
/// Largest nugget tried when factorization keeps failing.
pub const MAX_NUGGET: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("invalid training data: {0}")]
    InvalidInput(String),
    #[error("query dimension {got} does not match training dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance factorization failed even at nugget {nugget}")]
    Factorization { nugget: f64 },
    #[error("latin hypercube design needs n >= 1 and d >= 1, got n={n}, d={d}")]
    EmptyDesign { n: usize, d: usize },
}

/// Posterior mean and variance at a single query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Non-negative; negative round-off (never below -1e-10 in practice)
    /// is clamped to zero.
    pub variance: f64,
}

/// Fitted hyperparameters in serializable form, for experiment logs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GpHyperparameters {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub nugget: f64,
    pub mean_offset: f64,
}

/// A fitted Gaussian process. Immutable; predictions may run concurrently.
#[derive(Clone)]
pub struct GpModel {
    x: DMatrix<f64>,
    y: DVector<f64>,
    lengthscales: DVector<f64>,
    signal_variance: f64,
    nugget: f64,
    mean_offset: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

impl fmt::Debug for GpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GpModel")
            .field("n", &self.x.nrows())
            .field("d", &self.x.ncols())
            .field("lengthscales", &self.lengthscales.as_slice())
            .field("signal_variance", &self.signal_variance)
            .field("nugget", &self.nugget)
            .field("mean_offset", &self.mean_offset)
            .finish()
    }
}

/// Stratified Latin hypercube sample of `n` points in `[0, 1]^d`: each
/// column holds exactly one point per interval `[k/n, (k+1)/n)`.
pub fn lhs_sample(n: usize, d: usize, seed: u64) -> Result<DMatrix<f64>, GpError> {
    if n == 0 || d == 0 {
        return Err(GpError::EmptyDesign { n, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, d);
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        // Fisher-Yates with the shared stream.
        for i in (1..n).rev() {
            let k = rng.gen_range(0..=i);
            perm.swap(i, k);
        }
        for i in 0..n {
            let u: f64 = rng.gen::<f64>();
            out[(i, j)] = (perm[i] as f64 + u) / n as f64;
        }
    }
    Ok(out)
}

fn validate_training(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(), GpError> {
    if x.nrows() != y.len() {
        return Err(GpError::InvalidInput(format!(
            "{} rows of inputs vs {} outputs",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(GpError::InvalidInput("non-finite training values".into()));
    }
    Ok(())
}

/// Squared distances per dimension, reused across likelihood evaluations.
fn squared_diffs(x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = x.nrows();
    (0..x.ncols())
        .map(|j| {
            let mut m = DMatrix::zeros(n, n);
            for a in 0..n {
                for b in 0..=a {
                    let d = x[(a, j)] - x[(b, j)];
                    let v = d * d;
                    m[(a, b)] = v;
                    m[(b, a)] = v;
                }
            }
            m
        })
        .collect()
}

fn covariance_from_diffs(
    sqd: &[DMatrix<f64>],
    lengthscales: &[f64],
    signal_variance: f64,
    nugget: f64,
) -> DMatrix<f64> {
    let n = sqd[0].nrows();
    let mut k = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..=a {
            let mut e = 0.0;
            for (j, m) in sqd.iter().enumerate() {
                e += m[(a, b)] / (2.0 * lengthscales[j] * lengthscales[j]);
            }
            let v = signal_variance * (-e).exp();
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
        k[(a, a)] += nugget;
    }
    k
}

/// Log marginal likelihood pieces from a factorized covariance.
fn lml_from_chol(chol: &Cholesky<f64, Dyn>, yc: &DVector<f64>) -> f64 {
    let alpha = chol.solve(yc);
    let n = yc.len() as f64;
    let mut logdet = 0.0;
    for i in 0..yc.len() {
        logdet += chol.l_dirty()[(i, i)].ln();
    }
    -0.5 * yc.dot(&alpha) - logdet - 0.5 * n * (std::f64::consts::TAU).ln()
}

impl GpModel {
    /// Build a model with explicit hyperparameters (no search).
    pub fn with_hyperparameters(
        x: DMatrix<f64>,
        y: DVector<f64>,
        lengthscales: Vec<f64>,
        signal_variance: f64,
        nugget: f64,
    ) -> Result<Self, GpError> {
        validate_training(&x, &y)?;
        if lengthscales.len() != x.ncols() {
            return Err(GpError::InvalidInput(format!(
                "{} lengthscales for {} dimensions",
                lengthscales.len(),
                x.ncols()
            )));
        }
        if lengthscales.iter().any(|&l| l <= 0.0) || signal_variance <= 0.0 || nugget < 0.0 {
            return Err(GpError::InvalidInput(
                "lengthscales and signal variance must be positive, nugget non-negative".into(),
            ));
        }
        let mean_offset = if y.is_empty() { 0.0 } else { y.mean() };
        let yc = y.map(|v| v - mean_offset);
        let (chol, alpha) = if x.nrows() == 0 {
            (None, DVector::zeros(0))
        } else {
            let sqd = squared_diffs(&x);
            let k = covariance_from_diffs(&sqd, &lengthscales, signal_variance, nugget);
            let chol = Cholesky::new(k).ok_or(GpError::Factorization { nugget })?;
            let alpha = chol.solve(&yc);
            (Some(chol), alpha)
        };
        Ok(Self {
            x,
            y,
            lengthscales: DVector::from_vec(lengthscales),
            signal_variance,
            nugget,
            mean_offset,
            chol,
            alpha,
        })
    }

    /// A prior model with no training data: predicts `mean_offset` with
    /// variance `signal_variance` everywhere.
    pub fn prior(dim: usize, mean_offset: f64, signal_variance: f64) -> Self {
        Self {
            x: DMatrix::zeros(0, dim),
            y: DVector::zeros(0),
            lengthscales: DVector::from_element(dim, 1.0),
            signal_variance,
            nugget: 0.0,
            mean_offset,
            chol: None,
            alpha: DVector::zeros(0),
        }
    }

    pub fn n_train(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn lengthscales(&self) -> &[f64] {
        self.lengthscales.as_slice()
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }

    pub fn hyperparameters(&self) -> GpHyperparameters {
        GpHyperparameters {
            lengthscales: self.lengthscales.as_slice().to_vec(),
            signal_variance: self.signal_variance,
            nugget: self.nugget,
            mean_offset: self.mean_offset,
        }
    }

    /// Gaussian log marginal likelihood of the training outputs.
    pub fn log_marginal_likelihood(&self) -> f64 {
        match &self.chol {
            Some(chol) => {
                let yc = self.y.map(|v| v - self.mean_offset);
                lml_from_chol(chol, &yc)
            }
            None => 0.0,
        }
    }

    fn cross_covariance(&self, q: &[f64]) -> DVector<f64> {
        let n = self.x.nrows();
        let mut k = DVector::zeros(n);
        for i in 0..n {
            let mut e = 0.0;
            for (j, &qj) in q.iter().enumerate() {
                let d = self.x[(i, j)] - qj;
                e += d * d / (2.0 * self.lengthscales[j] * self.lengthscales[j]);
            }
            k[i] = self.signal_variance * (-e).exp();
        }
        k
    }

    /// Posterior mean and variance at a query point.
    pub fn predict(&self, q: &[f64]) -> Result<Prediction, GpError> {
        if q.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: q.len(),
            });
        }
        match &self.chol {
            None => Ok(Prediction {
                mean: self.mean_offset,
                variance: self.signal_variance,
            }),
            Some(chol) => {
                let ks = self.cross_covariance(q);
                let mean = self.mean_offset + ks.dot(&self.alpha);
                let variance = (self.signal_variance - ks.dot(&chol.solve(&ks))).max(0.0);
                Ok(Prediction { mean, variance })
            }
        }
    }

    /// Predictions for every row of a query matrix.
    pub fn predict_batch(&self, q: &DMatrix<f64>) -> Result<Vec<Prediction>, GpError> {
        (0..q.nrows())
            .map(|i| {
                let row: Vec<f64> = q.row(i).iter().copied().collect();
                self.predict(&row)
            })
            .collect()
    }
}

/// Fit hyperparameters by maximizing the log marginal likelihood and
/// return the resulting model.
///
/// The search runs coordinate descent in log-space from five deterministic
/// starts; the first sweep is shared by all starts, and the best start is
/// then refined. On factorization failure the nugget escalates tenfold up
/// to [`MAX_NUGGET`].
pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<GpModel, GpError> {
    validate_training(x, y)?;
    let n = x.nrows();
    let d = x.ncols();
    if n < 2 {
        return Err(GpError::InvalidInput(format!("need at least 2 points, got {n}")));
    }

    let mean_offset = y.mean();
    let yc = y.map(|v| v - mean_offset);
    let y_scale = (yc.dot(&yc) / n as f64).sqrt();

    // Degenerate outputs: revert to the prior around the constant.
    if y_scale == 0.0 {
        return GpModel::with_hyperparameters(
            x.clone(),
            y.clone(),
            column_ranges(x),
            SIGNAL_VARIANCE_BOUNDS.0,
            BASE_NUGGET,
        );
    }

    let yn = yc.map(|v| v / y_scale);
    let sqd = squared_diffs(x);
    let ranges = column_ranges(x);

    let (lo_l, hi_l) = (LENGTHSCALE_BOUNDS.0.ln(), LENGTHSCALE_BOUNDS.1.ln());
    let (lo_s, hi_s) = (SIGNAL_VARIANCE_BOUNDS.0.ln(), SIGNAL_VARIANCE_BOUNDS.1.ln());
    let clamp_l = |v: f64| v.clamp(lo_l, hi_l);
    let clamp_s = |v: f64| v.clamp(lo_s, hi_s);

    // params = [log l_1 .. log l_d, log sv]
    let starts: Vec<Vec<f64>> = [0.5, 0.15, 2.0, 0.5, 0.15]
        .iter()
        .zip([1.0, 1.0, 1.0, 5.0, 0.2])
        .map(|(&lm, sv): (&f64, f64)| {
            let mut p: Vec<f64> = ranges.iter().map(|r| clamp_l((lm * r).ln())).collect();
            p.push(clamp_s(sv.ln()));
            p
        })
        .collect();

    let mut nugget = BASE_NUGGET;
    loop {
        let eval = |p: &[f64]| -> f64 {
            let ls: Vec<f64> = p[..d].iter().map(|v| v.exp()).collect();
            let sv = p[d].exp();
            let k = covariance_from_diffs(&sqd, &ls, sv, nugget);
            match Cholesky::new(k) {
                Some(chol) => lml_from_chol(&chol, &yn),
                None => f64::NEG_INFINITY,
            }
        };

        let sweep = |p: &mut Vec<f64>, tol: f64| -> f64 {
            for j in 0..=d {
                let (lo, hi) = if j < d { (lo_l, hi_l) } else { (lo_s, hi_s) };
                let best = golden_section(
                    |v| {
                        let mut q = p.clone();
                        q[j] = v;
                        -eval(&q)
                    },
                    lo,
                    hi,
                    tol,
                );
                p[j] = best;
            }
            eval(p)
        };

        // Coarse sweep from every start, then refine the best one.
        let mut best: Option<(f64, Vec<f64>)> = None;
        for start in &starts {
            let mut p = start.clone();
            let v = sweep(&mut p, 0.15);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, p));
            }
        }
        let (mut best_v, mut best_p) = best.expect("at least one start");
        if best_v.is_finite() {
            for _ in 0..2 {
                let v = sweep(&mut best_p, 0.02);
                if v <= best_v + 1e-9 {
                    break;
                }
                best_v = v;
            }
            let ls: Vec<f64> = best_p[..d].iter().map(|v| v.exp()).collect();
            let sv = best_p[d].exp();
            // Fold the output normalization back into the hyperparameters.
            return GpModel::with_hyperparameters(
                x.clone(),
                y.clone(),
                ls,
                sv * y_scale * y_scale,
                nugget * y_scale * y_scale,
            );
        }

        if nugget >= MAX_NUGGET {
            return Err(GpError::Factorization { nugget });
        }
        nugget *= 10.0;
    }
}

fn column_ranges(x: &DMatrix<f64>) -> Vec<f64> {
    (0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in col.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let r = hi - lo;
            if r > 0.0 {
                r
            } else {
                1.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix_from_rows(rows: &[&[f64]]) -> DMatrix<f64> {
        let n = rows.len();
        let d = rows[0].len();
        DMatrix::from_fn(n, d, |i, j| rows[i][j])
    }

    #[test]
    fn lhs_stratification_and_determinism() {
        let m = lhs_sample(10, 2, 99).unwrap();
        for j in 0..2 {
            let mut counts = [0usize; 10];
            for i in 0..10 {
                let v = m[(i, j)];
                assert!((0.0..1.0).contains(&v));
                counts[(v * 10.0) as usize] += 1;
            }
            assert!(counts.iter().all(|&c| c == 1), "decile occupancy {counts:?}");
        }
        assert_eq!(m, lhs_sample(10, 2, 99).unwrap());
        assert_ne!(m, lhs_sample(10, 2, 100).unwrap());

        let single = lhs_sample(1, 2, 3).unwrap();
        assert!(single.iter().all(|&v| (0.0..1.0).contains(&v)));
        let quartiles = lhs_sample(4, 1, 5).unwrap();
        let mut seen = [false; 4];
        for i in 0..4 {
            seen[(quartiles[(i, 0)] * 4.0) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));

        assert!(lhs_sample(0, 2, 1).is_err());
        assert!(lhs_sample(3, 0, 1).is_err());
    }

    #[test]
    fn constant_outputs_revert_to_the_constant() {
        let x = matrix_from_rows(&[&[0.0], &[0.4], &[1.0]]);
        let y = DVector::from_vec(vec![2.5, 2.5, 2.5]);
        let m = fit(&x, &y).unwrap();
        for q in [0.0, 0.3, 0.9, 2.0] {
            let p = m.predict(&[q]).unwrap();
            assert_abs_diff_eq!(p.mean, 2.5, epsilon = 1e-9);
            assert!(p.variance <= m.signal_variance() + 1e-15);
        }
    }

    #[test]
    fn two_point_interpolation() {
        let x = matrix_from_rows(&[&[0.0], &[1.0]]);
        let y = DVector::from_vec(vec![-1.0, 2.0]);
        let m = fit(&x, &y).unwrap();
        assert_abs_diff_eq!(m.predict(&[0.0]).unwrap().mean, -1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(m.predict(&[1.0]).unwrap().mean, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn recovers_a_sine_to_tight_rmse() {
        let n = 8;
        let x = DMatrix::from_fn(n, 1, |i, _| i as f64 / (n - 1) as f64);
        let y = DVector::from_fn(n, |i, _| (std::f64::consts::TAU * x[(i, 0)]).sin());
        let m = fit(&x, &y).unwrap();
        let mut sq = 0.0;
        for k in 0..50 {
            let q = (k as f64 + 0.5) / 50.0;
            let err = m.predict(&[q]).unwrap().mean - (std::f64::consts::TAU * q).sin();
            sq += err * err;
        }
        let rmse = (sq / 50.0).sqrt();
        assert!(rmse < 0.05, "rmse {rmse}");
    }

    #[test]
    fn interpolation_and_prior_reversion() {
        let x = matrix_from_rows(&[&[0.1, 0.2], &[0.8, 0.3], &[0.4, 0.9], &[0.6, 0.6]]);
        let y = DVector::from_vec(vec![1.0, -0.5, 0.25, 0.7]);
        let m = fit(&x, &y).unwrap();
        // At a training point the posterior collapses onto the datum.
        let p = m.predict(&[0.1, 0.2]).unwrap();
        assert_abs_diff_eq!(p.mean, 1.0, epsilon = 1e-3);
        assert!(p.variance <= 1e-6 * m.signal_variance().max(1.0));
        // Far away it reverts to the prior.
        let far = [0.5 + 300.0 * m.lengthscales()[0], 0.5];
        let p = m.predict(&far).unwrap();
        assert_abs_diff_eq!(p.mean, m.mean_offset(), epsilon = 0.01 * m.mean_offset().abs().max(1.0));
        assert_abs_diff_eq!(p.variance, m.signal_variance(), epsilon = 0.01 * m.signal_variance());
    }

    #[test]
    fn vanishing_nugget_interpolates_tightly() {
        let m = GpModel::with_hyperparameters(
            matrix_from_rows(&[&[0.0], &[0.4], &[1.0]]),
            DVector::from_vec(vec![0.9, -0.3, 0.2]),
            vec![0.5],
            1.0,
            1e-12,
        )
        .unwrap();
        for (i, &target) in [0.9, -0.3, 0.2].iter().enumerate() {
            let p = m.predict(&[[0.0, 0.4, 1.0][i]]).unwrap();
            assert_abs_diff_eq!(p.mean, target, epsilon = 1e-6);
            assert!(p.variance <= 1e-6);
        }
    }

    #[test]
    fn batch_prediction_matches_single_queries() {
        let x = matrix_from_rows(&[&[0.0, 0.0], &[1.0, 0.5], &[0.4, 0.9]]);
        let y = DVector::from_vec(vec![1.0, 0.0, -0.7]);
        let m = fit(&x, &y).unwrap();
        let queries = matrix_from_rows(&[&[0.2, 0.1], &[0.9, 0.9], &[0.5, 0.5]]);
        let batch = m.predict_batch(&queries).unwrap();
        assert_eq!(batch.len(), 3);
        for (i, p) in batch.iter().enumerate() {
            let single = m.predict(&[queries[(i, 0)], queries[(i, 1)]]).unwrap();
            assert_eq!(*p, single);
        }
        assert!(m.predict_batch(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn symmetric_design_predicts_the_average_between() {
        let m = GpModel::with_hyperparameters(
            matrix_from_rows(&[&[-1.0], &[1.0]]),
            DVector::from_vec(vec![3.0, 1.0]),
            vec![0.7],
            1.3,
            1e-8,
        )
        .unwrap();
        let p = m.predict(&[0.0]).unwrap();
        assert_abs_diff_eq!(p.mean, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lml_single_point_standard_normal() {
        let m = GpModel::with_hyperparameters(
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![0.0]),
            vec![1.0],
            1.0,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(
            m.log_marginal_likelihood(),
            -0.5 * std::f64::consts::TAU.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn lml_invariant_under_row_permutation() {
        let x = matrix_from_rows(&[&[0.0], &[0.3], &[0.7], &[1.0]]);
        let y = DVector::from_vec(vec![0.1, -0.4, 0.9, 0.3]);
        let xp = matrix_from_rows(&[&[1.0], &[0.7], &[0.0], &[0.3]]);
        let yp = DVector::from_vec(vec![0.3, 0.9, 0.1, -0.4]);
        let a = GpModel::with_hyperparameters(x, y, vec![0.4], 0.9, 1e-8).unwrap();
        let b = GpModel::with_hyperparameters(xp, yp, vec![0.4], 0.9, 1e-8).unwrap();
        assert_abs_diff_eq!(
            a.log_marginal_likelihood(),
            b.log_marginal_likelihood(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn lml_profile_matches_finite_differences() {
        // Central finite differences of the likelihood in each
        // log-hyperparameter, compared against a tight secant estimate.
        let x = matrix_from_rows(&[&[0.05], &[0.3], &[0.55], &[0.8], &[1.0]]);
        let y = DVector::from_vec(vec![0.2, -0.3, 0.55, -0.1, 0.4]);
        let base = [0.35_f64.ln(), 0.8_f64.ln()];
        let lml = |p: &[f64]| {
            GpModel::with_hyperparameters(
                x.clone(),
                y.clone(),
                vec![p[0].exp()],
                p[1].exp(),
                1e-8,
            )
            .unwrap()
            .log_marginal_likelihood()
        };
        for j in 0..2 {
            let h = 1e-5;
            let (mut pp, mut pm) = (base.to_vec(), base.to_vec());
            pp[j] += h;
            pm[j] -= h;
            let coarse = (lml(&pp) - lml(&pm)) / (2.0 * h);
            let h2 = 1e-7;
            let (mut qp, mut qm) = (base.to_vec(), base.to_vec());
            qp[j] += h2;
            qm[j] -= h2;
            let tight = (lml(&qp) - lml(&qm)) / (2.0 * h2);
            let rel = (coarse - tight).abs() / tight.abs().max(1e-12);
            assert!(rel < 1e-4, "coordinate {j}: {coarse} vs {tight}");
        }
    }

    #[test]
    fn variance_never_negative_and_shrinks_with_data() {
        let x = matrix_from_rows(&[&[0.0], &[0.25], &[0.5], &[0.75], &[1.0]]);
        let y = DVector::from_vec(vec![0.0, 0.7, -0.2, 0.4, 0.1]);
        let m = fit(&x, &y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let q = rng.gen::<f64>() * 3.0 - 1.0;
            assert!(m.predict(&[q]).unwrap().variance >= 0.0);
        }

        // Adding a point never increases posterior variance (fixed kernel).
        let small = GpModel::with_hyperparameters(
            matrix_from_rows(&[&[0.1], &[0.9]]),
            DVector::from_vec(vec![0.3, -0.6]),
            vec![0.4],
            1.0,
            1e-8,
        )
        .unwrap();
        let big = GpModel::with_hyperparameters(
            matrix_from_rows(&[&[0.1], &[0.9], &[0.5]]),
            DVector::from_vec(vec![0.3, -0.6, 0.1]),
            vec![0.4],
            1.0,
            1e-8,
        )
        .unwrap();
        for k in 0..50 {
            let q = k as f64 / 49.0;
            let vs = small.predict(&[q]).unwrap().variance;
            let vb = big.predict(&[q]).unwrap().variance;
            assert!(vb <= vs + 1e-8, "variance grew at {q}: {vs} -> {vb}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let x = matrix_from_rows(&[&[0.0, 0.1], &[0.5, 0.9], &[0.9, 0.4], &[0.3, 0.6]]);
        let y = DVector::from_vec(vec![0.4, -0.2, 0.8, 0.05]);
        let a = fit(&x, &y).unwrap();
        let b = fit(&x, &y).unwrap();
        assert_eq!(a.lengthscales(), b.lengthscales());
        assert_eq!(a.signal_variance(), b.signal_variance());
        assert_eq!(
            a.predict(&[0.2, 0.2]).unwrap(),
            b.predict(&[0.2, 0.2]).unwrap()
        );
    }

    #[test]
    fn fit_is_scale_equivariant() {
        // Power-of-two scaling commutes exactly with every float operation
        // in the normalized search, so the fit is bitwise equivariant.
        let x = matrix_from_rows(&[&[0.0], &[0.3], &[0.6], &[1.0]]);
        let y = DVector::from_vec(vec![0.2, -0.1, 0.4, 0.0]);
        let scaled = y.map(|v| 64.0 * v);
        let a = fit(&x, &y).unwrap();
        let b = fit(&x, &scaled).unwrap();
        assert_eq!(a.lengthscales(), b.lengthscales());
        assert_eq!(64.0 * 64.0 * a.signal_variance(), b.signal_variance());
        for q in [0.1, 0.45, 0.8] {
            let pa = a.predict(&[q]).unwrap();
            let pb = b.predict(&[q]).unwrap();
            assert_eq!(64.0 * pa.mean, pb.mean);
            assert_eq!(64.0 * 64.0 * pa.variance, pb.variance);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = matrix_from_rows(&[&[0.0], &[1.0]]);
        assert!(fit(&x, &DVector::from_vec(vec![0.0])).is_err());
        assert!(fit(&x, &DVector::from_vec(vec![f64::NAN, 0.0])).is_err());
        assert!(fit(&DMatrix::zeros(1, 1), &DVector::from_vec(vec![0.0])).is_err());
        let m = fit(&x, &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!(matches!(
            m.predict(&[0.0, 0.0]),
            Err(GpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prior_model_predicts_its_parameters() {
        let m = GpModel::prior(2, 0.75, 2.0);
        let p = m.predict(&[10.0, -3.0]).unwrap();
        assert_eq!(p.mean, 0.75);
        assert_eq!(p.variance, 2.0);
    }
}
