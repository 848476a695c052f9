//! Correlated multi-output constraint surrogate: a simplified linear model
//! of coregionalization that couples independent score processes through
//! the economy-size SVD of the observed constraint matrix.
//!
//! Observations `C` (one row per input, one column per constraint) factor
//! as `C = U S V^T`; the fixed coupling matrix is `A = V S`, and the
//! orthogonal score columns of `U` are each modeled by an independent GP.
//! Predictions map score posteriors through `A`, so the joint covariance
//! is `A diag(score variances) A^T`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::gp::{self, GpError, GpModel};
use crate::problems::{ConstrainedProblem, ProblemError};

/// Singular values below this fraction of the largest mark `C` as
/// rank-deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LmcError {
    #[error("need n >= m >= 2 observations, got n={n}, m={m}")]
    TooFewObservations { n: usize, m: usize },
    #[error("observation matrix is rank deficient (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("non-finite values in the observation matrix")]
    NonFinite,
    #[error("input rows ({rows}) do not match observation rows ({obs})")]
    RowMismatch { rows: usize, obs: usize },
    #[error("constraint sample is degenerate (constant)")]
    DegenerateSample,
    #[error("constraint index {index} out of range for {m} constraints")]
    BadIndex { index: usize, m: usize },
    #[error("sample size must be at least 2, got {0}")]
    SampleTooSmall(usize),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Joint constraint prediction at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPrediction {
    pub mean: DVector<f64>,
    /// Symmetric positive semidefinite (up to -1e-10 round-off on the
    /// eigenvalues).
    pub covariance: DMatrix<f64>,
}

/// Fitted coregionalization model.
#[derive(Debug, Clone)]
pub struct LmcModel {
    a: DMatrix<f64>,
    score_gps: Vec<GpModel>,
    scores: DMatrix<f64>,
    n_obs: usize,
}

impl LmcModel {
    /// The m-by-m coupling matrix `A = V S`.
    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Orthonormal score observations (the columns of `U`).
    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn score_gps(&self) -> &[GpModel] {
        &self.score_gps
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_outputs(&self) -> usize {
        self.a.nrows()
    }

    #[cfg(test)]
    pub(crate) fn from_parts(a: DMatrix<f64>, score_gps: Vec<GpModel>, n_obs: usize) -> Self {
        let scores = DMatrix::zeros(0, a.ncols());
        Self { a, score_gps, scores, n_obs }
    }

    /// Score posteriors at a query point: per-score mean and variance.
    fn score_posteriors(&self, x: &[f64]) -> Result<(DVector<f64>, DVector<f64>), LmcError> {
        let m = self.score_gps.len();
        let mut mean = DVector::zeros(m);
        let mut var = DVector::zeros(m);
        for (i, m_gp) in self.score_gps.iter().enumerate() {
            let p = m_gp.predict(x)?;
            mean[i] = p.mean;
            var[i] = p.variance;
        }
        Ok((mean, var))
    }

    /// Joint mean `A mu_u` and covariance `A diag(var_u) A^T` at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<JointPrediction, LmcError> {
        let (mu, var) = self.score_posteriors(x)?;
        let mean = &self.a * &mu;
        let mut covariance = DMatrix::zeros(self.a.nrows(), self.a.nrows());
        for i in 0..self.a.nrows() {
            for j in 0..=i {
                let mut v = 0.0;
                for k in 0..self.a.ncols() {
                    v += self.a[(i, k)] * self.a[(j, k)] * var[k];
                }
                covariance[(i, j)] = v;
                covariance[(j, i)] = v;
            }
        }
        Ok(JointPrediction { mean, covariance })
    }

    /// `k` joint draws of the constraint vector at `x`: independent normal
    /// draws in score space mapped through the coupling matrix.
    /// Deterministic given the seed.
    pub fn sample(&self, x: &[f64], k: usize, seed: u64) -> Result<DMatrix<f64>, LmcError> {
        let (mu, var) = self.score_posteriors(x)?;
        let sd: Vec<f64> = var.iter().map(|&v| v.sqrt()).collect();
        let m = self.a.nrows();
        let s = self.a.ncols();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = DMatrix::zeros(k, m);
        let mut u = vec![0.0; s];
        for row in 0..k {
            for (j, uj) in u.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *uj = mu[j] + sd[j] * z;
            }
            for i in 0..m {
                let mut v = 0.0;
                for (j, &uj) in u.iter().enumerate() {
                    v += self.a[(i, j)] * uj;
                }
                out[(row, i)] = v;
            }
        }
        Ok(out)
    }
}

/// Fit the coregionalization model from inputs `x` (n-by-d) and constraint
/// observations `c` (n-by-m, full column rank, n >= m >= 2).
///
/// The SVD sign ambiguity is pinned by flipping each singular pair so the
/// largest-magnitude entry of every score column is positive, which makes
/// refits of identical data reproducible.
pub fn lmc_fit(x: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<LmcModel, LmcError> {
    let (n, m) = (c.nrows(), c.ncols());
    if n < m || m < 2 {
        return Err(LmcError::TooFewObservations { n, m });
    }
    if x.nrows() != n {
        return Err(LmcError::RowMismatch { rows: x.nrows(), obs: n });
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(LmcError::NonFinite);
    }

    let svd = c.clone().svd(true, true);
    let mut u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = svd.singular_values;

    let ratio = sigma[m - 1] / sigma[0];
    if ratio.is_nan() || ratio <= RANK_TOLERANCE {
        return Err(LmcError::RankDeficient { ratio });
    }

    // A = V S, with the sign convention applied to each (u_j, v_j) pair.
    let mut a = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut arg = 0;
        for i in 0..n {
            if u[(i, j)].abs() > u[(arg, j)].abs() {
                arg = i;
            }
        }
        let flip = if u[(arg, j)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            u[(i, j)] *= flip;
        }
        for i in 0..m {
            a[(i, j)] = flip * v_t[(j, i)] * sigma[j];
        }
    }

    let score_gps: Result<Vec<GpModel>, GpError> = (0..m)
        .map(|j| {
            let y = DVector::from_fn(n, |i, _| u[(i, j)]);
            gp::fit(x, &y)
        })
        .collect();

    Ok(LmcModel {
        a,
        score_gps: score_gps?,
        scores: u,
        n_obs: n,
    })
}

/// Pearson correlation of constraints `i` and `j` over `n` uniform samples
/// of the problem domain. Deterministic given the seed.
pub fn correlation_estimate(
    p: &ConstrainedProblem,
    i: usize,
    j: usize,
    n: usize,
    seed: u64,
) -> Result<f64, LmcError> {
    let m = p.n_constraints();
    for index in [i, j] {
        if index >= m {
            return Err(LmcError::BadIndex { index, m });
        }
    }
    if n < 2 {
        return Err(LmcError::SampleTooSmall(n));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.dim();
    let (lower, upper) = (p.domain().lower().to_vec(), p.domain().upper().to_vec());
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut x = vec![0.0; d];
    for _ in 0..n {
        for k in 0..d {
            x[k] = lower[k] + rng.gen::<f64>() * (upper[k] - lower[k]);
        }
        a.push(p.constraint(i, &x));
        b.push(p.constraint(j, &x));
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for k in 0..n {
        let da = a[k] - ma;
        let db = b[k] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(LmcError::DegenerateSample);
    }
    if i == j {
        return Ok(1.0);
    }
    Ok(sab / (saa.sqrt() * sbb.sqrt()))
}
