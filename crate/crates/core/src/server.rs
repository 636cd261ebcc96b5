//! Server-side computation: aggregation of worker updates, the Omega-step,
//! the separability bound on rho, and round-count diagnostics.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::problem::TaskCovariance;

/// Relative eigenvalue floor used when `omega_step` is given no explicit eps.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationState {
    pub b: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub round: u64,
}

impl AggregationState {
    pub fn new(b: Vec<Vec<f64>>, w: Vec<Vec<f64>>) -> Self {
        AggregationState { b, w, round: 0 }
    }

    /// Apply one synchronous round of eta-scaled summary deltas:
    /// b_i += db_i and w_i += (1/lambda) sum_i' sigma_ii' db_i'.
    pub fn aggregate_round(
        &mut self,
        deltas: &[Option<Vec<f64>>],
        sigma: &DMatrix<f64>,
        lambda: f64,
    ) -> Result<()> {
        let m = self.b.len();
        for i in 0..m {
            if deltas.get(i).is_none_or(Option::is_none) {
                return Err(Error::MissingDelta { task: i });
            }
        }
        let deltas: Vec<&Vec<f64>> = deltas.iter().take(m).flatten().collect();
        for (b, db) in self.b.iter_mut().zip(&deltas) {
            axpy(1.0, db, b);
        }
        for (i, w) in self.w.iter_mut().enumerate() {
            for (k, db) in deltas.iter().enumerate() {
                let s = sigma[(i, k)];
                if s != 0.0 {
                    axpy(s / lambda, db, w);
                }
            }
        }
        self.round += 1;
        Ok(())
    }
}

/// Gram matrix W^T W of weight columns.
pub fn weight_gram(w: &[Vec<f64>]) -> DMatrix<f64> {
    let m = w.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for k in i..m {
            let v = dot(&w[i], &w[k]);
            g[(i, k)] = v;
            g[(k, i)] = v;
        }
    }
    g
}

/// Minimize tr(W Omega W^T) subject to Omega^-1 PSD with unit trace.
///
/// With W^T W = U diag(s) U^T the minimizer is Sigma = (W^T W)^{1/2} / tr(.).
/// Square-root eigenvalues below `eps` are raised to `eps` in both Sigma and
/// Omega so the pair stays mutually inverse and every sigma_ii is positive.
/// `eps = None` uses 1e-12 * max(largest sqrt eigenvalue, 1).
pub fn omega_step(w: &[Vec<f64>], eps: Option<f64>) -> Result<TaskCovariance> {
    let m = w.len();
    let gram = weight_gram(w);
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadConfig("non-finite weights".into()));
    }
    let eig = SymmetricEigen::new(gram);
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&s| s.max(0.0).sqrt()).collect();
    let top = roots.iter().copied().fold(0.0, f64::max);
    let eps = eps.unwrap_or(DEFAULT_EIG_FLOOR * top.max(1.0));
    if roots.iter().all(|&r| r <= eps) {
        return Err(Error::ZeroWeights);
    }
    let floored: Vec<f64> = roots.iter().map(|&r| r.max(eps)).collect();
    let total: f64 = floored.iter().sum();
    let u = &eig.eigenvectors;
    let build = |diag: &dyn Fn(usize) -> f64| {
        let mut out = DMatrix::zeros(m, m);
        for k in 0..m {
            let s = diag(k);
            let col = u.column(k);
            for i in 0..m {
                for j in i..m {
                    let v = s * col[i] * col[j];
                    out[(i, j)] += v;
                    if i != j {
                        out[(j, i)] += v;
                    }
                }
            }
        }
        out
    };
    let sigma = build(&|k| floored[k] / total);
    let omega = build(&|k| total / floored[k]);
    Ok(TaskCovariance { sigma, omega })
}

/// eta * max_i sum_i' |sigma_ii'| / sigma_ii
pub fn rho_bound(sigma: &DMatrix<f64>, eta: f64) -> Result<f64> {
    let m = sigma.nrows();
    let mut worst = 0.0f64;
    for i in 0..m {
        let diag = sigma[(i, i)];
        if !(diag > 0.0) {
            return Err(Error::DegenerateDiagonal { task: i, value: diag });
        }
        let row: f64 = (0..m).map(|k| sigma[(i, k)].abs()).sum();
        worst = worst.max(row / diag);
    }
    Ok(eta * worst)
}

/// Upper bound on pi_i when every ||x||^2 <= 1.
pub fn pi_upper(sigma_ii: f64, n_i: usize) -> f64 {
    sigma_ii / n_i as f64
}

/// Inputs to the smooth-loss round bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundBoundInput {
    pub mu: f64,
    pub lambda: f64,
    pub rho: f64,
    pub n_star: f64,
    pub pi_star: f64,
    pub eta: f64,
    pub theta: f64,
    pub eps_target: f64,
    pub m: usize,
}

/// Rounds sufficient for expected dual suboptimality eps_target:
/// (1/(eta (1-Theta))) ((lambda mu + rho n* pi*) / (lambda mu)) log(m / eps).
/// Infinite as Theta approaches 1. Diagnostic only.
pub fn theoretical_round_bound(r: &RoundBoundInput) -> f64 {
    if r.theta >= 1.0 {
        return f64::INFINITY;
    }
    let contraction = r.eta * (1.0 - r.theta);
    let cond = (r.lambda * r.mu + r.rho * r.n_star * r.pi_star) / (r.lambda * r.mu);
    cond * (r.m as f64 / r.eps_target).ln() / contraction
}
