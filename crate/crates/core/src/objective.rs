//! Primal and dual objectives, the dual quadratic form, and the
//! duality-gap certificate.
//!
//! The n×n kernel K is never formed. With b_i = (1/n_i) sum_j alpha_j x_j,
//! alpha^T K alpha = sum_{i,i'} sigma_ii' <b_i, b_i'>, and the weights induced
//! by alpha are w_i = (1/lambda) sum_i' sigma_ii' b_i'.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::problem::{DualState, MultiTaskProblem, TaskData};
use crate::loss::Loss;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    /// P(W(alpha)), stored as dual + gap.
    pub primal: f64,
    pub dual: f64,
    /// Per-sample gap decomposition.
    pub gap: f64,
    /// Mean training loss of each task under W(alpha).
    pub per_task_loss: Vec<f64>,
    /// alpha^T K alpha
    pub quad: f64,
}

/// sum_{i,i'} sigma_ii' <b_i, b_i'>
pub fn quad_form(b: &[Vec<f64>], sigma: &DMatrix<f64>) -> f64 {
    let m = b.len();
    let mut total = 0.0;
    for i in 0..m {
        total += sigma[(i, i)] * dot(&b[i], &b[i]);
        for k in (i + 1)..m {
            let s = sigma[(i, k)] + sigma[(k, i)];
            if s != 0.0 {
                total += s * dot(&b[i], &b[k]);
            }
        }
    }
    total
}

/// w_i = (1/lambda) sum_i' sigma_ii' b_i'
pub fn weights_from_duals(b: &[Vec<f64>], sigma: &DMatrix<f64>, lambda: f64) -> Vec<Vec<f64>> {
    let m = b.len();
    let d = b.first().map_or(0, Vec::len);
    (0..m)
        .map(|i| {
            let mut w = vec![0.0; d];
            for (k, bk) in b.iter().enumerate() {
                let s = sigma[(i, k)];
                if s != 0.0 {
                    axpy(s / lambda, bk, &mut w);
                }
            }
            w
        })
        .collect()
}

/// tr(W Omega W^T) with W's columns given as vectors.
pub fn trace_regularizer(w: &[Vec<f64>], omega: &DMatrix<f64>) -> f64 {
    let m = w.len();
    let mut total = 0.0;
    for i in 0..m {
        for k in 0..m {
            let o = omega[(i, k)];
            if o != 0.0 {
                total += o * dot(&w[i], &w[k]);
            }
        }
    }
    total
}

fn mean_loss(loss: Loss, task: &TaskData, w: &[f64]) -> f64 {
    task.rows()
        .zip(&task.labels)
        .map(|(x, &y)| loss.eval(dot(w, x), y))
        .sum::<f64>()
        / task.n() as f64
}

/// sum_i (1/n_i) sum_j l(w_i . x_j) + (lambda/2) tr(W Omega W^T)
pub fn primal_objective(p: &MultiTaskProblem, w: &[Vec<f64>], omega: &DMatrix<f64>) -> f64 {
    let empirical: f64 = p
        .tasks
        .iter()
        .zip(w)
        .map(|(t, wi)| mean_loss(p.loss, t, wi))
        .sum();
    empirical + 0.5 * p.lambda * trace_regularizer(w, omega)
}

/// (1/n_i) sum_j l*(-alpha_j), or the first sample outside the domain.
pub fn conjugate_mean(loss: Loss, task: &TaskData, alpha: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (j, (&a, &y)) in alpha.iter().zip(&task.labels).enumerate() {
        total += loss
            .conjugate(-a, y)
            .finite()
            .ok_or(Error::ConjugateDomainViolation {
                task: task.task_id,
                index: j,
                alpha: a,
            })?;
    }
    Ok(total / task.n() as f64)
}

/// D(alpha) = -(1/(2 lambda)) alpha^T K alpha - sum_i (1/n_i) sum_j l*(-alpha_j)
pub fn dual_objective(
    p: &MultiTaskProblem,
    alpha: &[Vec<f64>],
    b: &[Vec<f64>],
    sigma: &DMatrix<f64>,
) -> Result<f64> {
    let mut conj = 0.0;
    for (t, a) in p.tasks.iter().zip(alpha) {
        conj += conjugate_mean(p.loss, t, a)?;
    }
    Ok(-quad_form(b, sigma) / (2.0 * p.lambda) - conj)
}

/// One task's share of the gap certificate; computable on a worker that
/// holds only its own data, dual block and weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskGapPartial {
    /// (1/n_i) sum_j l(w_i . x_j)
    pub loss_mean: f64,
    /// (1/n_i) sum_j l*(-alpha_j)
    pub conj_mean: f64,
    /// (1/n_i) sum_j alpha_j w_i . x_j
    pub cross_mean: f64,
}

impl TaskGapPartial {
    pub fn gap(&self) -> f64 {
        self.loss_mean + self.conj_mean + self.cross_mean
    }
}

pub fn task_gap_partial(
    loss: Loss,
    task: &TaskData,
    alpha: &[f64],
    w: &[f64],
) -> Result<TaskGapPartial> {
    let mut loss_sum = 0.0;
    let mut conj_sum = 0.0;
    let mut cross_sum = 0.0;
    for (j, ((x, &y), &a)) in task.rows().zip(&task.labels).zip(alpha).enumerate() {
        let wx = dot(w, x);
        loss_sum += loss.eval(wx, y);
        conj_sum += loss
            .conjugate(-a, y)
            .finite()
            .ok_or(Error::ConjugateDomainViolation {
                task: task.task_id,
                index: j,
                alpha: a,
            })?;
        cross_sum += a * wx;
    }
    let n = task.n() as f64;
    Ok(TaskGapPartial {
        loss_mean: loss_sum / n,
        conj_mean: conj_sum / n,
        cross_mean: cross_sum / n,
    })
}

/// Combine per-task partials with the server's quadratic form.
pub fn report_from_partials(partials: &[TaskGapPartial], quad: f64, lambda: f64) -> ObjectiveReport {
    let gap: f64 = partials.iter().map(TaskGapPartial::gap).sum();
    let conj: f64 = partials.iter().map(|p| p.conj_mean).sum();
    let dual = -quad / (2.0 * lambda) - conj;
    ObjectiveReport {
        primal: dual + gap,
        dual,
        gap,
        per_task_loss: partials.iter().map(|p| p.loss_mean).collect(),
        quad,
    }
}

/// Gap certificate G(alpha) = sum_i (1/n_i) sum_j [ l(w_i.x_j) + l*(-alpha_j) + alpha_j w_i.x_j ].
pub fn duality_gap(
    p: &MultiTaskProblem,
    state: &DualState,
    sigma: &DMatrix<f64>,
) -> Result<ObjectiveReport> {
    let partials = p
        .tasks
        .iter()
        .zip(&state.alpha)
        .zip(&state.w)
        .map(|((t, a), w)| task_gap_partial(p.loss, t, a, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(report_from_partials(&partials, quad_form(&state.b, sigma), p.lambda))
}
