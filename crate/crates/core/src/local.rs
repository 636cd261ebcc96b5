//! Worker-side computation: the local dual subproblem and Local SDCA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq};
use crate::loss::{CoordinateState, Loss};
use crate::problem::TaskData;

/// What a worker knows at the start of a round.
#[derive(Debug, Clone, Copy)]
pub struct LocalRoundInput<'a> {
    pub alpha_block: &'a [f64],
    pub w_i: &'a [f64],
    pub sigma_ii: f64,
    pub rho: f64,
    /// Coordinate steps this round.
    pub h: usize,
    pub rng_seed: u64,
    pub loss: Loss,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRoundOutput {
    pub delta_alpha: Vec<f64>,
    /// (1/n_i) sum_j delta_alpha_j x_j, before eta scaling.
    pub delta_b: Vec<f64>,
    /// D_i^rho(delta_alpha) - D_i^rho(0)
    pub local_obj_gain: f64,
}

impl LocalRoundInput<'_> {
    fn check(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.sigma_ii > 0.0) {
            return Err(Error::NonPositiveCurvature {
                q: f64::NAN,
                scale: self.rho * self.sigma_ii,
            });
        }
        Ok(())
    }
}

/// Gain of the local objective from 0 to `delta`, given v = sum_j delta_j x_j.
fn gain(input: &LocalRoundInput, data: &TaskData, delta: &[f64], v: &[f64]) -> Result<f64> {
    let n = data.n() as f64;
    let mut conj_change = 0.0;
    for (j, (&dj, (&a, &y))) in delta
        .iter()
        .zip(input.alpha_block.iter().zip(&data.labels))
        .enumerate()
    {
        if dj == 0.0 {
            continue;
        }
        let conj = |u: f64| {
            input
                .loss
                .conjugate(u, y)
                .finite()
                .ok_or(Error::ConjugateDomainViolation {
                    task: data.task_id,
                    index: j,
                    alpha: -u,
                })
        };
        conj_change += conj(-(a + dj))? - conj(-a)?;
    }
    let quad = input.rho * input.sigma_ii / (2.0 * input.lambda * n * n) * norm_sq(v);
    Ok(-conj_change / n - dot(input.w_i, v) / n - quad)
}

/// Run `steps` coordinate steps; returns (delta_alpha, v).
fn sdca_steps(input: &LocalRoundInput, data: &TaskData, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    input.check()?;
    let n = data.n();
    let mut rng = ChaCha8Rng::seed_from_u64(input.rng_seed);
    let mut delta = vec![0.0; n];
    let mut v = vec![0.0; data.d];
    for _ in 0..steps {
        let j = rng.random_range(0..n);
        let x = data.row(j);
        let state = CoordinateState {
            a_cur: input.alpha_block[j] + delta[j],
            y: data.labels[j],
            wx: dot(input.w_i, x),
            vx: dot(&v, x),
            q: norm_sq(x),
            n_i: n,
            rho: input.rho,
            sigma_ii: input.sigma_ii,
            lambda: input.lambda,
        };
        let step = input.loss.coordinate_delta(&state)?;
        if step != 0.0 {
            delta[j] += step;
            axpy(step, x, &mut v);
        }
    }
    Ok((delta, v))
}

/// Local SDCA: `input.h` uniformly sampled exact coordinate maximizations of
/// the local subproblem.
pub fn local_sdca(input: &LocalRoundInput, data: &TaskData) -> Result<LocalRoundOutput> {
    if input.h == 0 {
        return Err(Error::BadConfig("H must be at least 1".into()));
    }
    let (delta_alpha, v) = sdca_steps(input, data, input.h)?;
    let local_obj_gain = gain(input, data, &delta_alpha, &v)?;
    let inv = 1.0 / data.n() as f64;
    Ok(LocalRoundOutput {
        delta_alpha,
        delta_b: v.iter().map(|x| x * inv).collect(),
        local_obj_gain,
    })
}

/// D_i^rho(delta_alpha; w_i, alpha_[i]) including the constant
/// -(1/(2 lambda m)) alpha^T K alpha term.
pub fn local_subproblem_objective(
    delta_alpha: &[f64],
    input: &LocalRoundInput,
    data: &TaskData,
    quad_snapshot: f64,
    m: usize,
) -> Result<f64> {
    let n = data.n() as f64;
    let mut conj = 0.0;
    let mut v = vec![0.0; data.d];
    for (j, ((&dj, &a), &y)) in delta_alpha
        .iter()
        .zip(input.alpha_block)
        .zip(&data.labels)
        .enumerate()
    {
        conj += input
            .loss
            .conjugate(-(a + dj), y)
            .finite()
            .ok_or(Error::ConjugateDomainViolation {
                task: data.task_id,
                index: j,
                alpha: a + dj,
            })?;
        if dj != 0.0 {
            axpy(dj, data.row(j), &mut v);
        }
    }
    Ok(-conj / n
        - dot(input.w_i, &v) / n
        - quad_snapshot / (2.0 * input.lambda * m as f64)
        - input.rho * input.sigma_ii / (2.0 * input.lambda * n * n) * norm_sq(&v))
}

/// Empirical Theta: (D* - D(delta_H)) / (D* - D(0)), D* from a run of
/// `reference_iters` steps on the same random stream. H = 0 is accepted here
/// and yields the upper clamp.
pub fn estimate_theta(input: &LocalRoundInput, data: &TaskData, reference_iters: usize) -> Result<f64> {
    let (ref_delta, ref_v) = sdca_steps(input, data, reference_iters)?;
    let best = gain(input, data, &ref_delta, &ref_v)?;
    if best <= 1e-14 {
        return Ok(0.0);
    }
    let (delta, v) = sdca_steps(input, data, input.h)?;
    let reached = gain(input, data, &delta, &v)?;
    Ok(((best - reached) / best).clamp(0.0, 1.0 - f64::EPSILON))
}

/// Local steps sufficient for Theta-approximation with a smooth loss:
/// log(1/Theta) (rho sigma_ii q_max + mu lambda n_i) / (mu lambda).
pub fn suggested_iterations(
    loss: Loss,
    theta_target: f64,
    rho: f64,
    sigma_ii: f64,
    q_max: f64,
    lambda: f64,
    n_i: usize,
) -> Result<u64> {
    let mu = loss
        .smoothness()
        .ok_or(Error::NotComputable("the Lipschitz-loss bound needs the local optimum"))?;
    if !(theta_target > 0.0 && theta_target <= 1.0) {
        return Err(Error::BadConfig(format!("theta must be in (0, 1], got {theta_target}")));
    }
    let bound = (1.0 / theta_target).ln() * (rho * sigma_ii * q_max + mu * lambda * n_i as f64)
        / (mu * lambda);
    // absorb rounding in log(1/Theta) before taking the ceiling
    Ok((bound * (1.0 - 1e-12)).ceil().max(0.0) as u64)
}
