//! Single-machine SDCA over all dual coordinates of all tasks, each step an
//! exact maximization of the global dual.

use rand::Rng;

use crate::error::Result;
use crate::linalg::{axpy, dot, norm_sq};
use crate::loss::CoordinateState;
use crate::objective::duality_gap;
use crate::problem::{DualState, MultiTaskProblem, RunConfig, TaskCovariance};
use crate::rng::round_rng;

use super::{alternate, should_eval, RoundTrace, RunOutput, Tracker};

fn ssdca_w_step(
    problem: &MultiTaskProblem,
    cov: &TaskCovariance,
    mut state: DualState,
    config: &RunConfig,
    tracker: &mut Tracker,
) -> Result<(DualState, Vec<RoundTrace>)> {
    let m = problem.m();
    let lambda = problem.lambda;
    let sigma = &cov.sigma;
    // offsets[i] = first global index of task i
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0usize);
    for t in &problem.tasks {
        offsets.push(offsets.last().unwrap() + t.n());
    }
    let n_total = offsets[m];
    // One round does as much work as one round of all workers together.
    let steps: usize = problem
        .tasks
        .iter()
        .map(|t| config.local_iters.for_task(t.n()))
        .sum();

    let mut trace = Vec::new();
    if duality_gap(problem, &state, sigma)?.gap <= config.gap_tol {
        return Ok((state, trace));
    }
    for t in 1..=config.t_max {
        tracker.comm_rounds += 1;
        let mut rng = round_rng(config.seed, tracker.comm_rounds, 0);
        for _ in 0..steps {
            let g = rng.random_range(0..n_total);
            let i = offsets.partition_point(|&o| o <= g) - 1;
            let j = g - offsets[i];
            let task = &problem.tasks[i];
            let x = task.row(j);
            let n_i = task.n();
            let cs = CoordinateState {
                a_cur: state.alpha[i][j],
                y: task.labels[j],
                wx: dot(&state.w[i], x),
                vx: 0.0,
                q: norm_sq(x),
                n_i,
                rho: 1.0,
                sigma_ii: sigma[(i, i)],
                lambda,
            };
            let delta = problem.loss.coordinate_delta(&cs)?;
            if delta == 0.0 {
                continue;
            }
            state.alpha[i][j] += delta;
            let scale = delta / n_i as f64;
            axpy(scale, x, &mut state.b[i]);
            for (k, w) in state.w.iter_mut().enumerate() {
                let s = sigma[(k, i)];
                if s != 0.0 {
                    axpy(s * scale / lambda, x, w);
                }
            }
        }
        tracker.coord_steps += steps as u64;

        if should_eval(t, config) {
            let report = duality_gap(problem, &state, sigma)?;
            trace.push(tracker.record(t, &report));
            if report.gap <= config.gap_tol {
                break;
            }
        }
    }
    Ok((state, trace))
}

/// Stochastic dual coordinate ascent on the full dual (no rho, no local
/// subproblems), alternated with the same Omega-step as [`super::run_dmtrl`].
pub fn run_ssdca(problem: &MultiTaskProblem, config: &RunConfig) -> Result<RunOutput> {
    alternate(problem, config, |cov, state, _rho, tracker| {
        ssdca_w_step(problem, cov, state, config, tracker)
    })
}
