//! Bulk-synchronous parameter-server simulation of the alternating W/Omega
//! optimization, plus the single-task and single-machine baselines.
//!
//! One coordinator (the caller's thread) owns the server state. Logical
//! workers, one per task, run on a rayon pool and talk to the server only
//! through encoded [`message`] frames. Every random stream is keyed by
//! `(seed, round, task)`, so the result does not depend on thread count or
//! scheduling.

pub mod message;
mod ssdca;
mod worker;

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{
    primal_objective, quad_form, report_from_partials, weights_from_duals, ObjectiveReport,
};
use crate::problem::{DualState, MultiTaskProblem, RhoMode, RunConfig, TaskCovariance};
use crate::server::{omega_step, rho_bound, AggregationState};

pub use message::{decode_msg, encode_msg, Message, ServerBroadcastMsg, WorkerUpdateMsg};
pub use ssdca::run_ssdca;
use worker::Worker;

/// Alternation stops once the primal objective improves by less than this between
/// consecutive outer iterations.
pub const OUTER_TOL: f64 = 1e-9;

/// One evaluated communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    /// Outer (alternating) iteration, 1-based.
    pub p: usize,
    /// Round within the W-step, 1-based.
    pub t: usize,
    pub dual: f64,
    pub primal: f64,
    pub gap: f64,
    /// Wall time since the start of the run.
    pub elapsed_ms: f64,
    /// Global rounds since the start of the run.
    pub comm_rounds: u64,
    /// Coordinate steps on the critical path since the start of the run:
    /// the slowest worker per round for the distributed runs, every step for
    /// the single-machine baseline.
    pub coord_steps: u64,
}

/// Result of a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    /// Weight columns w_i from the last W-step.
    pub w: Vec<Vec<f64>>,
    pub cov: TaskCovariance,
    /// Dual state, with `state.w` consistent with `cov`.
    pub state: DualState,
    pub trace: Vec<RoundTrace>,
    /// Primal objective after each outer iteration.
    pub objective: Vec<f64>,
    /// rho used in each outer iteration.
    pub rho: Vec<f64>,
}

/// Run-wide counters shared by consecutive W-steps.
#[derive(Debug, Clone)]
pub(crate) struct Tracker {
    pub p: usize,
    pub comm_rounds: u64,
    pub coord_steps: u64,
    start: Instant,
}

impl Tracker {
    pub fn new() -> Self {
        Tracker {
            p: 1,
            comm_rounds: 0,
            coord_steps: 0,
            start: Instant::now(),
        }
    }

    pub fn record(&self, t: usize, report: &ObjectiveReport) -> RoundTrace {
        RoundTrace {
            p: self.p,
            t,
            dual: report.dual,
            primal: report.primal,
            gap: report.gap,
            elapsed_ms: self.start.elapsed().as_secs_f64() * 1e3,
            comm_rounds: self.comm_rounds,
            coord_steps: self.coord_steps,
        }
    }
}

pub(crate) fn should_eval(t: usize, config: &RunConfig) -> bool {
    t == config.t_max || t.is_multiple_of(config.gap_stride.max(1))
}

/// Server half of the protocol: owns the aggregated summaries and weights,
/// emits broadcasts and admits exactly one update per task per round.
#[derive(Debug, Clone)]
pub struct Server<'a> {
    agg: AggregationState,
    sigma: &'a DMatrix<f64>,
    lambda: f64,
    rho: f64,
    round: u32,
}

impl<'a> Server<'a> {
    /// `round` is the number the next broadcast will carry.
    pub fn new(state: &DualState, sigma: &'a DMatrix<f64>, lambda: f64, rho: f64, round: u32) -> Self {
        Server {
            agg: AggregationState::new(state.b.clone(), state.w.clone()),
            sigma,
            lambda,
            rho,
            round,
        }
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn state(&self) -> &AggregationState {
        &self.agg
    }

    pub fn broadcast(&self) -> Vec<Vec<u8>> {
        self.agg
            .w
            .iter()
            .enumerate()
            .map(|(i, w)| {
                encode_msg(&Message::ServerBroadcast(ServerBroadcastMsg {
                    task_id: i as u32,
                    round: self.round,
                    w_i: w.clone(),
                    sigma_ii: self.sigma[(i, i)],
                    rho: self.rho,
                }))
            })
            .collect()
    }

    /// Barrier: decode all updates of the current round, then aggregate.
    /// Returns the summed local gains.
    pub fn collect(&mut self, frames: &[Vec<u8>]) -> Result<f64> {
        let m = self.agg.b.len();
        let mut deltas: Vec<Option<Vec<f64>>> = vec![None; m];
        let mut gain = 0.0;
        for frame in frames {
            let msg = match decode_msg(frame)? {
                Message::WorkerUpdate(u) => u,
                Message::ServerBroadcast(_) => return Err(Error::BadTag(2)),
            };
            if msg.round != self.round {
                return Err(Error::RoundMismatch {
                    expected: self.round,
                    found: msg.round,
                });
            }
            let i = msg.task_id as usize;
            if i >= m || deltas[i].is_some() {
                return Err(Error::BadConfig(format!(
                    "unexpected update for task {i} in round {}",
                    self.round
                )));
            }
            gain += msg.local_obj_gain;
            deltas[i] = Some(msg.delta_b);
        }
        self.agg.aggregate_round(&deltas, self.sigma, self.lambda)?;
        self.round += 1;
        Ok(gain)
    }
}

pub(crate) fn build_pool(threads: usize, m: usize) -> Result<rayon::ThreadPool> {
    let n = if threads == 0 {
        let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
        cores.min(m).max(1)
    } else {
        threads
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::BadConfig(format!("thread pool: {e}")))
}

/// First error by task index, so aborts do not depend on scheduling.
fn first_err<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn round_u32(r: u64) -> Result<u32> {
    u32::try_from(r).map_err(|_| Error::BadConfig("round counter overflow".into()))
}

fn evaluate(
    pool: &rayon::ThreadPool,
    workers: &[Worker],
    server: &Server,
    lambda: f64,
) -> Result<ObjectiveReport> {
    let frames = server.broadcast();
    let partials = pool.install(|| {
        workers
            .par_iter()
            .zip(&frames)
            .map(|(w, f)| w.gap_partial(f))
            .collect::<Vec<_>>()
    });
    let partials = first_err(partials)?;
    Ok(report_from_partials(
        &partials,
        quad_form(&server.state().b, server.sigma),
        lambda,
    ))
}

pub(crate) fn w_step_inner(
    problem: &MultiTaskProblem,
    cov: &TaskCovariance,
    state: DualState,
    config: &RunConfig,
    rho: f64,
    tracker: &mut Tracker,
    pool: &rayon::ThreadPool,
) -> Result<(DualState, Vec<RoundTrace>)> {
    let hs: Vec<usize> = problem
        .tasks
        .iter()
        .map(|t| config.local_iters.for_task(t.n()))
        .collect();
    let critical = hs.iter().copied().max().unwrap_or(0) as u64;
    let mut server = Server::new(&state, &cov.sigma, problem.lambda, rho, round_u32(tracker.comm_rounds + 1)?);
    let mut workers: Vec<Worker> = problem
        .tasks
        .iter()
        .zip(state.alpha)
        .zip(&hs)
        .enumerate()
        .map(|(i, ((task, alpha), &h))| {
            Worker::new(i, task, alpha, problem.loss, problem.lambda, h, config.eta, config.seed)
        })
        .collect();

    let mut trace = Vec::new();
    let initial = evaluate(pool, &workers, &server, problem.lambda)?;
    if initial.gap > config.gap_tol {
        for t in 1..=config.t_max {
            let frames = server.broadcast();
            let updates = pool.install(|| {
                workers
                    .par_iter_mut()
                    .zip(&frames)
                    .map(|(w, f)| w.local_round(f))
                    .collect::<Vec<_>>()
            });
            let updates = first_err(updates)?;
            server.collect(&updates)?;
            tracker.comm_rounds += 1;
            tracker.coord_steps += critical;

            if should_eval(t, config) {
                let report = evaluate(pool, &workers, &server, problem.lambda)?;
                trace.push(tracker.record(t, &report));
                if report.gap <= config.gap_tol {
                    break;
                }
            }
        }
    }

    let agg = server.agg;
    let state = DualState {
        alpha: workers.into_iter().map(Worker::into_alpha).collect(),
        b: agg.b,
        w: agg.w,
    };
    Ok((state, trace))
}

/// One W-step: up to `config.t_max` bulk-synchronous rounds with the
/// covariance held fixed, stopping early once the gap reaches `gap_tol`.
pub fn run_w_step(
    problem: &MultiTaskProblem,
    cov: &TaskCovariance,
    state: DualState,
    config: &RunConfig,
    rho: f64,
) -> Result<(DualState, Vec<RoundTrace>)> {
    config.validate(problem.m())?;
    check_state(problem, cov, &state)?;
    let pool = build_pool(config.threads, problem.m())?;
    let mut tracker = Tracker::new();
    w_step_inner(problem, cov, state, config, rho, &mut tracker, &pool)
}

fn check_state(problem: &MultiTaskProblem, cov: &TaskCovariance, state: &DualState) -> Result<()> {
    let m = problem.m();
    if cov.m() != m || state.alpha.len() != m || state.b.len() != m || state.w.len() != m {
        return Err(Error::DimensionMismatch {
            task: 0,
            expected: m,
            found: state.alpha.len().min(cov.m()),
        });
    }
    for (i, (t, a)) in problem.tasks.iter().zip(&state.alpha).enumerate() {
        if a.len() != t.n() {
            return Err(Error::DimensionMismatch {
                task: i,
                expected: t.n(),
                found: a.len(),
            });
        }
    }
    Ok(())
}

pub(crate) fn rho_for(cov: &TaskCovariance, config: &RunConfig) -> Result<f64> {
    match config.rho_mode {
        RhoMode::Bound => rho_bound(&cov.sigma, config.eta),
        RhoMode::Fixed(r) if r > 0.0 => Ok(r),
        RhoMode::Fixed(r) => Err(Error::BadConfig(format!("rho={r} must be positive"))),
    }
}

/// Outer loop shared by the distributed and single-machine solvers.
pub(crate) fn alternate<F>(problem: &MultiTaskProblem, config: &RunConfig, mut w_step: F) -> Result<RunOutput>
where
    F: FnMut(&TaskCovariance, DualState, f64, &mut Tracker) -> Result<(DualState, Vec<RoundTrace>)>,
{
    config.validate(problem.m())?;
    let mut cov = TaskCovariance::uncorrelated(problem.m());
    let mut state = DualState::zeros(problem);
    let mut tracker = Tracker::new();
    let mut trace = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut rhos = Vec::new();
    let mut w_out = state.w.clone();

    for p in 1..=config.p_max {
        tracker.p = p;
        let rho = rho_for(&cov, config)?;
        rhos.push(rho);
        let (next, tr) = w_step(&cov, state, rho, &mut tracker)?;
        state = next;
        trace.extend(tr);
        w_out = state.w.clone();

        if config.omega_step {
            match omega_step(&w_out, None) {
                Ok(c) => cov = c,
                Err(Error::ZeroWeights) => {}
                Err(e) => return Err(e),
            }
        }
        let obj = primal_objective(problem, &w_out, &cov.omega);
        state.w = weights_from_duals(&state.b, &cov.sigma, problem.lambda);
        let stalled = objective.last().is_some_and(|&prev| prev - obj < OUTER_TOL);
        objective.push(obj);
        if stalled {
            break;
        }
    }

    Ok(RunOutput {
        w: w_out,
        cov,
        state,
        trace,
        objective,
        rho: rhos,
    })
}

/// Distributed alternating optimization: W-steps on the worker pool, the
/// Omega-step and rho refresh on the server.
pub fn run_dmtrl(problem: &MultiTaskProblem, config: &RunConfig) -> Result<RunOutput> {
    let pool = build_pool(config.threads, problem.m())?;
    alternate(problem, config, |cov, state, rho, tracker| {
        w_step_inner(problem, cov, state, config, rho, tracker, &pool)
    })
}

/// Independent per-task learning: Sigma stays at I/m, no Omega-step, one
/// W-step.
pub fn run_stl(problem: &MultiTaskProblem, config: &RunConfig) -> Result<RunOutput> {
    let cfg = RunConfig {
        omega_step: false,
        p_max: 1,
        ..config.clone()
    };
    run_dmtrl(problem, &cfg)
}
