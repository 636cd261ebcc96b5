//! Domain types shared by every solver component.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, rel_diff};
use crate::loss::Loss;

/// One task's training data. Features are stored row-major, already passed
/// through the problem's [`FeatureMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskData {
    pub task_id: usize,
    pub d: usize,
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
}

impl TaskData {
    pub fn new(task_id: usize, d: usize, features: Vec<f64>, labels: Vec<f64>) -> Self {
        TaskData {
            task_id,
            d,
            features,
            labels,
        }
    }

    /// Build from a list of rows.
    pub fn from_rows(task_id: usize, rows: &[Vec<f64>], labels: Vec<f64>) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let features = rows.iter().flatten().copied().collect();
        TaskData::new(task_id, d, features, labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.d..(j + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d.max(1))
    }

    /// max_j ||x_j||^2
    pub fn q_max(&self) -> f64 {
        self.rows().map(crate::linalg::norm_sq).fold(0.0, f64::max)
    }
}

/// Feature map applied row-wise before solving. Only the linear (identity)
/// map ships; new variants must preserve row count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMap {
    #[default]
    Identity,
}

impl FeatureMap {
    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity => row.to_vec(),
        }
    }

    pub fn apply(&self, task: TaskData) -> TaskData {
        match self {
            FeatureMap::Identity => task,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTaskProblem {
    pub tasks: Vec<TaskData>,
    pub d: usize,
    pub lambda: f64,
    pub loss: Loss,
    pub feature_map: FeatureMap,
}

impl MultiTaskProblem {
    /// Assemble a problem; the feature dimension is taken from the first task.
    /// Call [`validate_problem`] before solving.
    pub fn new(tasks: Vec<TaskData>, lambda: f64, loss: Loss) -> Self {
        let d = tasks.first().map_or(0, |t| t.d);
        MultiTaskProblem {
            tasks,
            d,
            lambda,
            loss,
            feature_map: FeatureMap::Identity,
        }
    }

    pub fn with_feature_map(mut self, map: FeatureMap) -> Self {
        self.tasks = self.tasks.into_iter().map(|t| map.apply(t)).collect();
        self.feature_map = map;
        self
    }

    pub fn m(&self) -> usize {
        self.tasks.len()
    }

    pub fn total_samples(&self) -> usize {
        self.tasks.iter().map(TaskData::n).sum()
    }
}

/// Check every structural invariant of a problem.
pub fn validate_problem(p: MultiTaskProblem) -> Result<MultiTaskProblem> {
    if p.tasks.is_empty() {
        return Err(Error::NoTasks);
    }
    if !(p.lambda > 0.0) || !p.lambda.is_finite() {
        return Err(Error::BadLambda(p.lambda));
    }
    for (i, t) in p.tasks.iter().enumerate() {
        if t.n() == 0 {
            return Err(Error::EmptyTask { task: i });
        }
        if t.d != p.d || t.features.len() != t.n() * t.d {
            let found = if t.d != p.d {
                t.d
            } else {
                t.features.len() / t.n()
            };
            return Err(Error::DimensionMismatch {
                task: i,
                expected: p.d,
                found,
            });
        }
        if p.loss == Loss::Hinge {
            if let Some((index, &value)) = t
                .labels
                .iter()
                .enumerate()
                .find(|(_, &y)| y != 1.0 && y != -1.0)
            {
                return Err(Error::BadLabel {
                    task: i,
                    index,
                    value,
                });
            }
        }
    }
    Ok(p)
}

/// The task covariance pair (Sigma, Omega = Sigma^-1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCovariance {
    pub sigma: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

impl TaskCovariance {
    /// Sigma = I/m, Omega = m I.
    pub fn uncorrelated(m: usize) -> Self {
        let mf = m as f64;
        TaskCovariance {
            sigma: DMatrix::identity(m, m) / mf,
            omega: DMatrix::identity(m, m) * mf,
        }
    }

    pub fn m(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma_ii(&self, i: usize) -> f64 {
        self.sigma[(i, i)]
    }

    /// Sigma rescaled to unit diagonal.
    pub fn correlation(&self) -> DMatrix<f64> {
        correlation_of(&self.sigma)
    }
}

pub fn correlation_of(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let m = sigma.nrows();
    DMatrix::from_fn(m, m, |i, j| {
        let s = (sigma[(i, i)] * sigma[(j, j)]).sqrt();
        if s > 0.0 {
            sigma[(i, j)] / s
        } else if i == j {
            1.0
        } else {
            0.0
        }
    })
}

/// Dual variables with their per-task summaries and the primal weights they
/// induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub alpha: Vec<Vec<f64>>,
    /// b_i = (1/n_i) sum_j alpha_j^i x_j^i
    pub b: Vec<Vec<f64>>,
    /// w_i = (1/lambda) sum_i' sigma_ii' b_i'
    pub w: Vec<Vec<f64>>,
}

impl DualState {
    pub fn zeros(p: &MultiTaskProblem) -> Self {
        DualState {
            alpha: p.tasks.iter().map(|t| vec![0.0; t.n()]).collect(),
            b: vec![vec![0.0; p.d]; p.m()],
            w: vec![vec![0.0; p.d]; p.m()],
        }
    }

    /// Fresh b from alpha.
    pub fn summaries(p: &MultiTaskProblem, alpha: &[Vec<f64>]) -> Vec<Vec<f64>> {
        p.tasks
            .iter()
            .zip(alpha)
            .map(|(t, a)| {
                let mut b = vec![0.0; t.d];
                for (j, &aj) in a.iter().enumerate() {
                    if aj != 0.0 {
                        axpy(aj, t.row(j), &mut b);
                    }
                }
                let inv = 1.0 / t.n() as f64;
                b.iter_mut().for_each(|v| *v *= inv);
                b
            })
            .collect()
    }

    /// Rebuild b and w from alpha.
    pub fn from_alpha(
        p: &MultiTaskProblem,
        alpha: Vec<Vec<f64>>,
        sigma: &DMatrix<f64>,
    ) -> Self {
        let b = Self::summaries(p, &alpha);
        let w = crate::objective::weights_from_duals(&b, sigma, p.lambda);
        DualState { alpha, b, w }
    }

    /// Largest relative deviation of the stored b from a recomputation.
    pub fn b_drift(&self, p: &MultiTaskProblem) -> f64 {
        Self::summaries(p, &self.alpha)
            .iter()
            .zip(&self.b)
            .map(|(fresh, stored)| rel_diff(stored, fresh))
            .fold(0.0, f64::max)
    }

    /// Largest relative deviation of the stored w from w(b, Sigma).
    pub fn w_drift(&self, sigma: &DMatrix<f64>, lambda: f64) -> f64 {
        crate::objective::weights_from_duals(&self.b, sigma, lambda)
            .iter()
            .zip(&self.w)
            .map(|(fresh, stored)| rel_diff(stored, fresh))
            .fold(0.0, f64::max)
    }

    pub fn flat_alpha(&self) -> Vec<f64> {
        self.alpha.iter().flatten().copied().collect()
    }
}

/// How many local coordinate steps a worker takes per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LocalIters {
    Fixed(usize),
    /// `ceil(fraction * n_i)`, at least one.
    PerSample(f64),
}

impl LocalIters {
    pub fn for_task(&self, n_i: usize) -> usize {
        match *self {
            LocalIters::Fixed(h) => h,
            LocalIters::PerSample(f) => ((f * n_i as f64).ceil() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RhoMode {
    /// Recompute from the covariance after every Omega-step.
    Bound,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Aggregation parameter in [1/m, 1].
    pub eta: f64,
    /// Max global rounds per W-step.
    pub t_max: usize,
    pub local_iters: LocalIters,
    /// Max alternating iterations.
    pub p_max: usize,
    pub gap_tol: f64,
    pub seed: u64,
    pub rho_mode: RhoMode,
    /// Worker pool size; 0 picks one thread per task capped at available cores.
    pub threads: usize,
    /// When false the covariance stays at I/m.
    pub omega_step: bool,
    /// Evaluate the duality gap every `gap_stride` rounds (and on the last).
    pub gap_stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eta: 1.0,
            t_max: 100,
            local_iters: LocalIters::PerSample(1.0),
            p_max: 5,
            gap_tol: 1e-6,
            seed: 0,
            rho_mode: RhoMode::Bound,
            threads: 0,
            omega_step: true,
            gap_stride: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        let lo = 1.0 / m as f64;
        if !(self.eta >= lo - 1e-15 && self.eta <= 1.0) {
            return Err(Error::BadConfig(format!(
                "eta={} must lie in [1/m, 1] = [{lo}, 1]",
                self.eta
            )));
        }
        if self.t_max == 0 || self.p_max == 0 {
            return Err(Error::BadConfig("T and P must be at least 1".into()));
        }
        match self.local_iters {
            LocalIters::Fixed(0) => {
                return Err(Error::BadConfig("H must be at least 1".into()));
            }
            LocalIters::PerSample(f) if !(f > 0.0) => {
                return Err(Error::BadConfig("H fraction must be positive".into()));
            }
            _ => {}
        }
        if !(self.gap_tol >= 0.0) {
            return Err(Error::BadConfig("gap_tol must be nonnegative".into()));
        }
        if let RhoMode::Fixed(r) = self.rho_mode {
            if !(r > 0.0) {
                return Err(Error::BadConfig("fixed rho must be positive".into()));
            }
        }
        if self.gap_stride == 0 {
            return Err(Error::BadConfig("gap_stride must be at least 1".into()));
        }
        Ok(())
    }
}
