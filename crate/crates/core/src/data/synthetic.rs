//! Planted-structure multi-task generators.
//!
//! A few parent weight vectors are drawn; every other task copies a parent,
//! possibly negated, plus Gaussian noise. Parents sit at evenly spaced task
//! indices (`floor(k * m / n_parents)`), which for m=16 and three parents
//! gives tasks 1, 6 and 11 in one-based numbering.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::loss::Loss;
use crate::problem::{validate_problem, MultiTaskProblem, TaskData};
use crate::rng::stream;

const PURPOSE_WEIGHTS: u64 = 1;
const PURPOSE_TASK: u64 = 1000;
const PURPOSE_SPLIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelModel {
    /// y = +1 with probability 1/(1+exp(-w.x)), else -1.
    Logistic,
    /// y = w.x + N(0, 0.1^2)
    Linear,
}

impl LabelModel {
    pub fn loss(self) -> Loss {
        match self {
            LabelModel::Logistic => Loss::Hinge,
            LabelModel::Linear => Loss::Squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub m: usize,
    pub d: usize,
    pub n_parents: usize,
    /// Inclusive range of samples per task (train + test).
    pub per_task_n: (usize, usize),
    pub noise_scale: f64,
    /// Probability that a child negates its parent.
    pub negate_prob: f64,
    pub label_model: LabelModel,
    pub seed: u64,
    /// Fraction of each task's samples held out for testing.
    pub test_fraction: f64,
    pub lambda: f64,
}

/// Ground truth of a generated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    /// True weight columns.
    pub w: Vec<Vec<f64>>,
    /// Parent index of every task.
    pub parent: Vec<usize>,
    /// +1 or -1 relative to the parent.
    pub sign: Vec<f64>,
}

impl Planted {
    /// Planted relation of a pair: `s_i s_j` for tasks sharing a parent, 0
    /// otherwise.
    pub fn relation(&self, i: usize, j: usize) -> f64 {
        if self.parent[i] == self.parent[j] {
            self.sign[i] * self.sign[j]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub train: MultiTaskProblem,
    pub test: MultiTaskProblem,
    pub planted: Planted,
}

impl SyntheticSpec {
    /// Weakly correlated preset: three parents, noisy children.
    pub fn synthetic1(seed: u64) -> Self {
        SyntheticSpec {
            m: 16,
            d: 100,
            n_parents: 3,
            per_task_n: (1500, 2300),
            noise_scale: 0.1,
            negate_prob: 0.5,
            label_model: LabelModel::Logistic,
            seed,
            test_fraction: 0.3,
            lambda: 0.05,
        }
    }

    /// Same features as synthetic1 but one parent and less noise, so tasks
    /// are more strongly related.
    pub fn synthetic2(seed: u64) -> Self {
        SyntheticSpec {
            n_parents: 1,
            noise_scale: 0.02,
            ..Self::synthetic1(seed)
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "synthetic1" => Some(Self::synthetic1(seed)),
            "synthetic2" => Some(Self::synthetic2(seed)),
            _ => None,
        }
    }

    /// Shrink to a desk-sized instance with fixed per-task sample counts.
    pub fn scaled(mut self, m: usize, d: usize, n_per_task: usize) -> Self {
        self.m = m;
        self.d = d;
        self.n_parents = self.n_parents.min(m);
        self.per_task_n = (n_per_task, n_per_task);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::BadConfig(s.to_string()));
        if self.m == 0 || self.d == 0 {
            return bad("synthetic spec needs m >= 1 and d >= 1");
        }
        if self.n_parents == 0 || self.n_parents > self.m {
            return bad("n_parents must lie in [1, m]");
        }
        if !(self.noise_scale >= 0.0) {
            return bad("noise_scale must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.negate_prob) {
            return bad("negate_prob must lie in [0, 1]");
        }
        if self.per_task_n.0 < 2 || self.per_task_n.0 > self.per_task_n.1 {
            return bad("per_task_n must be a range with lower end >= 2");
        }
        if !(self.test_fraction >= 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn parent_tasks(&self) -> Vec<usize> {
        (0..self.n_parents).map(|k| k * self.m / self.n_parents).collect()
    }
}

fn planted_weights(spec: &SyntheticSpec) -> Planted {
    let mut rng = stream(spec.seed, PURPOSE_WEIGHTS);
    let parents: Vec<Vec<f64>> = (0..spec.n_parents)
        .map(|_| (0..spec.d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let parent_tasks = spec.parent_tasks();
    let noise = Normal::new(0.0, spec.noise_scale).expect("noise_scale validated");
    let mut w = Vec::with_capacity(spec.m);
    let mut parent = Vec::with_capacity(spec.m);
    let mut sign = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        if let Some(k) = parent_tasks.iter().position(|&t| t == i) {
            w.push(parents[k].clone());
            parent.push(k);
            sign.push(1.0);
            continue;
        }
        let k = rng.random_range(0..spec.n_parents);
        let s = if rng.random::<f64>() < spec.negate_prob { -1.0 } else { 1.0 };
        w.push(parents[k].iter().map(|&v| s * v + noise.sample(&mut rng)).collect());
        parent.push(k);
        sign.push(s);
    }
    Planted { w, parent, sign }
}

fn sample_task(spec: &SyntheticSpec, i: usize, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream(spec.seed, PURPOSE_TASK + i as u64);
    let n = rng.random_range(spec.per_task_n.0..=spec.per_task_n.1);
    let mut features = Vec::with_capacity(n * spec.d);
    let mut labels = Vec::with_capacity(n);
    let label_noise = Normal::new(0.0, 0.1).expect("constant");
    for _ in 0..n {
        let x: Vec<f64> = (0..spec.d).map(|_| rng.sample(StandardNormal)).collect();
        let z = dot(w, &x);
        let y = match spec.label_model {
            LabelModel::Logistic => {
                let p = 1.0 / (1.0 + (-z).exp());
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
            LabelModel::Linear => z + label_noise.sample(&mut rng),
        };
        features.extend_from_slice(&x);
        labels.push(y);
    }
    (features, labels)
}

/// Split one task's rows; the first `n - n_test` go to train.
fn split_rows(
    task_id: usize,
    d: usize,
    features: &[f64],
    labels: &[f64],
    order: &[usize],
    test_fraction: f64,
) -> (TaskData, TaskData) {
    let n = labels.len();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let n_test = n_test.min(n - 1);
    let take = |idx: &[usize]| {
        let mut f = Vec::with_capacity(idx.len() * d);
        let mut y = Vec::with_capacity(idx.len());
        for &j in idx {
            f.extend_from_slice(&features[j * d..(j + 1) * d]);
            y.push(labels[j]);
        }
        TaskData::new(task_id, d, f, y)
    };
    let (tr, te) = order.split_at(n - n_test);
    (take(tr), take(te))
}

fn assemble(
    tasks: Vec<(TaskData, TaskData)>,
    lambda: f64,
    loss: Loss,
) -> Result<(MultiTaskProblem, MultiTaskProblem)> {
    let (train, test): (Vec<_>, Vec<_>) = tasks.into_iter().unzip();
    Ok((
        validate_problem(MultiTaskProblem::new(train, lambda, loss))?,
        MultiTaskProblem::new(test, lambda, loss),
    ))
}

/// Generate train/test problems and the planted ground truth. The loss
/// follows the label model (hinge for logistic labels, squared for linear).
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let planted = planted_weights(spec);
    let loss = spec.label_model.loss();
    let tasks = planted
        .w
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let (f, y) = sample_task(spec, i, w);
            let order: Vec<usize> = (0..y.len()).collect();
            split_rows(i, spec.d, &f, &y, &order, spec.test_fraction)
        })
        .collect();
    let (train, test) = assemble(tasks, spec.lambda, loss)?;
    Ok(SyntheticData {
        train,
        test,
        planted,
    })
}

/// Pool each task's train and test rows and draw a fresh random split.
/// `split` selects one of many reproducible splits for the same seed.
pub fn resplit(
    train: &MultiTaskProblem,
    test: &MultiTaskProblem,
    test_fraction: f64,
    seed: u64,
    split: u64,
) -> Result<(MultiTaskProblem, MultiTaskProblem)> {
    if train.m() != test.m() {
        return Err(Error::BadConfig("train and test task counts differ".into()));
    }
    let d = train.d;
    let tasks = train
        .tasks
        .iter()
        .zip(&test.tasks)
        .enumerate()
        .map(|(i, (a, b))| {
            let mut f = a.features.clone();
            f.extend_from_slice(&b.features);
            let mut y = a.labels.clone();
            y.extend_from_slice(&b.labels);
            let mut order: Vec<usize> = (0..y.len()).collect();
            let mut rng = stream(seed, PURPOSE_SPLIT + split * 1_000_003 + i as u64);
            order.shuffle(&mut rng);
            split_rows(a.task_id, d, &f, &y, &order, test_fraction)
        })
        .collect();
    assemble(tasks, train.lambda, train.loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parent_layout() {
        assert_eq!(SyntheticSpec::synthetic1(0).parent_tasks(), vec![0, 5, 10]);
    }

    #[test]
    fn reproducible() {
        let spec = SyntheticSpec::synthetic1(7).scaled(5, 6, 40);
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 8, ..spec.clone() };
        assert_ne!(gen_synthetic(&spec).unwrap(), gen_synthetic(&other).unwrap());
    }

    #[test]
    fn degenerate_spec_gives_identical_tasks() {
        let spec = SyntheticSpec {
            n_parents: 1,
            noise_scale: 0.0,
            negate_prob: 0.0,
            ..SyntheticSpec::synthetic1(3).scaled(4, 5, 20)
        };
        let data = gen_synthetic(&spec).unwrap();
        for w in &data.planted.w {
            assert_eq!(w, &data.planted.w[0]);
        }
    }

    #[test]
    fn split_sizes_and_labels() {
        let spec = SyntheticSpec::synthetic1(1).scaled(3, 4, 100);
        let data = gen_synthetic(&spec).unwrap();
        for (a, b) in data.train.tasks.iter().zip(&data.test.tasks) {
            assert_eq!(a.n(), 70);
            assert_eq!(b.n(), 30);
            assert!(a.labels.iter().all(|&y| y == 1.0 || y == -1.0));
        }
        let (tr, te) = resplit(&data.train, &data.test, 0.5, 9, 2).unwrap();
        assert_eq!(tr.tasks[0].n(), 50);
        assert_eq!(te.tasks[0].n(), 50);
        let (tr2, _) = resplit(&data.train, &data.test, 0.5, 9, 2).unwrap();
        assert_eq!(tr, tr2);
        let (tr3, _) = resplit(&data.train, &data.test, 0.5, 9, 3).unwrap();
        assert_ne!(tr, tr3);
    }

    #[test]
    fn invalid_specs() {
        let base = SyntheticSpec::synthetic1(0);
        for spec in [
            SyntheticSpec { n_parents: 17, ..base.clone() },
            SyntheticSpec { noise_scale: -1.0, ..base.clone() },
            SyntheticSpec { per_task_n: (10, 5), ..base.clone() },
        ] {
            assert!(matches!(gen_synthetic(&spec), Err(Error::BadConfig(_))));
        }
    }
}
