//! Test-set metrics. Aggregates pool all test points across tasks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::problem::MultiTaskProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub rmse: f64,
    /// 1 - SSE/SST. 0 when the labels have no variance.
    pub explained_variance: f64,
    /// Fraction of sign(w.x) != y with sign(0) = -1; `None` unless every
    /// label is -1 or +1.
    pub error_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_task: Vec<Metrics>,
    pub pooled: Metrics,
}

#[derive(Default)]
struct Acc {
    n: usize,
    sse: f64,
    sum_y: f64,
    sum_y2: f64,
    wrong: usize,
    binary: bool,
}

impl Acc {
    fn new() -> Self {
        Acc {
            binary: true,
            ..Default::default()
        }
    }

    fn push(&mut self, pred: f64, y: f64) {
        self.n += 1;
        self.sse += (pred - y) * (pred - y);
        self.sum_y += y;
        self.sum_y2 += y * y;
        self.binary &= y == 1.0 || y == -1.0;
        let s = if pred > 0.0 { 1.0 } else { -1.0 };
        if s != y {
            self.wrong += 1;
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.n += o.n;
        self.sse += o.sse;
        self.sum_y += o.sum_y;
        self.sum_y2 += o.sum_y2;
        self.wrong += o.wrong;
        self.binary &= o.binary;
    }

    fn finish(&self) -> Metrics {
        let n = self.n.max(1) as f64;
        let mean = self.sum_y / n;
        let sst = (self.sum_y2 - n * mean * mean).max(0.0);
        let explained_variance = if sst > 0.0 { 1.0 - self.sse / sst } else { 0.0 };
        Metrics {
            n: self.n,
            rmse: (self.sse / n).sqrt(),
            explained_variance,
            error_rate: self.binary.then(|| self.wrong as f64 / n),
        }
    }
}

/// Score weight columns `w` on a test problem.
pub fn evaluate(w: &[Vec<f64>], test: &MultiTaskProblem) -> Result<EvalReport> {
    if w.len() != test.m() {
        return Err(Error::DimensionMismatch {
            task: 0,
            expected: test.m(),
            found: w.len(),
        });
    }
    let mut pooled = Acc::new();
    let mut per_task = Vec::with_capacity(test.m());
    for (i, (wi, task)) in w.iter().zip(&test.tasks).enumerate() {
        if wi.len() != task.d {
            return Err(Error::DimensionMismatch {
                task: i,
                expected: task.d,
                found: wi.len(),
            });
        }
        let mut acc = Acc::new();
        for (x, &y) in task.rows().zip(&task.labels) {
            acc.push(dot(wi, x), y);
        }
        per_task.push(acc.finish());
        pooled.merge(&acc);
    }
    Ok(EvalReport {
        per_task,
        pooled: pooled.finish(),
    })
}
