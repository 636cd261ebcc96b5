//! Exact solution of one worker's local dual subproblem by cyclic projected
//! coordinate ascent on an explicit Gram matrix.

use crate::kernel::TaskSlice;
use crate::OracleLoss;

#[derive(Debug, Clone)]
pub struct LocalQp<'a> {
    pub task: TaskSlice<'a>,
    pub loss: OracleLoss,
    pub alpha: &'a [f64],
    pub w: &'a [f64],
    pub rho: f64,
    pub sigma_ii: f64,
    pub lambda: f64,
}

impl LocalQp<'_> {
    fn gram(&self) -> Vec<f64> {
        let n = self.task.n();
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = self
                    .task
                    .row(a)
                    .iter()
                    .zip(self.task.row(b))
                    .map(|(x, y)| x * y)
                    .sum();
            }
        }
        g
    }

    /// Gradient of the Delta-dependent part of the objective.
    fn gradient_at(&self, g: &[f64], delta: &[f64], j: usize) -> f64 {
        let n = self.task.n();
        let nf = n as f64;
        let y = self.task.labels[j];
        let total = self.alpha[j] + delta[j];
        // d/dDelta_j of -(1/n) l*(-(alpha_j + Delta_j))
        let conj_part = match self.loss {
            OracleLoss::Hinge => y / nf,
            OracleLoss::Squared => (y - total / 2.0) / nf,
        };
        let wx: f64 = self.w.iter().zip(self.task.row(j)).map(|(a, b)| a * b).sum();
        let gd: f64 = (0..n).map(|k| g[j * n + k] * delta[k]).sum();
        conj_part - wx / nf - self.rho * self.sigma_ii / (self.lambda * nf * nf) * gd
    }

    fn curvature(&self, g: &[f64], j: usize) -> f64 {
        let n = self.task.n();
        let nf = n as f64;
        let conj = match self.loss {
            OracleLoss::Hinge => 0.0,
            OracleLoss::Squared => 0.5 / nf,
        };
        conj + self.rho * self.sigma_ii * g[j * n + j] / (self.lambda * nf * nf)
    }

    fn project(&self, j: usize, delta: f64) -> f64 {
        match self.loss {
            OracleLoss::Hinge => {
                let y = self.task.labels[j];
                let t = ((self.alpha[j] + delta) * y).clamp(0.0, 1.0);
                t * y - self.alpha[j]
            }
            OracleLoss::Squared => delta,
        }
    }

    pub fn solve(&self, tol: f64, max_sweeps: usize) -> Vec<f64> {
        let n = self.task.n();
        let g = self.gram();
        let mut delta = vec![0.0; n];
        for _ in 0..max_sweeps {
            let mut biggest = 0.0f64;
            for j in 0..n {
                let step = self.gradient_at(&g, &delta, j) / self.curvature(&g, j);
                let next = self.project(j, delta[j] + step);
                biggest = biggest.max((next - delta[j]).abs());
                delta[j] = next;
            }
            if biggest < tol {
                break;
            }
        }
        delta
    }
}
