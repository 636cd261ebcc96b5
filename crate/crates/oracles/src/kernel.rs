//! Explicit n×n multi-task kernel and the objectives built from it.

use crate::OracleLoss;

/// One task's raw data, row-major features.
#[derive(Debug, Clone)]
pub struct TaskSlice<'a> {
    pub features: &'a [f64],
    pub labels: &'a [f64],
    pub d: usize,
}

impl TaskSlice<'_> {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.d..(j + 1) * self.d]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// K with entries sigma_{ii'} / (n_i n_i') <x_j^i, x_j'^i'>, row-major, and n.
pub fn explicit_k(tasks: &[TaskSlice], sigma: &[f64]) -> (Vec<f64>, usize) {
    let m = tasks.len();
    let mut index = Vec::new();
    for (i, t) in tasks.iter().enumerate() {
        for j in 0..t.n() {
            index.push((i, j));
        }
    }
    let n = index.len();
    let mut k = vec![0.0; n * n];
    for (r, &(i, j)) in index.iter().enumerate() {
        for (c, &(ip, jp)) in index.iter().enumerate() {
            let s = sigma[i * m + ip];
            let scale = s / (tasks[i].n() as f64 * tasks[ip].n() as f64);
            k[r * n + c] = scale * dot(tasks[i].row(j), tasks[ip].row(jp));
        }
    }
    (k, n)
}

/// alpha^T K alpha for a flat alpha.
pub fn quad(k: &[f64], n: usize, alpha: &[f64]) -> f64 {
    let mut total = 0.0;
    for r in 0..n {
        let row: f64 = (0..n).map(|c| k[r * n + c] * alpha[c]).sum();
        total += alpha[r] * row;
    }
    total
}

/// Restrict alpha to task `i`'s block (other entries zeroed).
pub fn block_only(tasks: &[TaskSlice], alpha: &[f64], i: usize) -> Vec<f64> {
    let mut out = vec![0.0; alpha.len()];
    let start: usize = tasks[..i].iter().map(|t| t.n()).sum();
    let end = start + tasks[i].n();
    out[start..end].copy_from_slice(&alpha[start..end]);
    out
}

/// w_i = (1/lambda) sum_{i'} sum_j alpha_j^{i'} x_j^{i'} sigma_{ii'} / n_{i'},
/// accumulated one sample at a time.
pub fn weights_per_sample(
    tasks: &[TaskSlice],
    alpha: &[f64],
    sigma: &[f64],
    lambda: f64,
) -> Vec<Vec<f64>> {
    let m = tasks.len();
    let d = tasks[0].d;
    let mut w = vec![vec![0.0; d]; m];
    for (i, wi) in w.iter_mut().enumerate() {
        let mut offset = 0;
        for (ip, t) in tasks.iter().enumerate() {
            for j in 0..t.n() {
                let coef = alpha[offset + j] * sigma[i * m + ip] / (t.n() as f64 * lambda);
                for (acc, x) in wi.iter_mut().zip(t.row(j)) {
                    *acc += coef * x;
                }
            }
            offset += t.n();
        }
    }
    w
}

pub fn loss_value(loss: OracleLoss, a: f64, y: f64) -> f64 {
    match loss {
        OracleLoss::Hinge => (1.0 - y * a).max(0.0),
        OracleLoss::Squared => (a - y) * (a - y),
    }
}

/// Conjugate; `None` outside the domain.
pub fn conjugate(loss: OracleLoss, u: f64, y: f64) -> Option<f64> {
    match loss {
        OracleLoss::Hinge => {
            let t = u * y;
            if (-1.0 - 1e-12..=1e-12).contains(&t) {
                Some(t)
            } else {
                None
            }
        }
        OracleLoss::Squared => Some(u * u / 4.0 + u * y),
    }
}

/// D(alpha) from the materialized K.
pub fn dual_explicit(
    tasks: &[TaskSlice],
    loss: OracleLoss,
    k: &[f64],
    n: usize,
    alpha: &[f64],
    lambda: f64,
) -> Option<f64> {
    let mut conj = 0.0;
    let mut offset = 0;
    for t in tasks {
        let mut s = 0.0;
        for j in 0..t.n() {
            s += conjugate(loss, -alpha[offset + j], t.labels[j])?;
        }
        conj += s / t.n() as f64;
        offset += t.n();
    }
    Some(-quad(k, n, alpha) / (2.0 * lambda) - conj)
}

/// Primal objective summed sample by sample, tr(W Omega W^T) by entries.
pub fn primal_naive(
    tasks: &[TaskSlice],
    loss: OracleLoss,
    w: &[Vec<f64>],
    omega: &[f64],
    lambda: f64,
) -> f64 {
    let m = tasks.len();
    let mut total = 0.0;
    for (i, t) in tasks.iter().enumerate() {
        let mut s = 0.0;
        for j in 0..t.n() {
            s += loss_value(loss, dot(&w[i], t.row(j)), t.labels[j]);
        }
        total += s / t.n() as f64;
    }
    let mut reg = 0.0;
    for i in 0..m {
        for ip in 0..m {
            reg += omega[i * m + ip] * dot(&w[i], &w[ip]);
        }
    }
    total + 0.5 * lambda * reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_sized_kernel() {
        // one task, two points, sigma = 1
        let f = [1.0, 0.0, 0.0, 2.0];
        let y = [1.0, -1.0];
        let t = TaskSlice {
            features: &f,
            labels: &y,
            d: 2,
        };
        let (k, n) = explicit_k(&[t], &[1.0]);
        assert_eq!(n, 2);
        assert_eq!(k, vec![0.25, 0.0, 0.0, 1.0]);
        assert!((quad(&k, n, &[2.0, 1.0]) - 2.0).abs() < 1e-15);
    }
}
