//! CSV artifacts. Reals use 17 significant digits so they parse back exactly.

use std::fmt::Write as _;

use mtrl_core::data::{EvalReport, Metrics};
use mtrl_core::RoundTrace;
use nalgebra::DMatrix;

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(trace: &[RoundTrace]) -> String {
    let mut out = String::from("p,t,dual,primal,gap,elapsed_ms,comm_rounds\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.p,
            r.t,
            real(r.dual),
            real(r.primal),
            real(r.gap),
            real(r.elapsed_ms),
            r.comm_rounds
        );
    }
    out
}

fn task_header(first: &str, m: usize) -> String {
    let mut h = first.to_string();
    for i in 0..m {
        let _ = write!(h, ",task_{i}");
    }
    h.push('\n');
    h
}

/// Square task-by-task matrix with a header row and a row label column.
pub fn matrix_csv(a: &DMatrix<f64>) -> String {
    let mut out = task_header("task", a.ncols());
    for i in 0..a.nrows() {
        out.push_str(&format!("task_{i}"));
        for j in 0..a.ncols() {
            out.push(',');
            out.push_str(&real(a[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// d rows by m task columns.
pub fn weights_csv(w: &[Vec<f64>]) -> String {
    let d = w.first().map_or(0, Vec::len);
    let mut out = task_header("feature", w.len());
    for k in 0..d {
        out.push_str(&k.to_string());
        for col in w {
            out.push(',');
            out.push_str(&real(col[k]));
        }
        out.push('\n');
    }
    out
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn metric_rows(out: &mut String, scope: &str, ms: &[Metrics]) {
    let splits = ms.len();
    let mut row = |name: &str, xs: Vec<f64>| {
        let (mean, std) = mean_std(&xs);
        let _ = writeln!(out, "{scope},{name},{},{},{splits}", real(mean), real(std));
    };
    row("rmse", ms.iter().map(|m| m.rmse).collect());
    row("explained_variance", ms.iter().map(|m| m.explained_variance).collect());
    if let Some(errs) = ms.iter().map(|m| m.error_rate).collect::<Option<Vec<f64>>>() {
        row("error_rate", errs);
    }
}

/// Pooled then per-task metrics, each as mean and std over splits.
pub fn eval_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("scope,metric,mean,std,splits\n");
    let pooled: Vec<Metrics> = reports.iter().map(|r| r.pooled).collect();
    metric_rows(&mut out, "pooled", &pooled);
    let m = reports.first().map_or(0, |r| r.per_task.len());
    for i in 0..m {
        let per: Vec<Metrics> = reports.iter().map(|r| r.per_task[i]).collect();
        metric_rows(&mut out, &format!("task_{i}"), &per);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn mean_std_small() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weights_layout() {
        let csv = weights_csv(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "feature,task_0,task_1,task_2");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,2.0000000000000000e0,"));
    }
}
