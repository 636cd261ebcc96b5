//! Dense vector helpers. Weight and summary vectors are plain `Vec<f64>`.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// y += k * x
#[inline]
pub fn axpy(k: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += k * xi;
    }
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// max |a - b| / max(1, |b|) over entries.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
