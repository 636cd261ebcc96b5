//! Slow, independent reference computations for the test suites.
//!
//! Nothing in here calls into `mtrl-core`. Every routine works on plain
//! slices and recomputes its quantity from first principles (explicit kernel
//! matrices, per-sample sums, 1-D line searches in extended precision) so the
//! tests can compare two unrelated computation paths.

pub mod dd;
pub mod kernel;
pub mod line_search;
pub mod local_qp;

pub use dd::Dd;

/// Loss kinds understood by the oracles, mirrored here so the oracle does
/// not borrow the implementation's definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleLoss {
    Hinge,
    Squared,
}

/// A small deterministic generator (SplitMix64) so oracle fixtures do not
/// depend on the RNG crates used by the implementation.
#[derive(Debug, Clone)]
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.unit().max(1e-300);
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Random symmetric PSD m×m matrix (row-major) with unit trace.
pub fn random_trace_one_psd(rng: &mut SplitMix, m: usize) -> Vec<f64> {
    let k = m + 1;
    let a: Vec<f64> = (0..m * k).map(|_| rng.normal()).collect();
    let mut s = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            s[i * m + j] = (0..k).map(|t| a[i * k + t] * a[j * k + t]).sum();
        }
    }
    let tr: f64 = (0..m).map(|i| s[i * m + i]).sum();
    s.iter_mut().for_each(|v| *v /= tr);
    s
}
