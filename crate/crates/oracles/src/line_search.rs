//! Golden-section maximization of a single coordinate of the local dual
//! subproblem, evaluated in double-double precision.

use crate::dd::Dd;
use crate::OracleLoss;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximizer of a concave `f` on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> Dd>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1.gt(f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    // The endpoints matter for box-constrained problems where the optimum
    // sits on the boundary.
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi]
        .into_iter()
        .map(|x| (x, f(x)))
        .fold(None::<(f64, Dd)>, |best, (x, v)| match best {
            Some((_, bv)) if !v.gt(bv) => best,
            _ => Some((x, v)),
        })
        .map(|(x, _)| x)
        .unwrap_or(mid)
}

fn dot_dd(a: &[f64], b: &[f64]) -> Dd {
    a.iter()
        .zip(b)
        .fold(Dd::ZERO, |acc, (&x, &y)| acc + Dd::new(x) * Dd::new(y))
}

/// One sample's solver state, expressed with raw vectors so the oracle
/// computes every inner product itself.
#[derive(Debug, Clone)]
pub struct CoordinateProblem<'a> {
    pub loss: OracleLoss,
    pub y: f64,
    /// Current total dual value of the coordinate (alpha_j + delta_alpha_j).
    pub a_cur: f64,
    pub x: &'a [f64],
    pub w: &'a [f64],
    /// Accumulated sum of delta_alpha_j * x_j over the task.
    pub v: &'a [f64],
    pub n: usize,
    pub rho: f64,
    pub sigma_ii: f64,
    pub lambda: f64,
}

impl CoordinateProblem<'_> {
    /// Feasible interval for the step, or an unbounded one.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self.loss {
            // -(a+d) must lie in the conjugate domain {u : u*y in [-1, 0]},
            // i.e. (a+d)*y in [0, 1].
            OracleLoss::Hinge => {
                let e0 = 0.0 * self.y - self.a_cur;
                let e1 = self.y - self.a_cur;
                Some((e0.min(e1), e0.max(e1)))
            }
            OracleLoss::Squared => None,
        }
    }

    /// The part of the local objective that depends on the step `delta`.
    pub fn objective(&self, delta: f64) -> Dd {
        let total = Dd::new(self.a_cur) + Dd::new(delta);
        let u = -total;
        let y = Dd::new(self.y);
        // sup_a (u a - l(a))
        let conj = match self.loss {
            OracleLoss::Hinge => u * y,
            OracleLoss::Squared => u * u * Dd::new(0.25) + u * y,
        };
        let n = self.n as f64;
        let wx = dot_dd(self.w, self.x);
        let vx = dot_dd(self.v, self.x);
        let vv = dot_dd(self.v, self.v);
        let q = dot_dd(self.x, self.x);
        let d = Dd::new(delta);
        let norm_sq = vv + d * vx.scale(2.0) + d * d * q;
        let coef = self.rho * self.sigma_ii / (2.0 * self.lambda * n * n);
        -(conj.div_f64(n)) - (d * wx).div_f64(n) - norm_sq * Dd::new(coef)
    }

    pub fn maximize(&self) -> f64 {
        match self.domain() {
            Some((lo, hi)) => golden_section_max(|d| self.objective(d), lo, hi),
            None => {
                let mut r = 1.0;
                while r < 1e12 {
                    let inside = self.objective(0.0);
                    if inside.gt(self.objective(r)) && inside.gt(self.objective(-r)) {
                        break;
                    }
                    r *= 4.0;
                }
                golden_section_max(|d| self.objective(d), -r, r)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak_to_high_precision() {
        let peak = 0.123_456_789_012_345;
        let x = golden_section_max(
            |t| {
                let d = Dd::new(t) - Dd::new(peak);
                -(d * d)
            },
            -3.0,
            5.0,
        );
        assert!((x - peak).abs() < 1e-12, "{x}");
    }

    #[test]
    fn boundary_optimum_is_returned() {
        let x = golden_section_max(Dd::new, -1.0, 2.0);
        assert!((x - 2.0).abs() < 1e-12);
    }
}
