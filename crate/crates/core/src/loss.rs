//! Losses, their convex conjugates, and exact single-coordinate dual steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking hinge dual feasibility. Convex combinations
/// of feasible duals can land an ulp outside the box.
const HINGE_DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    /// max(0, 1 - y a), labels in {-1, +1}.
    Hinge,
    /// (a - y)^2
    Squared,
}

/// Value of a convex conjugate. Outside the effective domain the conjugate
/// is +infinity, which must never leak into a finite sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conjugate {
    Finite(f64),
    Infinite,
}

impl Conjugate {
    pub fn finite(self) -> Option<f64> {
        match self {
            Conjugate::Finite(v) => Some(v),
            Conjugate::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Conjugate::Infinite)
    }
}

/// Everything the exact coordinate maximizer needs about one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateState {
    /// alpha_j + delta_alpha_j before the step.
    pub a_cur: f64,
    pub y: f64,
    /// w_i . x_j with the round's fixed weights.
    pub wx: f64,
    /// v . x_j, v = sum_j delta_alpha_j x_j accumulated this round.
    pub vx: f64,
    /// ||x_j||^2
    pub q: f64,
    pub n_i: usize,
    pub rho: f64,
    pub sigma_ii: f64,
    pub lambda: f64,
}

impl Loss {
    pub fn parse(s: &str) -> Option<Loss> {
        match s {
            "hinge" => Some(Loss::Hinge),
            "squared" => Some(Loss::Squared),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Loss::Hinge => "hinge",
            Loss::Squared => "squared",
        }
    }

    /// mu such that the loss is (1/mu)-smooth. (a-y)^2 has l'' = 2.
    pub fn smoothness(self) -> Option<f64> {
        match self {
            Loss::Hinge => None,
            Loss::Squared => Some(0.5),
        }
    }

    /// Lipschitz constant, when globally Lipschitz.
    pub fn lipschitz(self) -> Option<f64> {
        match self {
            Loss::Hinge => Some(1.0),
            Loss::Squared => None,
        }
    }

    pub fn eval(self, a: f64, y: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - y * a).max(0.0),
            Loss::Squared => (a - y) * (a - y),
        }
    }

    /// l*(u) = sup_a (u a - l(a)).
    ///
    /// Hinge: u y for u y in [-1, 0], infinite otherwise (labels are +-1 so
    /// u / y = u y). Squared: u^2/4 + u y.
    pub fn conjugate(self, u: f64, y: f64) -> Conjugate {
        match self {
            Loss::Hinge => {
                let t = u * y;
                if (-1.0 - HINGE_DOMAIN_SLACK..=HINGE_DOMAIN_SLACK).contains(&t) {
                    Conjugate::Finite(t.clamp(-1.0, 0.0))
                } else {
                    Conjugate::Infinite
                }
            }
            Loss::Squared => Conjugate::Finite(0.25 * u * u + u * y),
        }
    }

    /// Exact maximizer of the local subproblem along one coordinate.
    ///
    /// With c = rho sigma_ii / (lambda n_i) the restricted objective (times
    /// n_i) is  -l*(-(a+d)) - d wx - c (d vx + d^2 q / 2).
    pub fn coordinate_delta(self, s: &CoordinateState) -> Result<f64> {
        let scale = s.rho * s.sigma_ii;
        if !(s.q > 0.0) || !(scale > 0.0) {
            return Err(Error::NonPositiveCurvature { q: s.q, scale });
        }
        let c = scale / (s.lambda * s.n_i as f64);
        match self {
            Loss::Squared => {
                Ok(((s.y - 0.5 * s.a_cur - s.wx) - c * s.vx) / (0.5 + c * s.q))
            }
            Loss::Hinge => {
                let unconstrained = ((s.y - s.wx) / c - s.vx) / s.q;
                // (a + d) y must stay in [0, 1]
                let target = ((s.a_cur + unconstrained) * s.y).clamp(0.0, 1.0);
                Ok(target * s.y - s.a_cur)
            }
        }
    }
}
