//! Inequality checks reported by the verifiers.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

/// Relative tolerance applied to every floating-point inequality.
pub const TOLERANCE: f64 = 1e-9;

/// One inequality evaluated on one instance. `slack` is positive when the
/// inequality holds with room to spare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub theorem: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Check {
    fn new(theorem: &str, inequality: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let finite = |v: f64| if v.is_finite() { v.abs() } else { 0.0 };
        let scale = 1f64.max(finite(lhs)).max(finite(rhs));
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        Self {
            theorem: theorem.to_owned(),
            inequality: inequality.to_owned(),
            lhs,
            rhs,
            slack,
            pass: slack >= -TOLERANCE * scale,
        }
    }

    /// `lhs <= rhs`.
    pub fn at_most(theorem: &str, inequality: &str, lhs: f64, rhs: f64) -> Self {
        Self::new(theorem, inequality, lhs, rhs, rhs - lhs)
    }

    /// `lhs >= rhs`.
    pub fn at_least(theorem: &str, inequality: &str, lhs: f64, rhs: f64) -> Self {
        Self::new(theorem, inequality, lhs, rhs, lhs - rhs)
    }

    /// `|lhs - rhs| <= tol`.
    pub fn close(theorem: &str, inequality: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let mut c = Self::new(theorem, inequality, lhs, rhs, tol - (lhs - rhs).abs());
        c.pass = (lhs - rhs).abs() <= tol;
        c
    }

    /// An exact rational quantity that must vanish.
    pub fn exactly_zero(theorem: &str, inequality: &str, value: &BigRational) -> Self {
        let v = num_traits::ToPrimitive::to_f64(value).unwrap_or(f64::INFINITY);
        Self {
            theorem: theorem.to_owned(),
            inequality: inequality.to_owned(),
            lhs: v,
            rhs: 0.0,
            slack: -v,
            pass: value.is_zero(),
        }
    }

    /// A condition without a numeric margin.
    pub fn holds(theorem: &str, inequality: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self {
            theorem: theorem.to_owned(),
            inequality: inequality.to_owned(),
            lhs: v,
            rhs: 1.0,
            slack: v - 1.0,
            pass: ok,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
