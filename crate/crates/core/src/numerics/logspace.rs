//! Log-space arithmetic on nonnegative quantities.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::ops::{Add, Div, Mul};

use crate::error::{Error, Result};

/// A nonnegative real stored as its natural logarithm; `-∞` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    pub fn from_ln(log_magnitude: f64) -> Self {
        LogValue(log_magnitude)
    }

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Domain(format!(
                "LogValue requires a nonnegative value, got {value}"
            )));
        }
        Ok(LogValue(value.ln()))
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `self - other`, defined only when `self >= other`.
    pub fn checked_sub(self, other: LogValue) -> Result<LogValue> {
        if other.0 > self.0 {
            return Err(Error::Domain(format!(
                "log-space subtraction would be negative: ln a = {}, ln b = {}",
                self.0, other.0
            )));
        }
        Ok(LogValue(log_diff_exp(self.0, other.0)))
    }

    pub fn powf(self, exponent: f64) -> LogValue {
        if self.is_zero() && exponent == 0.0 {
            return LogValue::ONE;
        }
        LogValue(self.0 * exponent)
    }

    pub fn sum<I: IntoIterator<Item = LogValue>>(values: I) -> LogValue {
        let logs: Vec<f64> = values.into_iter().map(|v| v.0).collect();
        LogValue(log_sum_exp(&logs))
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        LogValue(log_add_exp(self.0, rhs.0))
    }
}

// Products and quotients of values are sums and differences of logs.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 + rhs.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 - rhs.0)
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`.
///
/// Uses `ln(-expm1(b - a))` when the two are within a factor of two and
/// `ln1p(-exp(b - a))` otherwise.
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b > a {
        return f64::NAN;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    let d = b - a;
    if d > -LN_2 {
        a + (-d.exp_m1()).ln()
    } else {
        a + (-d.exp()).ln_1p()
    }
}

/// `ln Σ e^{x_i}`; empty input gives `-∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_sub_match_naive_arithmetic() {
        let a = LogValue::new(0.75).unwrap();
        let b = LogValue::new(0.125).unwrap();
        assert!(((a + b).value() - 0.875).abs() <= 2.0 * f64::EPSILON);
        assert!((a.checked_sub(b).unwrap().value() - 0.625).abs() <= 2.0 * f64::EPSILON);
        assert!(b.checked_sub(a).is_err());
    }

    #[test]
    fn zero_is_neutral() {
        let a = LogValue::new(0.3).unwrap();
        assert_eq!(a + LogValue::ZERO, a);
        assert_eq!(a.checked_sub(LogValue::ZERO).unwrap(), a);
        assert!(a.checked_sub(a).unwrap().is_zero());
        assert_eq!(LogValue::ZERO.powf(0.0), LogValue::ONE);
    }

    #[test]
    fn diff_of_close_values_keeps_precision() {
        // e^0 - e^{-1e-10} = 1e-10 - 5e-21 + ...
        let d = log_diff_exp(0.0, -1e-10);
        let expected = (1e-10f64 - 5e-21).ln();
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + LN_2)).abs() < 1e-12);
        assert!((log_sum_exp(&[800.0, 0.0]) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn values_at_most_one_never_overflow() {
        for v in [1.0, 0.5, 1e-300, 0.0] {
            let lv = LogValue::new(v).unwrap();
            assert!(lv.value().is_finite());
        }
    }
}
