use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// A nonnegative real stored as its natural logarithm.
///
/// Exact zero is `ln = -inf` and is a first-class value, never an underflowed
/// finite log. NaN and `+inf` are rejected at construction.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    /// Wraps a natural logarithm. Panics on NaN or `+inf`.
    #[inline]
    pub fn from_ln(ln: f64) -> Self {
        assert!(
            !ln.is_nan() && ln != f64::INFINITY,
            "LogValue requires a finite log or -inf, got {ln}"
        );
        LogValue(ln)
    }

    /// Logarithm of a linear value in `[0, inf)`.
    #[inline]
    pub fn from_linear(v: f64) -> Self {
        assert!(v >= 0.0 && v.is_finite(), "LogValue requires a finite v >= 0, got {v}");
        LogValue(v.ln())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn log10(self) -> f64 {
        self.0 * std::f64::consts::LOG10_E
    }

    /// Linear value; underflows to `0.0` below the subnormal range.
    #[inline]
    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `ln(e^a + e^b)` without overflow or needless underflow.
    pub fn log_add(self, other: LogValue) -> LogValue {
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogValue(hi);
        }
        LogValue(hi + (lo - hi).exp().ln_1p())
    }

    /// Log-sum-exp over an iterator, anchored at the running maximum.
    pub fn log_sum<I: IntoIterator<Item = LogValue>>(values: I) -> LogValue {
        let v: Vec<f64> = values.into_iter().map(|x| x.0).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return LogValue::ZERO;
        }
        let s: f64 = v.iter().map(|x| (x - max).exp()).sum();
        LogValue(max + s.ln())
    }

    /// `value^w` for `w >= 0`, with the convention `0^0 = 1`.
    pub fn pow(self, w: f64) -> LogValue {
        debug_assert!(w >= 0.0);
        if w == 0.0 {
            LogValue::ONE
        } else if self.is_zero() {
            LogValue::ZERO
        } else {
            LogValue(self.0 * w)
        }
    }

    /// Weighted geometric mean `a^(1-w) b^w`, `w` in `[0, 1]`, with `0^0 = 1`.
    pub fn geometric(a: LogValue, b: LogValue, w: f64) -> LogValue {
        a.pow(1.0 - w) * b.pow(w)
    }

    /// Weighted arithmetic mean `(1-w) a + w b`, `w` in `[0, 1]`.
    ///
    /// Anchored at the larger endpoint, `hi + ln(1 + v (e^{lo - hi} - 1))`,
    /// so values just below one keep their full relative precision.
    pub fn linear(a: LogValue, b: LogValue, w: f64) -> LogValue {
        if w == 0.0 {
            return a;
        }
        if w == 1.0 {
            return b;
        }
        let (hi, lo, v) = if a.0 >= b.0 { (a.0, b.0, w) } else { (b.0, a.0, 1.0 - w) };
        if hi == f64::NEG_INFINITY {
            return LogValue::ZERO;
        }
        LogValue(hi + (v * (lo - hi).exp_m1()).ln_1p())
    }

    /// `min(1, value)`.
    pub fn clip_one(self) -> LogValue {
        if self.0 > 0.0 {
            LogValue::ONE
        } else {
            self
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    #[inline]
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            LogValue::ZERO
        } else {
            LogValue(self.0 + rhs.0)
        }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogValue(ln = {})", self.0)
    }
}

impl From<LogValue> for f64 {
    fn from(v: LogValue) -> f64 {
        v.0
    }
}

impl TryFrom<f64> for LogValue {
    type Error = String;

    fn try_from(ln: f64) -> Result<Self, Self::Error> {
        if ln.is_nan() || ln == f64::INFINITY {
            Err(format!("invalid log value {ln}"))
        } else {
            Ok(LogValue(ln))
        }
    }
}
