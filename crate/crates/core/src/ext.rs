//! Extended reals: finite values plus exact `−∞` / `+∞`.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Neg, Sub};

/// A real number or one of the two infinities. Never NaN.
///
/// Infinite exponents and metrics are carried exactly instead of through
/// sentinel values, so `[·]₊`, `min` and `max` compose without loss.
#[derive(Clone, Copy, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const NEG_INFINITY: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Wraps a value, mapping NaN to `None`.
    pub fn new(value: f64) -> Option<Self> {
        if value.is_nan() {
            None
        } else {
            Some(ExtReal(value))
        }
    }

    /// Wraps a value that is known not to be NaN.
    #[inline]
    pub fn from_f64(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        ExtReal(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_neg_infinite(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    #[inline]
    pub fn is_pos_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// `[x]₊ = max{0, x}`; `[−∞]₊ = 0`.
    #[inline]
    pub fn pos_part(self) -> Self {
        if self.0 > 0.0 {
            self
        } else {
            ExtReal::ZERO
        }
    }

    /// `[a − b]₊`, with `[−∞ − (−∞)]₊ := 0` and `[+∞ − (+∞)]₊ := 0`.
    #[inline]
    pub fn pos_diff(a: ExtReal, b: ExtReal) -> ExtReal {
        ExtReal(pos_diff(a.0, b.0))
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Raw-`f64` form of [`ExtReal::pos_diff`] used in hot loops.
#[inline]
pub(crate) fn pos_diff(a: f64, b: f64) -> f64 {
    if a <= b {
        // covers a == b == ±∞
        0.0
    } else {
        a - b
    }
}

impl Eq for ExtReal {}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("ExtReal is never NaN")
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    /// Panics in debug builds on `+∞ + (−∞)`.
    fn add(self, rhs: Self) -> Self {
        let v = self.0 + rhs.0;
        debug_assert!(!v.is_nan(), "+inf + -inf is undefined");
        ExtReal(v)
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> Self {
        ExtReal(-self.0)
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_conventions() {
        let x = ExtReal::from(2.5);
        assert_eq!(x + ExtReal::NEG_INFINITY, ExtReal::NEG_INFINITY);
        assert_eq!(ExtReal::NEG_INFINITY.pos_part(), ExtReal::ZERO);
        assert_eq!(
            ExtReal::pos_diff(ExtReal::NEG_INFINITY, ExtReal::NEG_INFINITY),
            ExtReal::ZERO
        );
        assert_eq!(ExtReal::pos_diff(x, ExtReal::NEG_INFINITY), ExtReal::INFINITY);
        assert_eq!(ExtReal::pos_diff(ExtReal::NEG_INFINITY, x), ExtReal::ZERO);
        assert!(ExtReal::NEG_INFINITY < x && x < ExtReal::INFINITY);
        assert_eq!(x.min(ExtReal::NEG_INFINITY), ExtReal::NEG_INFINITY);
        assert_eq!(x.max(ExtReal::INFINITY), ExtReal::INFINITY);
        assert!(ExtReal::new(f64::NAN).is_none());
    }
}
