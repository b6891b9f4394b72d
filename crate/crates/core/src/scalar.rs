use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type used for feature values, thresholds and impurities.
///
/// Implemented for `f32` and `f64`. `Display` must print the shortest text
/// that parses back to the same value, which both std floats guarantee; CSV
/// and model files depend on it.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + Debug
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance used when comparing split costs and gains.
    fn cost_tolerance() -> Self {
        Self::epsilon() * Self::from_u8(64).unwrap()
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }

    /// Midpoint of `lo < hi` that is guaranteed to satisfy `lo <= mid < hi`.
    fn split_midpoint(lo: Self, hi: Self) -> Self {
        let two = Self::one() + Self::one();
        let mid = lo / two + hi / two;
        if mid >= lo && mid < hi {
            mid
        } else {
            lo
        }
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + FromStr
        + Display
        + Debug
        + Default
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_stays_strictly_below_upper_value() {
        assert_eq!(f64::split_midpoint(1.0, 2.0), 1.5);
        assert_eq!(f64::split_midpoint(-3.0, 5.0), 1.0);
        let lo = 1.0_f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let mid = f64::split_midpoint(lo, hi);
        assert!(mid >= lo && mid < hi);
        assert_eq!(f32::split_midpoint(2.0, 3.0), 2.5);
    }

    #[test]
    fn midpoint_does_not_overflow() {
        let mid = f64::split_midpoint(f64::MAX / 2.0, f64::MAX);
        assert!(mid.is_finite());
    }
}
