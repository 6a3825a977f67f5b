//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Beyond [`Float`], the bounds cover what the model files need: a
/// scientific-notation formatter and a parser that round-trips it.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal is representable")
    }

    /// Conversion from a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }

    /// Widening conversion for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Formats a scalar with 17 significant digits so that parsing it back
/// yields the identical bit pattern.
pub fn fmt_exact<T: Real>(v: T) -> String {
    format!("{:.16e}", v)
}

/// Parses a value written by [`fmt_exact`] (or any decimal literal).
pub fn parse_real<T: Real>(s: &str) -> Option<T> {
    s.trim().parse::<T>().ok()
}
