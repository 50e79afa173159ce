//! Scalar abstraction shared by the statistics and scoring code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the scoring pipeline can run on.
///
/// Implemented for `f32` and `f64`. The service and CLI use `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts a literal constant. Panics only if the constant is not representable,
    /// which cannot happen for the values used in this crate.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as scalar")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
}
