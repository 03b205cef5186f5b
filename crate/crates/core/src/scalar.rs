//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the crate (`f32` and `f64`).
///
/// Arithmetic and elementary functions come from [`RealField`]; conversion to
/// and from `f64` literals comes from num-traits.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant. Infallible for the float types we implement.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// Machine epsilon of the concrete type.
    fn epsilon() -> Self;

    fn is_finite_value(self) -> bool {
        self.as_f64().is_finite()
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}
