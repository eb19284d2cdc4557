//! Scalar abstraction: every quantity in the crate is generic over the
//! floating-point type through this trait.

use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the solvers run on: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + fmt::Debug + fmt::Display + 'static
{
    /// Default local truncation error target for the fixed-step integrators.
    ///
    /// `1e-10` where the mantissa can resolve it, widened for `f32`.
    fn default_local_tol() -> Self {
        let nominal = Self::from_f64(1e-10).unwrap();
        let floor = Self::epsilon() * Self::from_f64(50.0).unwrap();
        if nominal > floor {
            nominal
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for pulling an `f64` literal into the generic scalar type.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}
