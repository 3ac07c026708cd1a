//! Scalar abstractions shared by the numeric modules.

use num_traits::{Float, FromPrimitive, One, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

/// Floating point scalar used by kernels, quadrature, the Gaussian layer and the
/// regulator integrals.
pub trait Real:
    Float + FromPrimitive + Debug + Default + Send + Sync + std::iter::Sum + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Coefficient ring for polynomials and forms. Implemented for exact rationals and floats.
pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_i64(v: i64) -> Self;
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Coeff for f32 {
    fn from_i64(v: i64) -> Self {
        v as f32
    }
}

impl Coeff for num_rational::BigRational {
    fn from_i64(v: i64) -> Self {
        num_rational::BigRational::from_integer(v.into())
    }
}
