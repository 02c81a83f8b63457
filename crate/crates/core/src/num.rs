//! Scalar abstraction for the numeric core.

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;
use std::fmt::Display;
use std::iter::Sum;

/// Floating-point scalar the spectral and pricing machinery is generic over.
pub trait Real: Float + FloatConst + FromPrimitive + FftNum + Sum<Self> + Display + std::fmt::LowerExp {
    /// Shorthand for converting an `f64` constant into the scalar type.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable")
    }
}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + FftNum + Sum<T> + Display + std::fmt::LowerExp {}
