//! Numeric element type used throughout the engine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the graph engine and attribution methods are generic over.
///
/// Implemented for `f32` and `f64`. Everything that needs reproducible
/// quadrature (the axiom audits, the model document format, the CLI) runs
/// on `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("usize representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(700.0_f64), 1.0);
        assert!(sigmoid(-700.0_f64) > 0.0);
        assert!(sigmoid(-700.0_f64).is_finite());
        assert_eq!(sigmoid(0.0_f64), 0.5);
        assert!(sigmoid(-100.0_f32).is_finite());
    }

    #[test]
    fn sigmoid_is_antisymmetric_about_half() {
        for &x in &[0.1, 1.0, 3.5, 20.0] {
            let s = sigmoid(x) + sigmoid(-x);
            assert!((s - 1.0_f64).abs() < 1e-15);
        }
    }
}
