//! Floating-point scalar abstraction: every numeric kernel in this crate is
//! generic over [`Scalar`] so the same code runs in f32 or f64.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + Sum<Self>
    + Display
    + Debug
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Convert an f64 constant. Panics on values unrepresentable in `Self`,
    /// which cannot happen for finite literals.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to any Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("any Scalar converts to f64")
    }

    fn half() -> Self {
        Self::cast(0.5)
    }

    fn two() -> Self {
        Self::cast(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function 1/(1+e^-z), saturating cleanly at the tails.
pub fn sigmoid<S: Scalar>(z: S) -> S {
    S::one() / (S::one() + (-z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_midpoint_and_tails() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(sigmoid(1e4f64), 1.0);
        assert_eq!(sigmoid(-1e4f64), 0.0);
        assert!((sigmoid(2.0f64) - 0.8807970779778823).abs() < 1e-15);
    }

    #[test]
    fn cast_round_trips_for_both_widths() {
        assert_eq!(<f32 as Scalar>::cast(0.25), 0.25f32);
        assert_eq!(<f64 as Scalar>::cast(0.25), 0.25f64);
        assert_eq!(<f64 as Scalar>::from_count(1190).as_f64(), 1190.0);
    }
}
