//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the pipeline can run on (`f32` or `f64`).
///
/// Text I/O relies on `Display`/`FromStr` producing the shortest
/// representation that parses back to the same bits.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trips_bit_exactly() {
        for &x in &[0.1f64, 1.0 / 3.0, 1e-300, 123456.789, -0.0] {
            let back: f64 = x.to_string().parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        let y = 0.1f32 + 0.2f32;
        let back: f32 = y.to_string().parse().unwrap();
        assert_eq!(back.to_bits(), y.to_bits());
    }

    #[test]
    fn constant_conversion() {
        assert_eq!(<f32 as Scalar>::of(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::of_usize(7), 7.0);
    }
}
