//! Scalar abstraction: the whole engine is generic over the floating type.

use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Floating scalar the numerics run on: `f32` or `f64`.
///
/// `nalgebra::RealField` supplies the transcendental and linear-algebra
/// surface; the `num-traits` bounds cover constant conversion.
pub trait Real:
    nalgebra::RealField + FloatConst + FromPrimitive + ToPrimitive + Copy + std::fmt::LowerExp
{
    /// Lossy conversion from an `f64` literal. Panics only for non-finite input.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Back-conversion used by report emitters.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_roundtrip() {
        assert_eq!(f64::of(1.5), 1.5);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(1.5f64.to_f64_lossy(), 1.5);
    }
}
