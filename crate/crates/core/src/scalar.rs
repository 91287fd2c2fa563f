//! Scalar abstraction for the numeric core.
//!
//! Privacy mechanisms, budgets, edge costs and the overhead cost model are
//! written against [`Real`] so they work for `f32` and `f64` alike. Concrete
//! aliases for the default scalar live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + AddAssign + Sum + Debug + Display + 'static {}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + AddAssign + Sum + Debug + Display + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// finite constants used throughout this crate.
pub fn real<F: Real>(v: f64) -> F {
    F::from_f64(v).expect("finite f64 constant must convert into the scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converts_constants_for_both_widths() {
        let a: f32 = real(0.8);
        let b: f64 = real(0.8);
        assert!((a as f64 - b).abs() < 1e-6);
    }
}
