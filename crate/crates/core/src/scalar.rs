//! Scalar abstraction for the real-valued analysis layers.
//!
//! The event kernel itself is exact integer arithmetic; only the power model
//! and the request/service analyzer compute with reals. Those are generic
//! over this trait so they can run at f32 or f64 (the CLI and the shipped
//! configs use f64, see the crate-root aliases).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait Real: Float + FromPrimitive + Debug + Display + Default {
    fn from_u64_exactish(v: u64) -> Self {
        Self::from_u64(v).expect("counter representable as scalar")
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as scalar")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Display + Default {}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint<F: Real>(a: F, b: F) -> F {
        (a + b) / F::from_f64_lossy(2.0)
    }

    #[test]
    fn works_for_both_widths() {
        assert_eq!(midpoint(1.0f64, 3.0f64), 2.0);
        assert_eq!(midpoint(1.0f32, 3.0f32), 2.0);
        assert_eq!(f64::from_u64_exactish(340), 340.0);
    }
}
