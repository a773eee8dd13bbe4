//! Scalar abstraction for the numeric core.
//!
//! All model math is generic over [`Float`] so the same code runs with `f32`
//! or `f64`. Random sampling is bridged through `f64` (the native width of the
//! generators), which keeps draw sequences identical across scalar types.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable throughout the library: `f32` or `f64`.
pub trait Float:
    num_traits::Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, used for constants and RNG bridging.
    fn of(x: f64) -> Self;

    /// Widening to `f64` for special-function evaluation and text output.
    fn as_f64(self) -> f64;

    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }
}

impl Float for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Float for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }
}
