//! Scalar abstraction so the kernel and linear-algebra layers work with
//! any floating-point width.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar used throughout the kernel, operator and
/// linear-algebra layers. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
