use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;
use std::fmt::{Debug, Display, LowerExp};

/// Floating-point scalar the spectral solver and amplification code run on.
pub trait Real:
    Float + FloatConst + FftNum + FromPrimitive + ToPrimitive + Default + Display + Debug + LowerExp
{
    /// Lossy conversion from `f64`; the inputs are always representable.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
