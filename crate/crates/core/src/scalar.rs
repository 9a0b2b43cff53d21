//! Scalar abstraction for the sample-level numerics.
//!
//! Fields, dispersion filters and the split-step propagator are generic over
//! [`Real`] so the same code runs in `f64` (reference accuracy) or `f32`
//! (roughly twice the FFT throughput). Physical bookkeeping (units, GN
//! integrals, analysis) always runs in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Floating-point type usable for sampled optical fields.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Default + Sum + Display + Debug
{
    /// Name used in logs and provenance records.
    const NAME: &'static str;

    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// `exp(i·phase)` with a short Taylor expansion for the tiny phases that
/// dominate split-step nonlinear operators.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    if phase.abs() < T::of(2e-2) {
        // truncation error below phase^7/5040, i.e. < 3e-16 here
        let p2 = phase * phase;
        let re = T::one() - p2 * (T::of(0.5) - p2 * (T::of(1.0 / 24.0) - p2 * T::of(1.0 / 720.0)));
        let im = phase * (T::one() - p2 * (T::of(1.0 / 6.0) - p2 * T::of(1.0 / 120.0)));
        Complex::new(re, im)
    } else {
        let (s, c) = phase.sin_cos();
        Complex::new(c, s)
    }
}

#[inline]
pub fn cast_complex<T: Real, U: Real>(z: Complex<T>) -> Complex<U> {
    Complex::new(U::of(z.re.as_f64()), U::of(z.im.as_f64()))
}
