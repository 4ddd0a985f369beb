//! Floating-point abstraction shared by every module.
//!
//! All numerical code is written against [`Real`], which is implemented for
//! `f32` and `f64`. Accuracy targets quoted in the documentation refer to
//! `f64`; `f32` is usable for tolerances down to roughly `1e-5`.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};

/// Real scalar type: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }

    /// Converts an integer.
    #[inline]
    fn n(k: i64) -> Self {
        Self::from_i64(k).expect("representable integer")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cx<T> = Complex<T>;

/// A point in the plane.
pub type Point<T> = [T; 2];

/// `e^{z}` for a complex argument.
#[inline]
pub fn cexp<T: Real>(z: Cx<T>) -> Cx<T> {
    let m = z.re.exp();
    let (s, c) = z.im.sin_cos();
    Cx::new(m * c, m * s)
}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Cx<T> {
    let (s, c) = theta.sin_cos();
    Cx::new(c, s)
}

/// `i^k` for an integer power.
#[inline]
pub fn i_pow<T: Real>(k: i64) -> Cx<T> {
    match k.rem_euclid(4) {
        0 => Cx::new(T::one(), T::zero()),
        1 => Cx::new(T::zero(), T::one()),
        2 => Cx::new(-T::one(), T::zero()),
        _ => Cx::new(T::zero(), -T::one()),
    }
}

/// `1/(1 - e^{-x})` computed without cancellation for small `x > 0`.
#[inline]
pub fn inv_one_minus_exp<T: Real>(x: T) -> T {
    -T::one() / (-x).exp_m1()
}
