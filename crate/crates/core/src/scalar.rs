//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All linear algebra works over `Complex<T>` where `T` is a real floating
//! point type. `f64` is the type used by the CLI and the benchmarks; `f32`
//! works for everything that does not need double precision tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar usable by the beamforming routines.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the target type
    /// cannot represent at all, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Complex scalar over a [`Real`] component type.
pub type C<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> C<T> {
    C::new(T::lit(re), T::lit(im))
}

/// `exp(i·phase)`.
#[inline]
pub fn unit_phasor<T: Real>(phase: T) -> C<T> {
    C::new(phase.cos(), phase.sin())
}

/// `|z|` without the overflow guard of `hypot`; fine for the magnitudes
/// that occur here and noticeably cheaper in inner loops.
#[inline]
pub fn modulus<T: Real>(z: C<T>) -> T {
    z.norm_sqr().sqrt()
}
