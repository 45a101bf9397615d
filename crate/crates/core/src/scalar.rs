//! Real scalar types the simulator can run on.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar backing every amplitude and matrix entry.
///
/// Implemented for `f32` and `f64`. The associated tolerances are the
/// thresholds used for unitarity, norm and identity checks at that precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Max-entry residual allowed in `G†G - I`.
    const UNITARITY_TOL: Self;
    /// Allowed drift of `‖ψ‖²` away from one.
    const NORM_TOL: Self;
    /// Residual used when comparing matrices that should be exactly equal.
    const IDENTITY_TOL: Self;
    /// Branch probabilities below this are treated as numerically impossible.
    const DEGENERATE_PROB: Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const UNITARITY_TOL: f64 = 1e-10;
    const NORM_TOL: f64 = 1e-12;
    const IDENTITY_TOL: f64 = 1e-12;
    const DEGENERATE_PROB: f64 = 1e-15;
}

impl Scalar for f32 {
    const UNITARITY_TOL: f32 = 1e-5;
    const NORM_TOL: f32 = 1e-5;
    const IDENTITY_TOL: f32 = 1e-5;
    const DEGENERATE_PROB: f32 = 1e-7;
}

pub type C<T> = Complex<T>;

#[cfg(test)]
pub(crate) fn c<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn zero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn one<T: Scalar>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// `e^{iθ}`
#[inline]
pub(crate) fn cis<T: Scalar>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}
