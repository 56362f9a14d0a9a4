//! Floating-point abstraction for the analytic core.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Scalar type of the numeric modules: `f32` or `f64`.
///
/// Default tolerances are expressed in `f64` and converted through
/// [`Scalar::val`], clamped away from the type's epsilon where needed.
pub trait Scalar:
    'static + Send + Sync + Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + LowerExp
{
    /// Shorthand for converting an `f64` constant.
    fn val(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable")
    }

    /// `x` as a tolerance, but never tighter than `factor * epsilon`.
    fn tol(x: f64, factor: f64) -> Self {
        Self::val(x).max(Self::epsilon() * Self::val(factor))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// Smallest nonnegative representative of an angle, in `[0, 2*pi)`.
pub fn wrap_angle<T: Scalar>(theta: T) -> T {
    let tau = T::TAU();
    let mut x = theta % tau;
    if x < T::zero() {
        x += tau;
    }
    x
}

/// Signed angular difference `a - b` wrapped to `(-pi, pi]`.
pub fn angle_diff<T: Scalar>(a: T, b: T) -> T {
    let tau = T::TAU();
    let mut d = (a - b) % tau;
    if d > T::PI() {
        d -= tau;
    }
    if d <= -T::PI() {
        d += tau;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        assert!((wrap_angle(-0.5f64) - (2.0 * std::f64::consts::PI - 0.5)).abs() < 1e-15);
        assert!((angle_diff(0.1f64, 6.2) - (0.1 - 6.2 + 2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert!(angle_diff(3.0f64, -3.0) < 0.0 || angle_diff(3.0f64, -3.0) > 0.0);
        let d = angle_diff(3.1f64, -3.1);
        assert!(d < 0.0, "wraps through pi: {d}");
    }
}
