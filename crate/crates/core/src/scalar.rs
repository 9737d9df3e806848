//! Scalar abstraction shared by the numerical modules.
//!
//! Everything that touches amplitudes or matrices is generic over [`Scalar`],
//! which is implemented for `f32` and `f64`. Tolerances are written once in
//! `f64` terms and widened for single precision through [`Scalar::tol`].

use std::fmt::Debug;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type usable as the base field of amplitudes.
pub trait Scalar:
    RealField + Copy + Debug + FromPrimitive + ToPrimitive + FloatConst + Send + Sync + 'static
{
    /// Ratio between this type's machine epsilon and `f64::EPSILON`.
    const TOL_SCALE: f64;

    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts to every float type")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("float converts to f64")
    }

    /// A tolerance stated for `f64`, rescaled to this precision.
    fn tol(x: f64) -> Self {
        Self::of((x * Self::TOL_SCALE).min(1e-2_f64.max(x)))
    }
}

impl Scalar for f64 {
    const TOL_SCALE: f64 = 1.0;
}

impl Scalar for f32 {
    const TOL_SCALE: f64 = (f32::EPSILON as f64) / f64::EPSILON;
}

/// `exp(i theta)`.
#[inline]
pub fn cis<T: Scalar>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub(crate) fn czero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `|z|` without requiring `num_traits::Float` on the component type.
#[inline]
pub fn modulus<T: Scalar>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

const TWO_PI_HI: f64 = 6.283_185_307_179_586;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Error-free product: `a * b == hi + lo` exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, a.mul_add(b, -hi))
}

/// `(x * t) mod 2π`, wrapped into `(-π, π]`.
///
/// The product is formed exactly as a double-double and reduced against a
/// double-double `2π`, so the only remaining error at `t = 1e12` is the
/// rounding already present in `x` itself.
pub fn reduced_phase(x: f64, t: f64) -> f64 {
    let (p, pe) = two_prod(x, t);
    let k = (p / TWO_PI_HI).round();
    let (q, qe) = two_prod(k, TWO_PI_HI);
    let mut r = (p - q) + (pe - qe - k * TWO_PI_LO);
    // one correction step handles rounding of k near half-period boundaries
    let pi = std::f64::consts::PI;
    if r > pi {
        r -= TWO_PI_HI;
        r -= TWO_PI_LO;
    } else if r <= -pi {
        r += TWO_PI_HI;
        r += TWO_PI_LO;
    }
    r
}
