//! Scalar abstractions.
//!
//! Two layers are used throughout the crate:
//!
//! * [`Field`] is the minimal arithmetic needed by the pointwise tensor kernels.
//!   It is implemented by the floating point types and by [`crate::jet::Jet1`],
//!   so a kernel written once over `F: Field` also yields its own first
//!   derivatives when fed jets.
//! * [`Scalar`] is the concrete floating point type (f32 or f64) that fields,
//!   grids and reports are stored in.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Ring-with-division arithmetic shared by plain floats and jets.
pub trait Field:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    const ZERO: Self;
    const ONE: Self;
    /// Embeds a constant.
    fn cst(x: f64) -> Self;
}

/// Elementary functions, needed to build exact jets of analytic test fields.
///
/// Prefixed names avoid clashing with `num_traits::Float` on plain floats.
pub trait Analytic: Field {
    fn fsin(self) -> Self;
    fn fcos(self) -> Self;
    fn fexp(self) -> Self;
    fn fln(self) -> Self;
    fn fsqrt(self) -> Self;
}

/// Floating point storage type: f32 or f64.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Field
    + Analytic
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from f64.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 constant")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

macro_rules! impl_float {
    ($t:ty) => {
        impl Field for $t {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            #[inline(always)]
            fn cst(x: f64) -> Self {
                x as $t
            }
        }

        impl Analytic for $t {
            #[inline]
            fn fsin(self) -> Self {
                <$t>::sin(self)
            }
            #[inline]
            fn fcos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn fexp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn fln(self) -> Self {
                <$t>::ln(self)
            }
            #[inline]
            fn fsqrt(self) -> Self {
                <$t>::sqrt(self)
            }
        }

        impl Scalar for $t {}
    };
}

impl_float!(f32);
impl_float!(f64);
