//! Scalar abstractions.
//!
//! Sequence arithmetic (the forward transform, its inverse and the closed
//! form) is written against [`Scalar`], so the same code runs on `f32`,
//! `f64` and exact [`BigRational`]. Seminorm values are always reported in a
//! floating type implementing [`Real`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, One, Signed, ToPrimitive};

/// A real field element usable as a vector coordinate.
pub trait Scalar:
    Num + Signed + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync
{
    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_value(&self) -> bool;

    /// `1/2` in this field.
    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    /// `2^e` for a possibly negative exponent.
    fn pow2(e: i64) -> Self {
        let base = if e >= 0 {
            Self::one() + Self::one()
        } else {
            Self::half()
        };
        let mut acc = Self::one();
        for _ in 0..e.unsigned_abs() {
            acc = acc * base.clone();
        }
        acc
    }

    /// Lossless where the type allows it (exact for rationals, identity for floats).
    fn from_f64_exact(v: f64) -> Option<Self> {
        Self::from_f64(v)
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn pow2(e: i64) -> Self {
        (e as f64).exp2()
    }
}

impl Scalar for BigRational {
    fn is_finite_value(&self) -> bool {
        true
    }

    fn pow2(e: i64) -> Self {
        let p = BigInt::one() << e.unsigned_abs();
        if e >= 0 {
            BigRational::from_integer(p)
        } else {
            BigRational::new_raw(BigInt::one(), p)
        }
    }

    fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
}

/// Floating type used for seminorm values and certificate bounds.
pub trait Real: Float + FromPrimitive + Debug + Send + Sync {
    fn from_scalar<S: Scalar>(s: &S) -> Self {
        s.to_f64()
            .and_then(Self::from_f64)
            .unwrap_or_else(Self::infinity)
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
