//! Scalar abstractions.
//!
//! [`Scalar`] is the field the frontier algebra runs over: floating point as
//! well as exact rationals, so the efficient-set constants of a small market
//! can be evaluated without rounding. [`Real`] adds the transcendental
//! operations (`exp`, `ln`, `sqrt`) the utility and distribution code needs.

use std::fmt::Debug;
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Field element usable by the linear-algebra and frontier code.
pub trait Scalar:
    Num + Neg<Output = Self> + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Machine resolution of the type as an `f64`; zero for exact types.
    const RESOLUTION: f64;

    /// Converts an `f64` constant. Panics if the constant is not representable,
    /// which only happens for non-finite input.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant must be representable")
    }

    /// Converts a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    /// A tolerance of `t`, floored at a small multiple of the type's resolution.
    fn tol(t: f64) -> Self {
        Self::of(t.max(1e3 * Self::RESOLUTION))
    }

    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn is_finite_value(self) -> bool;

    fn approx_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const RESOLUTION: f64 = f64::EPSILON;

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    const RESOLUTION: f64 = f32::EPSILON as f64;

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Ratio<i64> {
    const RESOLUTION: f64 = 0.0;

    fn is_finite_value(self) -> bool {
        true
    }
}

impl Scalar for Ratio<i128> {
    const RESOLUTION: f64 = 0.0;

    fn is_finite_value(self) -> bool {
        true
    }
}

/// Floating-point scalar (`f32` or `f64`).
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}
