//! Scalar abstraction shared by the numerical core.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the linear algebra and the classical solver are generic over.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; every supported scalar can represent it approximately.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance below which a quantity is treated as numerically zero for this precision.
    fn tol(f64_tol: f64) -> Self {
        let eps = Self::epsilon().to_f64_lossy();
        Self::lit(f64_tol.max(eps * 1e3))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Rounds `x` up to an integer, treating values within relative 1e-9 of an
/// integer as that integer so floating residue does not bump a count.
pub fn ceil_count(x: f64) -> u128 {
    if !x.is_finite() || x <= 0.0 {
        return 0;
    }
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        x.ceil()
    };
    v as u128
}
