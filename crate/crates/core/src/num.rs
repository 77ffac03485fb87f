//! Scalar abstraction shared by the analytic parts of the crate.
//!
//! Closed-form bounds, the clock formulas and the parameter ledger are
//! written against [`Real`], so they evaluate in `f32` or `f64`. The dense
//! density-matrix oracle additionally needs [`nalgebra::RealField`] for its
//! Hermitian eigensolver; that combination is [`OracleScalar`]. The decoded
//! error polynomial is evaluated over any [`num_traits::Num`] ring, which is
//! how exact rational values are obtained.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Absolute tolerance used for density-matrix invariants.
    const ORACLE_TOL: f64;

    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal is representable")
    }

    /// Converts a count into this scalar.
    #[inline]
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("count is representable")
    }
}

impl Real for f32 {
    const ORACLE_TOL: f64 = 1e-4;
}

impl Real for f64 {
    const ORACLE_TOL: f64 = 1e-10;
}

/// Scalar usable by the dense oracle (complex matrices and eigensolvers).
pub trait OracleScalar: Real + nalgebra::RealField {}

impl OracleScalar for f32 {}
impl OracleScalar for f64 {}

/// Builds `n` as an element of an arbitrary ring by double-and-add.
pub fn ring_count<T: num_traits::Num + Clone>(n: u64) -> T {
    let mut acc = T::zero();
    let mut base = T::one();
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            acc = acc + base.clone();
        }
        base = base.clone() + base;
        n >>= 1;
    }
    acc
}
