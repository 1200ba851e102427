//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion used for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn finite(self) -> bool {
        self.as_f64().is_finite()
    }

    /// Raises a double-precision tolerance to what this scalar can resolve.
    fn tol(tol: f64) -> f64 {
        tol.max(1e3 * Self::default_epsilon().as_f64())
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated sum. Weighted inner products feed normalizations whose
/// rounding would otherwise grow with the grid size.
pub fn compensated_sum<T: Real>(terms: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            carry += (sum - next) + t;
        } else {
            carry += (t - next) + sum;
        }
        sum = next;
    }
    sum + carry
}

/// `Σ w_k a_k b_k` with weights cycling over blocks of length `weights.len()`.
pub fn weighted_dot<T: Real>(a: &[T], b: &[T], weights: &[T]) -> T {
    let n = weights.len();
    compensated_sum(a.iter().zip(b).enumerate().map(|(k, (&x, &y))| weights[k % n] * x * y))
}
