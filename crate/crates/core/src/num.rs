//! Scalar abstraction for the numerical core.
//!
//! Everything downstream is generic over [`Real`], so the same formulas run
//! in `f32` or `f64`. Production paths and all pinned tolerances assume
//! `f64`; the `f32` instantiation exists for cheap scans and type checks.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + crate::quad::QuadValue<Self>
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Shorthand conversion from an `f64` literal.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in this scalar type")
    }

    /// Convergence floor for iterative solvers: the stated `f64` tolerance,
    /// widened when the scalar type cannot resolve it.
    fn solver_tol(stated: f64) -> Self {
        let floor = Self::epsilon() * Self::of(100.0);
        Self::of(stated).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// `i` as a complex constant.
pub fn imag_unit<T: Real>() -> C<T> {
    C::new(T::zero(), T::one())
}

/// Pairwise (tree) summation: deterministic and with O(log n) error growth,
/// independent of how the slice was produced.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Pairwise summation for complex values.
pub fn pairwise_sum_c<T: Real>(xs: &[C<T>]) -> C<T> {
    match xs.len() {
        0 => C::new(T::zero(), T::zero()),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum_c(&xs[..mid]) + pairwise_sum_c(&xs[mid..])
        }
    }
}
