//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real floating-point scalar the simulator is generic over (`f32` or `f64`).
///
/// Besides the usual `num_traits` surface this carries the handful of
/// precision-dependent tolerances that the eigen-solver and the precoder
/// constructions share, so that an `f32` build does not reject matrices that
/// are Hermitian to single precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Relative Frobenius tolerance for accepting a matrix as Hermitian.
    const HERMITIAN_TOL: Self;
    /// Relative off-diagonal mass at which the Jacobi sweeps stop.
    const EIG_TOL: Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// One draw from N(0, 1).
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in every Real")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const HERMITIAN_TOL: Self = 1e-10;
    const EIG_TOL: Self = 1e-15;

    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    const HERMITIAN_TOL: Self = 1e-5;
    const EIG_TOL: Self = 1e-7;

    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
