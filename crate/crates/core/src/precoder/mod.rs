//! Statistical-CSIT precoders for the source and relay, the per-stream power
//! split and the master power-split search.
//!
//! Both closed forms invert the transmit-side correlation spectrum so that
//! the precoded correlation is a scaled identity (condition number 1). Since
//! power only scales a design, each precoder is kept as a unit-power
//! [`PrecoderShape`] plus a [`PrecoderScaling`]; the Monte Carlo engine
//! relies on this to reuse channel statistics across power splits.

mod rho;
mod search;

pub use rho::{delta_tilde, optimize_rho, rho_objective, RhoMode, RhoParams};
pub use search::{master_power_split, Evaluation, SearchResult, VALIDATION_GRID};

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;

use crate::channel::gaussian_matrix;
use crate::error::{Error, Result};
use crate::mathcore::{hermitian_eig, HermitianEig, Matrix};
use crate::scalar::Real;

/// Eigenvalues below this fraction of the largest are floored before
/// inversion.
pub const RANK_FLOOR: f64 = 1e-12;

/// Power budgets of the source and the relay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSplit<T> {
    pub alpha_s: T,
    pub alpha_r: T,
}

impl<T: Real> PowerSplit<T> {
    pub fn new(alpha_s: T, alpha_r: T) -> Result<Self> {
        if !(alpha_s >= T::zero() && alpha_r >= T::zero()) || !(alpha_s + alpha_r).is_finite() {
            return Err(Error::invalid("power split", "budgets must be finite and nonnegative"));
        }
        Ok(Self { alpha_s, alpha_r })
    }

    /// `α_S = P0 - α_R` (budget constraint active).
    pub fn on_budget(p0: T, alpha_r: T) -> Result<Self> {
        Self::new((p0 - alpha_r).max(T::zero()), alpha_r)
    }

    pub fn even(p0: T) -> Self {
        let half = p0 * T::lit(0.5);
        Self { alpha_s: half, alpha_r: half }
    }

    pub fn total(&self) -> T {
        self.alpha_s + self.alpha_r
    }
}

/// Fraction of the source budget given to each stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamSplit<T> {
    pub rho1: T,
    pub rho2: T,
}

impl<T: Real> StreamSplit<T> {
    /// `ρ2 = 1 - ρ1`.
    pub fn new(rho1: T) -> Result<Self> {
        if !(rho1 >= T::zero() && rho1 <= T::one()) {
            return Err(Error::invalid("rho1", format!("must lie in [0, 1], got {rho1}")));
        }
        Ok(Self { rho1, rho2: T::one() - rho1 })
    }

    pub fn even() -> Self {
        let half = T::lit(0.5);
        Self { rho1: half, rho2: half }
    }
}

/// Source and relay precoders with the power bookkeeping that produced them.
#[derive(Clone, Debug)]
pub struct PrecoderPair<T> {
    pub p_s: Matrix<T>,
    pub p_r: Matrix<T>,
    pub split: PowerSplit<T>,
    pub stream_split: StreamSplit<T>,
}

fn floored_spectrum<T: Real>(xi: &Matrix<T>) -> Result<HermitianEig<T>> {
    let mut eig = hermitian_eig(xi)?;
    let max = eig.max();
    if !(max > T::zero()) {
        return Err(Error::invalid("correlation", "matrix has no positive eigenvalue"));
    }
    let floor = T::lit(RANK_FLOOR) * max;
    for v in &mut eig.values {
        *v = v.max(floor);
    }
    Ok(eig)
}

/// Unit-power equalizing block `U^*[:, cols] Σ^{-1/2} / sqrt(Tr Σ^{-1})` over
/// the eigenpairs `cols`.
fn equalizing_block<T: Real>(eig: &HermitianEig<T>, cols: std::ops::Range<usize>) -> Matrix<T> {
    let inv_trace: T = eig.values[cols.clone()].iter().map(|&s| s.recip()).sum();
    let norm = inv_trace.sqrt();
    let start = cols.start;
    Matrix::from_fn(eig.vectors.rows(), cols.len(), |i, j| {
        eig.vectors[(i, start + j)].conj() * (eig.values[start + j].sqrt().recip() / norm)
    })
}

fn check_power<T: Real>(name: &'static str, alpha: T) -> Result<()> {
    if !(alpha >= T::zero() && alpha.is_finite()) {
        return Err(Error::invalid(name, format!("must be finite and nonnegative, got {alpha}")));
    }
    Ok(())
}

/// Relay precoder `sqrt(α_R / Tr Σ^{-1}) · U^* · Σ^{-1/2}` from the
/// eigendecomposition `Ξ = U Σ U^H` of the relay's transmit-side Gram matrix.
pub fn relay_precoder<T: Real>(xi_rd_t: &Matrix<T>, alpha_r: T) -> Result<Matrix<T>> {
    check_power("alpha_r", alpha_r)?;
    let eig = floored_spectrum(xi_rd_t)?;
    Ok(equalizing_block(&eig, 0..eig.values.len()).scale(alpha_r.sqrt()))
}

/// Source precoder: the eigenvalues of the source's transmit-side Gram
/// matrix are split into the top `n1` (stream 1) and the rest (stream 2),
/// and each block is equalized separately and given `ρ_i · α_S`.
pub fn source_precoder<T: Real>(xi_sr_t: &Matrix<T>, alpha_s: T, split: StreamSplit<T>, n1: usize) -> Result<Matrix<T>> {
    check_power("alpha_s", alpha_s)?;
    let [b1, b2] = source_blocks(xi_sr_t, n1)?;
    Ok(hstack(&b1.scale((alpha_s * split.rho1).sqrt()), &b2.scale((alpha_s * split.rho2).sqrt())))
}

fn source_blocks<T: Real>(xi_sr_t: &Matrix<T>, n1: usize) -> Result<[Matrix<T>; 2]> {
    let n = xi_sr_t.rows();
    if n1 == 0 || n1 >= n {
        return Err(Error::invalid("n1", format!("stream 1 needs between 1 and {} antennas, got {n1}", n - 1)));
    }
    let eig = floored_spectrum(xi_sr_t)?;
    Ok([equalizing_block(&eig, 0..n1), equalizing_block(&eig, n1..n)])
}

fn hstack<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    assert_eq!(a.rows(), b.rows());
    let split = a.cols();
    Matrix::from_fn(a.rows(), split + b.cols(), |i, j| if j < split { a[(i, j)] } else { b[(i, j - split)] })
}

/// Haar-distributed unitary via QR (Gram-Schmidt) of a complex Gaussian
/// matrix, with the phase of R's diagonal absorbed.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T> {
    let g: Matrix<T> = gaussian_matrix(n, n, rng);
    let mut q = Matrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<Complex<T>> = (0..n).map(|i| g[(i, j)]).collect();
        // Two passes of modified Gram-Schmidt keep orthogonality at working precision.
        for _ in 0..2 {
            for k in 0..j {
                let dot: Complex<T> = (0..n).map(|i| q[(i, k)].conj() * col[i]).sum();
                for (i, c) in col.iter_mut().enumerate() {
                    *c = *c - q[(i, k)] * dot;
                }
            }
        }
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        for (i, c) in col.into_iter().enumerate() {
            q[(i, j)] = c / norm;
        }
    }
    q
}

/// Unit-power precoder blocks: source stream blocks and the relay precoder,
/// each with Frobenius norm 1 (or zero).
#[derive(Clone, Debug)]
pub struct PrecoderShape<T> {
    pub source: [Matrix<T>; 2],
    pub relay: Matrix<T>,
}

/// Powers applied to a [`PrecoderShape`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecoderScaling<T> {
    pub split: PowerSplit<T>,
    pub stream_split: StreamSplit<T>,
}

impl<T: Real> PrecoderShape<T> {
    /// Closed-form equalizing designs from the transmit-side Gram matrices.
    pub fn statistical(xi_sr_t: &Matrix<T>, xi_rd_t: &Matrix<T>, n1: usize) -> Result<Self> {
        Ok(Self {
            source: source_blocks(xi_sr_t, n1)?,
            relay: relay_precoder(xi_rd_t, T::one())?,
        })
    }

    /// Random unitary precoders; with `ρ_i = n_i / n_S` the source precoder is
    /// `sqrt(α_S / n_S) · U`.
    pub fn random_unitary<R: Rng + ?Sized>(n_s: usize, n_r: usize, n1: usize, rng: &mut R) -> Result<Self> {
        if n1 == 0 || n1 >= n_s {
            return Err(Error::invalid("n1", "stream 1 needs between 1 and n_s - 1 antennas"));
        }
        let u_s: Matrix<T> = random_unitary(n_s, rng);
        let u_r: Matrix<T> = random_unitary(n_r, rng);
        let n2 = n_s - n1;
        Ok(Self {
            source: [
                u_s.columns(0..n1).scale(T::lit(n1 as f64).sqrt().recip()),
                u_s.columns(n1..n_s).scale(T::lit(n2 as f64).sqrt().recip()),
            ],
            relay: u_r.scale(T::lit(n_r as f64).sqrt().recip()),
        })
    }

    pub fn n1(&self) -> usize {
        self.source[0].cols()
    }

    pub fn assemble(&self, scaling: PrecoderScaling<T>) -> PrecoderPair<T> {
        let PrecoderScaling { split, stream_split } = scaling;
        let b1 = self.source[0].scale((split.alpha_s * stream_split.rho1).sqrt());
        let b2 = self.source[1].scale((split.alpha_s * stream_split.rho2).sqrt());
        PrecoderPair {
            p_s: hstack(&b1, &b2),
            p_r: self.relay.scale(split.alpha_r.sqrt()),
            split,
            stream_split,
        }
    }
}

impl<T: Real> PrecoderPair<T> {
    /// All-zero precoders, used to switch a node off.
    pub fn silent(n_s: usize, n_r: usize) -> Self {
        Self {
            p_s: Matrix::zeros(n_s, n_s),
            p_r: Matrix::zeros(n_r, n_r),
            split: PowerSplit { alpha_s: T::zero(), alpha_r: T::zero() },
            stream_split: StreamSplit::even(),
        }
    }

    pub fn transmit_power(&self) -> T {
        self.p_s.frobenius_norm_sq() + self.p_r.frobenius_norm_sq()
    }

    pub fn is_silent(&self) -> bool {
        self.p_s.as_slice().iter().chain(self.p_r.as_slice()).all(|z| z.is_zero())
    }
}
