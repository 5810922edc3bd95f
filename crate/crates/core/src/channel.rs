//! Correlated Rayleigh MIMO links under the Kronecker model
//! `H = sqrt(pl) · Λr^{1/2} · G · (Λt^{1/2})^T`.

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::{hermitian_eig, psd_sqrt, Matrix};
use crate::scalar::Real;

/// The three links of the two-hop system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Link {
    SourceRelay,
    SourceDestination,
    RelayDestination,
}

/// Node-to-node distances in kilometres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Topology {
    pub d_sr_km: f64,
    pub d_rd_km: f64,
    pub d_sd_km: f64,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            d_sr_km: 0.4,
            d_rd_km: 0.3,
            d_sd_km: 0.5,
        }
    }
}

impl Topology {
    pub fn distance(&self, link: Link) -> f64 {
        match link {
            Link::SourceRelay => self.d_sr_km,
            Link::SourceDestination => self.d_sd_km,
            Link::RelayDestination => self.d_rd_km,
        }
    }
}

/// Antenna counts per node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Antennas {
    pub n_s: usize,
    pub n_r: usize,
    pub n_d: usize,
}

impl Antennas {
    /// `(receive, transmit)` antenna counts of a link.
    pub fn link_dims(&self, link: Link) -> (usize, usize) {
        match link {
            Link::SourceRelay => (self.n_r, self.n_s),
            Link::SourceDestination => (self.n_d, self.n_s),
            Link::RelayDestination => (self.n_d, self.n_r),
        }
    }
}

/// Path loss in dB (negative) at distance `d_km`.
pub fn path_loss_db(d_km: f64, link: Link) -> Result<f64> {
    if !(d_km > 0.0 && d_km.is_finite()) {
        return Err(Error::invalid("distance", format!("must be positive and finite, got {d_km}")));
    }
    let slope = match link {
        Link::SourceRelay => 26.0,
        Link::SourceDestination | Link::RelayDestination => 30.0,
    };
    Ok(-52.4 - slope * d_km.log10())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Exponential correlation matrix with entries `rho^|i-j|`.
pub fn exp_correlation<T: Real>(n: usize, rho: T) -> Result<Matrix<T>> {
    if n == 0 {
        return Err(Error::invalid("antennas", "need at least one antenna"));
    }
    if !(rho >= T::zero() && rho < T::one()) {
        return Err(Error::invalid("rho", format!("must lie in [0, 1), got {rho}")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| {
        Complex::new(rho.powi(i.abs_diff(j) as i32), T::zero())
    }))
}

/// Transmit- and receive-side correlation of one link, with cached
/// principal square roots.
#[derive(Clone, Debug)]
pub struct LinkCorrelation<T> {
    lambda_t: Matrix<T>,
    lambda_r: Matrix<T>,
    sqrt_t: Matrix<T>,
    sqrt_r: Matrix<T>,
}

impl<T: Real> LinkCorrelation<T> {
    /// Validates both matrices as Hermitian PSD with unit diagonal.
    pub fn new(lambda_t: Matrix<T>, lambda_r: Matrix<T>) -> Result<Self> {
        for (name, m) in [("lambda_t", &lambda_t), ("lambda_r", &lambda_r)] {
            check_correlation(name, m)?;
        }
        let sqrt_t = psd_sqrt(&lambda_t)?;
        let sqrt_r = psd_sqrt(&lambda_r)?;
        Ok(Self {
            lambda_t,
            lambda_r,
            sqrt_t,
            sqrt_r,
        })
    }

    /// Exponential correlation `rho` on both sides.
    pub fn exponential(n_rx: usize, n_tx: usize, rho: T) -> Result<Self> {
        Self::new(exp_correlation(n_tx, rho)?, exp_correlation(n_rx, rho)?)
    }

    pub fn lambda_t(&self) -> &Matrix<T> {
        &self.lambda_t
    }

    pub fn lambda_r(&self) -> &Matrix<T> {
        &self.lambda_r
    }

    /// Transmit-side Gram matrix `Λt^{1/2} (Λt^{1/2})^H`.
    pub fn xi_t(&self) -> Matrix<T> {
        &self.sqrt_t * &self.sqrt_t.adjoint()
    }

    /// Receive-side Gram matrix `Λr^{1/2} (Λr^{1/2})^H`.
    pub fn xi_r(&self) -> Matrix<T> {
        &self.sqrt_r * &self.sqrt_r.adjoint()
    }

    pub fn n_tx(&self) -> usize {
        self.lambda_t.rows()
    }

    pub fn n_rx(&self) -> usize {
        self.lambda_r.rows()
    }
}

fn check_correlation<T: Real>(name: &'static str, m: &Matrix<T>) -> Result<()> {
    m.ensure_hermitian()?;
    let tol = T::HERMITIAN_TOL.sqrt();
    if (0..m.rows()).any(|i| (m[(i, i)].re - T::one()).abs() > tol) {
        return Err(Error::invalid(name, "correlation matrix needs a unit diagonal"));
    }
    let eig = hermitian_eig(m)?;
    if eig.min() < -tol * eig.max() {
        return Err(Error::invalid(name, "correlation matrix is not positive semidefinite"));
    }
    Ok(())
}

/// Draws one link: `sqrt(pl) · Λr^{1/2} · G · (Λt^{1/2})^T` with `G` i.i.d.
/// unit-variance circular complex Gaussian.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    corr: &LinkCorrelation<T>,
    path_loss_linear: T,
    rng: &mut R,
) -> Result<Matrix<T>> {
    if !(path_loss_linear > T::zero() && path_loss_linear.is_finite()) {
        return Err(Error::invalid("path_loss_linear", "must be positive and finite"));
    }
    let g = gaussian_matrix(corr.n_rx(), corr.n_tx(), rng);
    let h = &(&corr.sqrt_r * &g) * &corr.sqrt_t.transpose();
    Ok(h.scale(path_loss_linear.sqrt()))
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries.
pub fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    let s = T::FRAC_1_SQRT_2();
    Matrix::from_fn(rows, cols, |_, _| {
        let re = T::std_normal(rng);
        let im = T::std_normal(rng);
        Complex::new(re * s, im * s)
    })
}

/// One TTI worth of channels.
#[derive(Clone, Debug)]
pub struct ChannelRealization<T> {
    pub h_sd: Matrix<T>,
    pub h_sr: Matrix<T>,
    pub h_rd: Matrix<T>,
}

/// Everything needed to draw realizations: correlations and linear path
/// losses of the three links.
#[derive(Clone, Debug)]
pub struct ChannelModel<T> {
    pub antennas: Antennas,
    pub sd: LinkCorrelation<T>,
    pub sr: LinkCorrelation<T>,
    pub rd: LinkCorrelation<T>,
    pub pl_sd: T,
    pub pl_sr: T,
    pub pl_rd: T,
}

impl<T: Real> ChannelModel<T> {
    /// Exponential correlation per link, path loss from the topology.
    pub fn new(antennas: Antennas, topology: &Topology, rho_sd: f64, rho_sr: f64, rho_rd: f64) -> Result<Self> {
        let build = |link: Link, rho: f64| {
            let (n_rx, n_tx) = antennas.link_dims(link);
            LinkCorrelation::exponential(n_rx, n_tx, T::lit(rho))
        };
        let pl = |link: Link| -> Result<T> { Ok(T::lit(db_to_linear(path_loss_db(topology.distance(link), link)?))) };
        Ok(Self {
            antennas,
            sd: build(Link::SourceDestination, rho_sd)?,
            sr: build(Link::SourceRelay, rho_sr)?,
            rd: build(Link::RelayDestination, rho_rd)?,
            pl_sd: pl(Link::SourceDestination)?,
            pl_sr: pl(Link::SourceRelay)?,
            pl_rd: pl(Link::RelayDestination)?,
        })
    }

    /// Draws the three links independently, in the order SD, SR, RD.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization<T>> {
        Ok(ChannelRealization {
            h_sd: sample_channel(&self.sd, self.pl_sd, rng)?,
            h_sr: sample_channel(&self.sr, self.pl_sr, rng)?,
            h_rd: sample_channel(&self.rd, self.pl_rd, rng)?,
        })
    }
}

/// Independent random stream of trial `trial` under master seed `seed`.
///
/// ChaCha's 64-bit stream id selects the trial, so each trial's draws are
/// fixed regardless of which worker runs it or in what order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
