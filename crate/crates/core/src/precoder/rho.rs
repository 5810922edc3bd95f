//! Per-stream power split of the source precoder.
//!
//! The split minimises an upper bound on the probability that the relay
//! decodes neither stream. For a fixed value `k` of the stream-2 gain the
//! bound is
//!
//! ```text
//! ρ1^{-(W1-1)} ρ2^{-W2} exp(-k / (ρ2 δ̃2)) [exp(-lo(k) / (ρ1 δ̃1)) - exp(-hi(k) / (ρ1 δ̃1))]₊
//! lo(k) = max(0, k / (4 ε_R D) - N0 / (4 ε_R)),   hi(k) = (k + N0) D
//! ```
//!
//! and [`RhoMode::Integrated`] integrates it over `k ∈ [0, ∞)`. The
//! integrand is a difference of exponentials of linear functions on each of
//! at most two pieces (split where `lo` leaves zero, ending where the
//! bracket closes), so the integral is evaluated in closed form, in log
//! space, with `expm1`/`ln1p` guarding the cancellations.

use crate::error::{Error, Result};
use crate::mathcore::Matrix;
use crate::mathcore::hermitian_eig;
use crate::scalar::Real;

use super::search::golden_section;

/// Grid resolution of the scan that brackets the minimiser.
const SCAN_POINTS: usize = 2001;

/// How the auxiliary stream-2 gain `k` is handled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoMode<T> {
    /// Integrate the bound over `k`.
    Integrated,
    /// Evaluate the bound at one fixed `k`.
    PerK(T),
}

/// Inputs of the power-split problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoParams<T> {
    pub delta_tilde_1: T,
    pub delta_tilde_2: T,
    pub eps_r: T,
    pub d_thresh: T,
    pub n0: T,
    pub w1: u32,
    pub w2: u32,
}

impl<T: Real> RhoParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta_tilde_1", self.delta_tilde_1),
            ("delta_tilde_2", self.delta_tilde_2),
            ("d_thresh", self.d_thresh),
            ("n0", self.n0),
        ];
        for (name, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.eps_r > T::zero() && self.eps_r <= T::lit(0.5)) {
            return Err(Error::invalid("eps_r", format!("must lie in (0, 0.5], got {}", self.eps_r)));
        }
        if self.w1 == 0 || self.w2 == 0 {
            return Err(Error::invalid("w", "degrees of freedom must be positive"));
        }
        Ok(())
    }
}

/// `δ̃_i = pl_SR · σ_max(Ξ_SR,r) · α_S / Tr(Σ_i^{-1})`, where `Σ_1` holds the
/// `n1` largest eigenvalues of `Ξ_SR,t` and `Σ_2` the rest.
pub fn delta_tilde<T: Real>(xi_sr_t: &Matrix<T>, xi_sr_r: &Matrix<T>, pl_sr: T, alpha_s: T, n1: usize) -> Result<[T; 2]> {
    let t = hermitian_eig(xi_sr_t)?;
    let r = hermitian_eig(xi_sr_r)?;
    if n1 == 0 || n1 >= t.values.len() {
        return Err(Error::invalid("n1", "stream 1 needs between 1 and n_s - 1 antennas"));
    }
    let floor = T::lit(super::RANK_FLOOR) * t.max();
    let inv_trace = |vals: &[T]| vals.iter().map(|&s| s.max(floor).recip()).sum::<T>();
    let scale = pl_sr * r.max() * alpha_s;
    Ok([
        scale / inv_trace(&t.values[..n1]),
        scale / inv_trace(&t.values[n1..]),
    ])
}

fn bounds<T: Real>(p: &RhoParams<T>, k: T) -> (T, T) {
    let four_eps = T::lit(4.0) * p.eps_r;
    let lo = (k / (four_eps * p.d_thresh) - p.n0 / four_eps).max(T::zero());
    (lo, (k + p.n0) * p.d_thresh)
}

/// `ln(1 - exp(-(hi-lo)/a))`, the bracket with its `exp(-lo/a)` factor removed.
fn log_gap<T: Real>(p: &RhoParams<T>, a: T, k: T) -> T {
    let (lo, hi) = bounds(p, k);
    if hi <= lo {
        return T::neg_infinity();
    }
    (-(-(hi - lo) / a).exp_m1()).ln()
}

/// `ln [exp(-lo/a) - exp(-hi/a)]₊` at stream-2 gain `k`, or `-inf` when the
/// interval is empty.
fn log_bracket<T: Real>(p: &RhoParams<T>, a: T, k: T) -> T {
    -bounds(p, k).0 / a + log_gap(p, a, k)
}

/// `ln ∫_0^L exp(-c t) (1 - exp(-x0 - m t)) dt` for `c > 0`, `c + m > 0`;
/// `len = None` means `L = ∞`.
fn log_piece<T: Real>(c: T, x0: T, m: T, len: Option<T>) -> T {
    let (log_mass, tail) = match len {
        None => (-c.ln(), T::zero()),
        Some(l) => {
            let em = (-c * l).exp_m1();
            ((-em).ln() - c.ln(), ((-c * l).exp() * (-m * l).exp_m1() / em).ln_1p())
        }
    };
    // ln of (∫ e^{-ct} e^{-x0-mt}) / (∫ e^{-ct}).
    let log_ratio = -x0 - (m / c).ln_1p() + tail;
    log_mass + (-log_ratio.exp_m1()).ln()
}

/// `ln ∫_0^∞ exp(-k/b) [exp(-lo/a) - exp(-hi/a)]₊ dk`.
fn log_integral<T: Real>(p: &RhoParams<T>, a: T, b: T) -> T {
    let d = p.d_thresh;
    let lo_slope = (T::lit(4.0) * p.eps_r * d).recip();
    // lo = 0 on [0, k1]; beyond it lo = (k - k1) lo_slope.
    let k1 = p.n0 * d;
    let first = log_piece(b.recip(), p.n0 * d / a, d / a, Some(k1));
    let gap1 = bounds(p, k1).1 / a;
    let m2 = (d - lo_slope) / a;
    // The bracket closes where the gap reaches zero, if lo outgrows hi.
    let len2 = (m2 < T::zero()).then(|| -gap1 / m2);
    let second = -k1 / b + log_piece(b.recip() + lo_slope / a, gap1, m2, len2);
    log_sum_exp(&[first, second])
}

/// Natural log of the power-split objective at `ρ1` (`ρ2 = 1 - ρ1`).
/// Returns `+inf` outside `(0, 1)`.
pub fn rho_objective<T: Real>(p: &RhoParams<T>, mode: RhoMode<T>, rho1: T) -> T {
    let rho2 = T::one() - rho1;
    if !(rho1 > T::zero() && rho2 > T::zero()) {
        return T::infinity();
    }
    let a = rho1 * p.delta_tilde_1;
    let b = rho2 * p.delta_tilde_2;
    let prefactor = -T::lit(f64::from(p.w1) - 1.0) * rho1.ln() - T::lit(f64::from(p.w2)) * rho2.ln();
    let log_integral = match mode {
        RhoMode::PerK(k) => -k / b + log_bracket(p, a, k),
        RhoMode::Integrated => log_integral(p, a, b),
    };
    prefactor + log_integral
}

fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let max = terms.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|&t| (t - max).exp()).sum::<T>().ln()
}

/// Minimises [`rho_objective`] over `ρ1 ∈ (0, 1)`: a uniform scan brackets
/// the minimiser, golden-section search refines it, and the best point seen
/// is returned.
pub fn optimize_rho<T: Real>(p: &RhoParams<T>, mode: RhoMode<T>) -> Result<super::StreamSplit<T>> {
    p.validate()?;
    if let RhoMode::PerK(k) = mode {
        if !(k >= T::zero() && k.is_finite()) {
            return Err(Error::invalid("k", "per-k evaluation point must be finite and nonnegative"));
        }
    }
    let objective = |r: T| {
        let v = rho_objective(p, mode, r);
        // Empty brackets (-inf) mean the bound is vacuous, not optimal.
        if v.is_finite() { v } else { T::infinity() }
    };
    let step = T::one() / T::lit(SCAN_POINTS as f64 + 1.0);
    let mut best = (T::zero(), T::infinity());
    let mut best_idx = 0;
    for i in 1..=SCAN_POINTS {
        let r = step * T::lit(i as f64);
        let v = objective(r);
        if v < best.1 {
            best = (r, v);
            best_idx = i;
        }
    }
    if !best.1.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let lo = step * T::lit(best_idx as f64 - 1.0);
    let hi = step * T::lit(best_idx as f64 + 1.0);
    let tol = T::lit(1e-10).max(T::epsilon().sqrt());
    let (r, v) = golden_section(|r| Ok::<_, Error>(objective(r)), lo, hi, tol)?;
    let rho1 = if v < best.1 { r } else { best.0 };
    super::StreamSplit::new(rho1)
}
