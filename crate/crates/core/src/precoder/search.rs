//! One-dimensional searches: golden-section minimisation and the master
//! source/relay power split.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::PowerSplit;

/// Number of points in the validation grid on `α_R ∈ [0, P0]`.
pub const VALIDATION_GRID: usize = 11;

/// Relative width (in units of `P0`) at which the golden-section search stops.
pub const SEARCH_WIDTH: f64 = 1e-3;

/// Golden-section minimisation of `f` on `[a, b]` down to bracket width
/// `tol`. Returns the best point evaluated.
pub(crate) fn golden_section<T: Real, E>(
    mut f: impl FnMut(T) -> std::result::Result<T, E>,
    a: T,
    b: T,
    tol: T,
) -> std::result::Result<(T, T), E> {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fd < fc { (d, fd) } else { (c, fc) };
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c)?;
            if fc < best.1 || (fc == best.1 && c < best.0) {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d)?;
            if fd < best.1 || (fd == best.1 && d < best.0) {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Outcome of one candidate split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation<T> {
    pub outage: T,
    pub std_err: T,
}

#[derive(Clone, Debug)]
pub struct SearchResult<T> {
    pub split: PowerSplit<T>,
    pub evaluation: Evaluation<T>,
    /// Validation grid as `(α_R, evaluation)`.
    pub grid: Vec<(T, Evaluation<T>)>,
    pub evaluations: usize,
}

/// Chooses `α_R ∈ [0, P0]` (with `α_S = P0 - α_R`) minimising the evaluated
/// outage.
///
/// The 11-point grid `α_R = i·P0/10` is evaluated first; golden-section search
/// then refines the interval around the best grid point to width `1e-3·P0`.
/// The best evaluation overall is returned, ties going to the smaller `α_R`,
/// so the result is never worse than the grid. The evaluator should use
/// common random numbers so candidates are compared on equal footing.
pub fn master_power_split<T: Real>(
    p0: T,
    mut evaluator: impl FnMut(PowerSplit<T>) -> Result<Evaluation<T>>,
) -> Result<SearchResult<T>> {
    if !(p0 > T::zero() && p0.is_finite()) {
        return Err(Error::invalid("p0", format!("must be positive and finite, got {p0}")));
    }
    let mut evaluations = 0;
    let mut eval = |alpha_r: T| -> Result<Evaluation<T>> {
        evaluations += 1;
        let e = evaluator(PowerSplit::on_budget(p0, alpha_r)?)?;
        if !e.outage.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok(e)
    };

    let last = VALIDATION_GRID - 1;
    let mut grid = Vec::with_capacity(VALIDATION_GRID);
    for i in 0..=last {
        let alpha_r = p0 * T::lit(i as f64) / T::lit(last as f64);
        grid.push((alpha_r, eval(alpha_r)?));
    }
    let best_idx = (0..grid.len())
        .min_by(|&i, &j| grid[i].1.outage.partial_cmp(&grid[j].1.outage).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let mut best = grid[best_idx];

    let lo = grid[best_idx.saturating_sub(1)].0;
    let hi = grid[(best_idx + 1).min(last)].0;
    let mut refined = Vec::new();
    golden_section(
        |alpha_r| {
            let e = eval(alpha_r)?;
            refined.push((alpha_r, e));
            Ok::<_, Error>(e.outage)
        },
        lo,
        hi,
        T::lit(SEARCH_WIDTH) * p0,
    )?;
    for &(alpha_r, e) in &refined {
        if e.outage < best.1.outage || (e.outage == best.1.outage && alpha_r < best.0) {
            best = (alpha_r, e);
        }
    }

    Ok(SearchResult {
        split: PowerSplit::on_budget(p0, best.0)?,
        evaluation: best.1,
        grid,
        evaluations,
    })
}
