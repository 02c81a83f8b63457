//! Martingale diagnostics: how far the exponential moment of the truncated
//! N-day density sits from the quadratic approximation that the risk-neutral
//! drift is built on.

use crate::returns::ReturnModel;
use crate::spectral::{build_density, DensityGrid};
use crate::{Real, Result};
use serde::Serialize;

/// One horizon's worth of martingale bookkeeping.
///
/// `relative_defect` measures the approximation error against the demanded
/// increment: `(quadratic_approx - mgf) / (mgf - 1)`. Both the numerator and
/// the denominator are small for daily horizons, so normalizing by the raw
/// moment would report a meaninglessly tiny number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleReport<T> {
    pub horizon_days: u32,
    pub mgf: T,
    pub quadratic_approx: T,
    pub relative_defect: T,
}

/// Build the N-day density and evaluate its exponential moment against
/// `exp(N gamma^2 / 2)`.
pub fn mgf_residual<T: Real>(
    model: &ReturnModel<T>,
    horizon_days: u32,
    n_samples: usize,
) -> Result<MartingaleReport<T>> {
    let grid = build_density(model, horizon_days, n_samples)?;
    Ok(mgf_residual_from_grid(&grid, model.gamma()))
}

/// Same report from a grid that has already been built.
pub fn mgf_residual_from_grid<T: Real>(grid: &DensityGrid<T>, gamma: T) -> MartingaleReport<T> {
    let n_days = T::from_u32(grid.horizon_days()).unwrap();
    let mgf = exponential_moment(grid);
    let quadratic_approx = (n_days * gamma * gamma / T::lit(2.0)).exp();
    let relative_defect = (quadratic_approx - mgf) / (mgf - T::one());
    MartingaleReport {
        horizon_days: grid.horizon_days(),
        mgf,
        quadratic_approx,
        relative_defect,
    }
}

/// Trapezoidal `E[exp(X)]` on the truncated window.
pub fn exponential_moment<T: Real>(grid: &DensityGrid<T>) -> T {
    let n = grid.values().len();
    let d = grid.spec().spacing();
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for j in 0..n {
        let w = if j == 0 || j == n - 1 { half } else { T::one() };
        acc = acc + w * grid.x_at(j).exp() * grid.values()[j];
    }
    acc * d
}

/// Per-day drift that kills the quadratic term of the exponential moment:
/// `mu = rate / days_per_year - gamma^2 / 2`.
pub fn risk_neutral_drift<T: Real>(gamma: T, annual_rate: T, trading_days_per_year: u32) -> T {
    annual_rate / T::from_u32(trading_days_per_year).unwrap() - gamma * gamma / T::lit(2.0)
}
