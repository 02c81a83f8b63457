//! Truncation diagnostics: price-plateau scans over the window half-width and
//! Hölder-style bounds on the tail error committed by convolving truncated
//! densities.

use crate::pricing::{price_call, OptionContract, PricingConfig};
use crate::returns::{student_density, student_upper_tail, ReturnModel};
use crate::spectral::{build_density_with, AliasingGuard, DensityGrid};
use crate::{Error, Real, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Call prices on a (horizon, half-width) lattice. `prices[i][j]` belongs to
/// `horizons[i]` and `x_max_values[j]`; `None` marks a cell whose density
/// reconstruction blew up.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateauScan<T> {
    pub strike_ratio: T,
    pub horizons: Vec<u32>,
    pub x_max_values: Vec<T>,
    pub prices: Vec<Vec<Option<T>>>,
}

/// Scan call prices over window half-widths.
///
/// The default aliasing guard is deliberately relaxed here: the scan's
/// purpose is to expose how the price degrades as the window shrinks, so
/// cells are dropped only when the reconstruction is outright meaningless
/// (strong negative ringing, or a wrapped density that no longer decays
/// toward the window edge).
pub fn plateau_scan<T: Real>(
    gamma: T,
    strike_ratio: T,
    horizons: &[u32],
    x_max_values: &[T],
    config: &PricingConfig<T>,
    n_samples: usize,
) -> Result<PlateauScan<T>> {
    if strike_ratio <= T::zero() {
        return Err(Error::NonPositive {
            name: "strike_ratio",
            value: strike_ratio.to_f64().unwrap_or(f64::NAN),
        });
    }
    let guard = AliasingGuard {
        edge_fraction: T::lit(0.5),
        negative_fraction: T::lit(1e-3),
    };
    let strike = strike_ratio * config.spot();
    let cells: Vec<(usize, usize)> = (0..horizons.len())
        .flat_map(|i| (0..x_max_values.len()).map(move |j| (i, j)))
        .collect();
    let flat: Result<Vec<Option<T>>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let n_days = horizons[i];
            let model = ReturnModel::with_x_max(gamma, x_max_values[j])?;
            let grid = match build_density_with(&model, n_days, n_samples, &guard) {
                Ok(g) => g,
                Err(Error::HorizonTooLong { .. }) | Err(Error::DegenerateDistribution) => {
                    return Ok(None)
                }
                Err(e) => return Err(e),
            };
            let contract = OptionContract::call(strike, n_days)?;
            Ok(Some(price_call(&grid, &contract, config, gamma)?.price))
        })
        .collect();
    let flat = flat?;
    let prices = flat
        .chunks(x_max_values.len())
        .map(|row| row.to_vec())
        .collect();
    Ok(PlateauScan {
        strike_ratio,
        horizons: horizons.to_vec(),
        x_max_values: x_max_values.to_vec(),
        prices,
    })
}

impl<T: Real> PlateauScan<T> {
    /// CSV rows `horizon_days,x_max,price` with empty price cells for
    /// unavailable combinations.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "horizon_days,x_max,price")?;
        for (i, &n) in self.horizons.iter().enumerate() {
            for (j, &x_max) in self.x_max_values.iter().enumerate() {
                match self.prices[i][j] {
                    Some(p) => writeln!(w, "{n},{x_max},{p}")?,
                    None => writeln!(w, "{n},{x_max},")?,
                }
            }
        }
        Ok(())
    }
}

/// Price drift across a plateau row. Both conventions are reported because
/// neither one is canonical: the absolute step and the step relative to the
/// first available price say different things for small premiums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauInclination<T> {
    pub horizon_days: u32,
    pub n_available: usize,
    pub delta_absolute: Option<T>,
    pub delta_relative: Option<T>,
}

pub fn plateau_inclination<T: Real>(scan: &PlateauScan<T>) -> Vec<PlateauInclination<T>> {
    scan.horizons
        .iter()
        .zip(&scan.prices)
        .map(|(&horizon_days, row)| {
            let avail: Vec<T> = row.iter().flatten().copied().collect();
            let (delta_absolute, delta_relative) = match (avail.first(), avail.last()) {
                (Some(&first), Some(&last)) => (
                    Some(last - first),
                    (first != T::zero()).then(|| (last - first) / first),
                ),
                _ => (None, None),
            };
            PlateauInclination {
                horizon_days,
                n_available: avail.len(),
                delta_absolute,
                delta_relative,
            }
        })
        .collect()
}

/// Upper bound on the pairwise tail-overlap error
/// `2 ∫_{x_max}^∞ p(x) p(x - y) dx` committed when two truncated one-day
/// densities are convolved: the leading factor bounds `p` on the tail, the
/// trailing one is the exact survival function at the shifted edge.
pub fn holder_bound_pairwise<T: Real>(gamma: T, m_mult: T, y: T) -> Result<T> {
    for (name, v) in [("gamma", gamma), ("m_mult", m_mult)] {
        if v <= T::zero() {
            return Err(Error::NonPositive {
                name,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let edge = T::lit(2.0) / (T::PI() * gamma * m_mult.powi(4));
    let tail = student_upper_tail(gamma * m_mult - y.abs(), gamma);
    Ok(T::lit(2.0) * edge * tail)
}

/// Exact pairwise tail overlap `2 ∫_{x_max}^∞ p(x) p(x - y) dx`, evaluated by
/// Simpson quadrature under the substitution `x = x_max + gamma tan(t)`.
pub fn pairwise_tail_overlap<T: Real>(gamma: T, m_mult: T, y: T) -> Result<T> {
    let x_max = gamma * m_mult;
    let y = y.abs();
    let n = 4000usize;
    let half_pi = T::PI() / T::lit(2.0);
    let h = half_pi / T::from_usize(n).unwrap();
    let integrand = |t: T| -> Result<T> {
        let x = x_max + gamma * t.tan();
        let sec = T::one() / t.cos();
        let jac = gamma * sec * sec;
        Ok(student_density(x, gamma)? * student_density(x - y, gamma)? * jac)
    };
    let mut acc = integrand(T::zero())?;
    for k in 1..n {
        let t = T::from_usize(k).unwrap() * h;
        let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc = acc + w * integrand(t)?;
    }
    // integrand vanishes at t = pi/2
    Ok(T::lit(2.0) * acc * h / T::lit(3.0))
}

/// Hölder bound for one convolution step at a set of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvErrorBound<T> {
    pub n_convolutions: u32,
    pub y_points: Vec<T>,
    pub absolute_bound: Vec<T>,
    pub relative_bound: Vec<T>,
}

/// Bound the error of the step `p^(n) = p^(n-1) * p` in terms of the already
/// built `(n-1)`-day grid: the tail factor of the one-day density times the
/// mass the previous density carries in the strip `[x_max - |y|, x_max]`.
/// Relative bounds are taken against the n-day density itself.
pub fn holder_bound_nfold<T: Real>(
    prev: &DensityGrid<T>,
    curr: &DensityGrid<T>,
    gamma: T,
    y_points: &[T],
) -> Result<ConvErrorBound<T>> {
    let x_max = prev.spec().x_max();
    if curr.spec().x_max() != x_max {
        return Err(Error::HorizonMismatch {
            contract: prev.horizon_days(),
            grid: curr.horizon_days(),
        });
    }
    let m_mult = x_max / gamma;
    let edge = T::lit(2.0) / (T::PI() * gamma * m_mult.powi(4));
    let mut absolute_bound = Vec::with_capacity(y_points.len());
    let mut relative_bound = Vec::with_capacity(y_points.len());
    for &y in y_points {
        let strip = strip_mass(prev, x_max - y.abs(), x_max);
        let abs = T::lit(2.0) * edge * strip;
        let denom = curr.value_at(y);
        absolute_bound.push(abs);
        relative_bound.push(if denom > T::zero() {
            abs / denom
        } else {
            T::infinity()
        });
    }
    Ok(ConvErrorBound {
        n_convolutions: curr.horizon_days(),
        y_points: y_points.to_vec(),
        absolute_bound,
        relative_bound,
    })
}

/// Mass of the linear interpolant of `grid` over `[a, b]` clipped to the
/// window.
fn strip_mass<T: Real>(grid: &DensityGrid<T>, a: T, b: T) -> T {
    let n = grid.values().len();
    let lo = grid.x_at(0);
    let hi = grid.x_at(n - 1);
    let a = a.max(lo);
    let b = b.min(hi);
    if a >= b {
        return T::zero();
    }
    let d = grid.spec().spacing();
    let half = T::lit(0.5);
    let ja = ((a - lo) / d).ceil().to_usize().unwrap_or(0).min(n - 1);
    let jb = ((b - lo) / d).floor().to_usize().unwrap_or(0).min(n - 1);
    if ja > jb {
        // both endpoints inside one cell
        return half * (grid.value_at(a) + grid.value_at(b)) * (b - a);
    }
    let mut acc = T::zero();
    for j in ja..jb {
        acc = acc + half * (grid.values()[j] + grid.values()[j + 1]) * d;
    }
    let left = grid.x_at(ja) - a;
    if left > T::zero() {
        acc = acc + half * (grid.value_at(a) + grid.values()[ja]) * left;
    }
    let right = b - grid.x_at(jb);
    if right > T::zero() {
        acc = acc + half * (grid.values()[jb] + grid.value_at(b)) * right;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_density;
    use approx::assert_relative_eq;

    const GAMMA: f64 = 0.02;

    fn config() -> PricingConfig<f64> {
        PricingConfig::new(1.0, 0.02).unwrap()
    }

    #[test]
    fn itm_row_monotone_and_flat() {
        let scan = plateau_scan(
            GAMMA,
            0.9,
            &[1, 8],
            &[1.0, 2.0, 3.0, 5.0],
            &config(),
            1 << 14,
        )
        .unwrap();
        for row in &scan.prices {
            let prices: Vec<f64> = row.iter().flatten().copied().collect();
            assert_eq!(prices.len(), 4);
            for w in prices.windows(2) {
                assert!(w[1] >= w[0] - 1e-5, "{} then {}", w[0], w[1]);
            }
            let (lo, hi) = (prices[0], prices[3]);
            assert!((hi - lo) / lo <= 0.01, "spread {} to {}", lo, hi);
        }
    }

    #[test]
    fn inclination_reports_both_conventions() {
        let scan = plateau_scan(GAMMA, 1.1, &[8], &[1.0, 2.0, 5.0], &config(), 1 << 14).unwrap();
        let rows = plateau_inclination(&scan);
        assert_eq!(rows.len(), 1);
        let row = rows[0];
        assert_eq!(row.horizon_days, 8);
        assert_eq!(row.n_available, 3);
        let abs = row.delta_absolute.unwrap();
        let rel = row.delta_relative.unwrap();
        assert!(abs >= 0.0);
        assert_relative_eq!(rel, abs / scan.prices[0][0].unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn scan_marks_blown_up_cells_unavailable() {
        // a 0.1-wide window cannot hold a 64-day sum of 0.02-wide returns
        let scan = plateau_scan(GAMMA, 0.9, &[64], &[0.1], &config(), 1 << 12).unwrap();
        assert_eq!(scan.prices[0][0], None);
    }

    #[test]
    fn csv_export_includes_empty_cells() {
        let scan = plateau_scan(GAMMA, 0.9, &[1, 64], &[0.1, 2.0], &config(), 1 << 12).unwrap();
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("horizon_days,x_max,price\n"));
        assert!(text.contains("64,0.1,\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn pairwise_bound_dominates_exact_overlap() {
        for m in [10.0, 30.0, 100.0] {
            for frac in [0.0, 0.25, 0.5, 0.9] {
                let y = frac * m * GAMMA;
                let exact = pairwise_tail_overlap(GAMMA, m, y).unwrap();
                let bound = holder_bound_pairwise(GAMMA, m, y).unwrap();
                assert!(exact <= bound, "M={m} y={y}: {exact} > {bound}");
            }
        }
    }

    #[test]
    fn pairwise_bound_at_full_shift_uses_half_tail() {
        // y = x_max puts the survival factor at zero, where it equals 1/2
        let m = 30.0f64;
        let bound = holder_bound_pairwise(GAMMA, m, m * GAMMA).unwrap();
        let edge = 2.0 / (std::f64::consts::PI * GAMMA * m.powi(4));
        assert_relative_eq!(bound, edge, epsilon = 1e-12);
    }

    #[test]
    fn nfold_step_two_matches_pairwise() {
        let model = ReturnModel::new(GAMMA, 100.0).unwrap();
        let one = build_density(&model, 1, 1 << 14).unwrap();
        let two = build_density(&model, 2, 1 << 14).unwrap();
        let ys: Vec<f64> = (0..20).map(|i| -1.8 + 0.19 * i as f64).collect();
        let nfold = holder_bound_nfold(&one, &two, GAMMA, &ys).unwrap();
        for (i, &y) in ys.iter().enumerate() {
            let pairwise = holder_bound_pairwise(GAMMA, 100.0, y).unwrap();
            assert!(
                (nfold.absolute_bound[i] - pairwise).abs() <= 1e-6,
                "y={y}: {} vs {pairwise}",
                nfold.absolute_bound[i]
            );
        }
    }

    #[test]
    fn long_chain_relative_bound_stays_small_in_the_bulk() {
        let model = ReturnModel::new(GAMMA, 100.0).unwrap();
        let prev = build_density(&model, 49, 1 << 14).unwrap();
        let curr = build_density(&model, 50, 1 << 14).unwrap();
        let limit = 2.0 - 10.0 * GAMMA;
        let ys: Vec<f64> = (0..=40).map(|i| -limit + 2.0 * limit * i as f64 / 40.0).collect();
        let bound = holder_bound_nfold(&prev, &curr, GAMMA, &ys).unwrap();
        for (y, rel) in ys.iter().zip(&bound.relative_bound) {
            assert!(*rel < 1e-2, "y={y}: relative bound {rel}");
        }
    }

    #[test]
    fn strip_mass_full_window_is_total_mass() {
        let model = ReturnModel::new(GAMMA, 100.0).unwrap();
        let grid = build_density(&model, 1, 1 << 14).unwrap();
        let total = strip_mass(&grid, -2.0, 2.0);
        assert_relative_eq!(total, grid.integrate(|_| 1.0), epsilon = 1e-12);
        let halves = strip_mass(&grid, -2.0, 0.0) + strip_mass(&grid, 0.0, 2.0);
        assert_relative_eq!(halves, total, epsilon = 1e-12);
        assert_eq!(strip_mass(&grid, 1.0, 0.5), 0.0);
    }
}
