//! Sampled horizon densities built from the closed-form convolution spectrum
//! and one inverse FFT per horizon.

use crate::returns::{convolution_spectrum, ReturnModel};
use crate::{Error, Real, Result};
use num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;
use std::io::Write;

pub const MIN_SAMPLES: usize = 1 << 10;

/// Uniform sampling of the spatial window `(-x_max, x_max)`.
///
/// The `n_samples` points are `x_j = -x_max + j d` with `d = 2 x_max / n`;
/// the highest resolved frequency is `f_max = 1 / (2 d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec<T> {
    n_samples: usize,
    x_max: T,
    spacing: T,
    f_max: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(n_samples: usize, x_max: T) -> Result<Self> {
        if !n_samples.is_power_of_two() || n_samples < MIN_SAMPLES {
            return Err(Error::BadGridSize(n_samples));
        }
        if x_max <= T::zero() {
            return Err(Error::NonPositive {
                name: "x_max",
                value: x_max.to_f64().unwrap_or(f64::NAN),
            });
        }
        let spacing = T::lit(2.0) * x_max / T::from_usize(n_samples).unwrap();
        let f_max = (T::lit(2.0) * spacing).recip();
        Ok(Self {
            n_samples,
            x_max,
            spacing,
            f_max,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn f_max(&self) -> T {
        self.f_max
    }

    pub fn x_at(&self, index: usize) -> T {
        T::from_usize(index).unwrap() * self.spacing - self.x_max
    }
}

/// Density samples of one horizon on a [`GridSpec`] window, truncated and
/// renormalized so the trapezoidal integral is one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    spec: GridSpec<T>,
    horizon_days: u32,
    values: Vec<T>,
}

impl<T: Real> DensityGrid<T> {
    pub fn from_samples(spec: GridSpec<T>, horizon_days: u32, values: Vec<T>) -> Result<Self> {
        if horizon_days == 0 {
            return Err(Error::ZeroHorizon);
        }
        assert_eq!(values.len(), spec.n_samples());
        Ok(Self {
            spec,
            horizon_days,
            values,
        })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn horizon_days(&self) -> u32 {
        self.horizon_days
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn x_at(&self, index: usize) -> T {
        self.spec.x_at(index)
    }

    /// Trapezoidal integral of `f(x) p(x)` over the window.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        let n = self.values.len();
        let half = T::lit(0.5);
        let mut acc = T::zero();
        for (j, &p) in self.values.iter().enumerate() {
            let w = if j == 0 || j == n - 1 { half } else { T::one() };
            acc = acc + w * f(self.x_at(j)) * p;
        }
        acc * self.spec.spacing()
    }

    /// Linear interpolation of the density at an arbitrary point inside the
    /// window; zero outside.
    pub fn value_at(&self, x: T) -> T {
        if x < -self.spec.x_max() || x > self.spec.x_max() {
            return T::zero();
        }
        let pos = (x + self.spec.x_max()) / self.spec.spacing();
        let j = pos.floor().to_usize().unwrap_or(0);
        if j + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let frac = pos - T::from_usize(j).unwrap();
        self.values[j] * (T::one() - frac) + self.values[j + 1] * frac
    }

    /// Rescale so the trapezoidal mass is exactly one. Returns the grid and
    /// the factor that was applied.
    pub fn renormalized(mut self) -> Result<(Self, T)> {
        let mass = self.integrate(|_| T::one());
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::DegenerateDistribution);
        }
        let factor = mass.recip();
        for v in &mut self.values {
            *v = *v * factor;
        }
        Ok((self, factor))
    }

    /// Two-column CSV export `(x, p)` for plotting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,density")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.x_at(j), v)?;
        }
        Ok(())
    }
}

/// Rejection thresholds for under-resolved horizons.
///
/// The reconstruction is rejected when the density at the window edge exceeds
/// `edge_fraction` of the peak (mass has wrapped around the window) or when
/// negative ringing dips below `negative_fraction` of the peak. Smaller
/// negative excursions are clamped to zero before renormalization.
#[derive(Debug, Clone, Copy)]
pub struct AliasingGuard<T> {
    pub edge_fraction: T,
    pub negative_fraction: T,
}

impl<T: Real> Default for AliasingGuard<T> {
    fn default() -> Self {
        Self {
            edge_fraction: T::lit(1e-4),
            negative_fraction: T::lit(1e-6),
        }
    }
}

/// N-day truncated, renormalized density for `model`.
pub fn build_density<T: Real>(
    model: &ReturnModel<T>,
    horizon_days: u32,
    n_samples: usize,
) -> Result<DensityGrid<T>> {
    build_density_with(model, horizon_days, n_samples, &AliasingGuard::default())
}

pub fn build_density_with<T: Real>(
    model: &ReturnModel<T>,
    horizon_days: u32,
    n_samples: usize,
    guard: &AliasingGuard<T>,
) -> Result<DensityGrid<T>> {
    let gamma = model.gamma();
    build_from_spectrum(
        |omega| convolution_spectrum(omega, gamma, horizon_days).expect("validated"),
        model.x_max(),
        horizon_days,
        n_samples,
        guard,
    )
}

/// Invert an arbitrary even spectrum (symmetric `1/sqrt(2 pi)` convention)
/// onto the spatial window, then truncate and renormalize.
///
/// The frequency step `2 pi / (n d)` ties the reconstruction period to the
/// window width, so any probability mass outside `(-x_max, x_max)` wraps
/// around; the guard rejects horizons where that wrap is visible.
pub fn build_from_spectrum<T: Real>(
    spectrum: impl Fn(T) -> T,
    x_max: T,
    horizon_days: u32,
    n_samples: usize,
    guard: &AliasingGuard<T>,
) -> Result<DensityGrid<T>> {
    if horizon_days == 0 {
        return Err(Error::ZeroHorizon);
    }
    let spec = GridSpec::new(n_samples, x_max)?;
    let n = n_samples;
    let d_omega = T::PI() / x_max;

    let mut buf: Vec<Complex<T>> = Vec::with_capacity(n);
    for k in 0..n {
        // signed FFT frequency
        let signed = if k <= n / 2 {
            T::from_usize(k).unwrap()
        } else {
            -T::from_usize(n - k).unwrap()
        };
        let omega = signed * d_omega;
        // shift by half a period so index 0 lands on x = -x_max
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        buf.push(Complex::new(sign * spectrum(omega), T::zero()));
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);

    let scale = d_omega / (T::lit(2.0) * T::PI()).sqrt();
    let mut values: Vec<T> = buf.into_iter().map(|c| c.re * scale).collect();

    let peak = values.iter().cloned().fold(T::zero(), T::max);
    if !(peak > T::zero()) {
        return Err(Error::DegenerateDistribution);
    }
    let min = values.iter().cloned().fold(T::infinity(), T::min);
    if min < -guard.negative_fraction * peak {
        return Err(Error::HorizonTooLong {
            horizon_days,
            reason: format!(
                "negative ringing of {:.2e} of the peak",
                (min / peak).to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    let edge = values[0].max(values[n - 1]);
    if edge > guard.edge_fraction * peak {
        return Err(Error::HorizonTooLong {
            horizon_days,
            reason: format!(
                "window-edge density is {:.2e} of the peak",
                (edge / peak).to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    for v in &mut values {
        if *v < T::zero() {
            *v = T::zero();
        }
    }

    let grid = DensityGrid::from_samples(spec, horizon_days, values)?;
    let (grid, _) = grid.renormalized()?;
    Ok(grid)
}

/// Gaussian spectrum `exp(-sigma^2 w^2 / 2) / sqrt(2 pi)` with total standard
/// deviation `sigma`; drop-in replacement for the t(3) spectrum in pipeline
/// checks and Black-Scholes cross-validation.
pub fn gaussian_spectrum<T: Real>(omega: T, sigma: T) -> T {
    let half = T::lit(0.5);
    (-half * sigma * sigma * omega * omega).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

/// Trapezoidal moment `∫ x^order p(x) dx` over the window.
pub fn density_moment<T: Real>(grid: &DensityGrid<T>, order: u32) -> T {
    assert!(order <= 8, "moments above order 8 are not supported");
    grid.integrate(|x| {
        let mut acc = T::one();
        for _ in 0..order {
            acc = acc * x;
        }
        acc
    })
}
