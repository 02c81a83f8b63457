//! Closed forms for the unit-period Student-t(3) law: density, distribution
//! function, spectrum, convolution spectrum and tail-mass bounds.

use crate::spectral::DensityGrid;
use crate::{Error, Real, Result};
use serde::Serialize;

/// Parameters of the unit-period truncated Student-t(3) law.
///
/// `gamma` is the width parameter of the daily density
/// `2 gamma^3 / (pi (gamma^2 + x^2)^2)` and equals its standard deviation.
/// All horizon distributions derived from the model share the truncation
/// window `(-x_max, x_max)` with `x_max = m_mult * gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnModel<T> {
    gamma: T,
    x_max: T,
    m_mult: T,
}

impl<T: Real> ReturnModel<T> {
    /// Model with truncation at `m_mult` standard deviations.
    pub fn new(gamma: T, m_mult: T) -> Result<Self> {
        ensure_positive("gamma", gamma)?;
        ensure_positive("m_mult", m_mult)?;
        Ok(Self {
            gamma,
            x_max: m_mult * gamma,
            m_mult,
        })
    }

    /// Model with an explicit truncation half-width.
    pub fn with_x_max(gamma: T, x_max: T) -> Result<Self> {
        ensure_positive("gamma", gamma)?;
        ensure_positive("x_max", x_max)?;
        Ok(Self {
            gamma,
            x_max,
            m_mult: x_max / gamma,
        })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn m_mult(&self) -> T {
        self.m_mult
    }

    pub fn density(&self, x: T) -> T {
        student_density(x, self.gamma).expect("gamma validated at construction")
    }

    /// Probability of the non-truncated law above `x`.
    pub fn upper_tail(&self, x: T) -> T {
        student_upper_tail(x, self.gamma)
    }

    /// Distribution function of the non-truncated law.
    pub fn cdf(&self, x: T) -> T {
        T::one() - self.upper_tail(x)
    }
}

fn ensure_positive<T: Real>(name: &'static str, value: T) -> Result<()> {
    if value > T::zero() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name,
            value: value.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Student-t(3) density `2 gamma^3 / (pi (gamma^2 + x^2)^2)`.
pub fn student_density<T: Real>(x: T, gamma: T) -> Result<T> {
    ensure_positive("gamma", gamma)?;
    let two = T::lit(2.0);
    let q = gamma * gamma + x * x;
    Ok(two * gamma * gamma * gamma / (T::PI() * q * q))
}

/// Upper-tail probability of the Student-t(3) law, `P(X > x)`.
///
/// The antiderivative of the density is
/// `1/2 + (atan(x/gamma) + gamma x / (gamma^2 + x^2)) / pi`.
pub fn student_upper_tail<T: Real>(x: T, gamma: T) -> T {
    let half = T::lit(0.5);
    half - ((x / gamma).atan() + gamma * x / (gamma * gamma + x * x)) / T::PI()
}

/// Fourier spectrum `(1/sqrt(2 pi)) (1 + gamma |w|) exp(-gamma |w|)` of the
/// unit-period density, in the symmetric transform convention.
pub fn student_spectrum<T: Real>(omega: T, gamma: T) -> Result<T> {
    convolution_spectrum(omega, gamma, 1)
}

/// Spectrum of the `n_days`-fold convolution,
/// `(1/sqrt(2 pi)) (1 + gamma |w|)^N exp(-N gamma |w|)`.
///
/// Evaluated in log space so that large horizons do not overflow.
pub fn convolution_spectrum<T: Real>(omega: T, gamma: T, n_days: u32) -> Result<T> {
    ensure_positive("gamma", gamma)?;
    if n_days == 0 {
        return Err(Error::ZeroHorizon);
    }
    let gw = gamma * omega.abs();
    let n = T::from_u32(n_days).expect("horizon fits in scalar");
    let log_term = gw.ln_1p() - gw;
    Ok((n * log_term).exp() / (T::lit(2.0) * T::PI()).sqrt())
}

/// Upper bound `4 / (3 pi M^3)` on the two-sided tail mass removed by
/// truncating at `M` standard deviations.
pub fn tail_mass_bound<T: Real>(m_mult: T) -> Result<T> {
    if m_mult < T::one() {
        return Err(Error::MultipleTooSmall(
            m_mult.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let four = T::lit(4.0);
    let three = T::lit(3.0);
    Ok(four / (three * T::PI() * m_mult * m_mult * m_mult))
}

/// Clamp stray negative samples and rescale a windowed density so that its
/// trapezoidal integral is one.
///
/// Returns the renormalized grid together with the rescale factor applied.
pub fn truncate_and_renormalize<T: Real>(grid: DensityGrid<T>) -> Result<(DensityGrid<T>, T)> {
    grid.renormalized()
}
