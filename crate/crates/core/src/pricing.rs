//! European call/put valuation against a sampled density, the
//! Black-Scholes-Merton reference pricer, put-call parity and
//! implied-volatility inversion.

use crate::spectral::DensityGrid;
use crate::{Error, Real, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptionContract<T> {
    strike: T,
    days_to_maturity: u32,
    kind: OptionKind,
}

impl<T: Real> OptionContract<T> {
    pub fn new(kind: OptionKind, strike: T, days_to_maturity: u32) -> Result<Self> {
        if strike <= T::zero() {
            return Err(Error::NonPositive {
                name: "strike",
                value: strike.to_f64().unwrap_or(f64::NAN),
            });
        }
        if days_to_maturity == 0 {
            return Err(Error::ZeroHorizon);
        }
        Ok(Self {
            strike,
            days_to_maturity,
            kind,
        })
    }

    pub fn call(strike: T, days_to_maturity: u32) -> Result<Self> {
        Self::new(OptionKind::Call, strike, days_to_maturity)
    }

    pub fn put(strike: T, days_to_maturity: u32) -> Result<Self> {
        Self::new(OptionKind::Put, strike, days_to_maturity)
    }

    pub fn strike(&self) -> T {
        self.strike
    }

    pub fn days_to_maturity(&self) -> u32 {
        self.days_to_maturity
    }

    pub fn kind(&self) -> OptionKind {
        self.kind
    }
}

/// Per-day drift convention for the log-return distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode<T> {
    /// `mu = r_daily - gamma^2 / 2`, the quadratic risk-neutral choice.
    RiskNeutralQuadratic,
    /// Fixed per-day drift.
    Explicit(T),
}

/// Spot, rate and calendar context shared by a batch of contracts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricingConfig<T> {
    spot: T,
    annual_rate: T,
    trading_days_per_year: u32,
    drift_mode: DriftMode<T>,
}

impl<T: Real> PricingConfig<T> {
    pub fn new(spot: T, annual_rate: T) -> Result<Self> {
        if spot <= T::zero() {
            return Err(Error::NonPositive {
                name: "spot",
                value: spot.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            spot,
            annual_rate,
            trading_days_per_year: 252,
            drift_mode: DriftMode::RiskNeutralQuadratic,
        })
    }

    pub fn with_trading_days(mut self, days: u32) -> Result<Self> {
        if !(200..=260).contains(&days) {
            return Err(Error::NonPositive {
                name: "trading_days_per_year (must lie in [200, 260])",
                value: days as f64,
            });
        }
        self.trading_days_per_year = days;
        Ok(self)
    }

    pub fn with_drift(mut self, drift: DriftMode<T>) -> Self {
        self.drift_mode = drift;
        self
    }

    pub fn spot(&self) -> T {
        self.spot
    }

    pub fn annual_rate(&self) -> T {
        self.annual_rate
    }

    pub fn trading_days_per_year(&self) -> u32 {
        self.trading_days_per_year
    }

    pub fn drift_mode(&self) -> DriftMode<T> {
        self.drift_mode
    }

    pub fn daily_rate(&self) -> T {
        self.annual_rate / T::from_u32(self.trading_days_per_year).unwrap()
    }

    /// Per-day drift for a model of width `gamma`.
    pub fn drift_per_day(&self, gamma: T) -> T {
        match self.drift_mode {
            DriftMode::RiskNeutralQuadratic => {
                self.daily_rate() - gamma * gamma / T::lit(2.0)
            }
            DriftMode::Explicit(mu) => mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceResult<T> {
    pub price: T,
    pub quadrature_nodes: usize,
    pub intrinsic: T,
}

fn check_contract<T: Real>(
    grid: &DensityGrid<T>,
    contract: &OptionContract<T>,
) -> Result<()> {
    if grid.horizon_days() != contract.days_to_maturity() {
        return Err(Error::HorizonMismatch {
            contract: contract.days_to_maturity(),
            grid: grid.horizon_days(),
        });
    }
    Ok(())
}

/// Call value by trapezoidal quadrature of
/// `exp(-r tau) ∫_{x_l}^{x_max} [S exp(mu tau + x) - K] p(x) dx`
/// with the lower limit `x_l = log(K/S) - mu tau` snapped onto the grid by a
/// partial trapezoid (the payoff vanishes exactly at `x_l`).
pub fn price_call<T: Real>(
    grid: &DensityGrid<T>,
    contract: &OptionContract<T>,
    config: &PricingConfig<T>,
    gamma: T,
) -> Result<PriceResult<T>> {
    check_contract(grid, contract)?;
    let n_days = T::from_u32(contract.days_to_maturity()).unwrap();
    let spot = config.spot();
    let strike = contract.strike();
    let mu_tau = config.drift_per_day(gamma) * n_days;
    let discount = (-config.daily_rate() * n_days).exp();
    let intrinsic = (spot - strike).max(T::zero());

    let x_max = grid.spec().x_max();
    let x_l = (strike / spot).ln() - mu_tau;
    if x_l >= x_max {
        return Ok(PriceResult {
            price: T::zero(),
            quadrature_nodes: 0,
            intrinsic,
        });
    }
    let payoff = |x: T| spot * (mu_tau + x).exp() - strike;
    let (integral, nodes) = integrate_above(grid, x_l, payoff);
    Ok(PriceResult {
        price: (discount * integral).max(T::zero()),
        quadrature_nodes: nodes,
        intrinsic,
    })
}

/// Put value, integrating `[K - S exp(mu tau + x)] p(x)` from the truncated
/// lower support `-x_max` up to `x_l`.
pub fn price_put<T: Real>(
    grid: &DensityGrid<T>,
    contract: &OptionContract<T>,
    config: &PricingConfig<T>,
    gamma: T,
) -> Result<PriceResult<T>> {
    check_contract(grid, contract)?;
    let n_days = T::from_u32(contract.days_to_maturity()).unwrap();
    let spot = config.spot();
    let strike = contract.strike();
    let mu_tau = config.drift_per_day(gamma) * n_days;
    let discount = (-config.daily_rate() * n_days).exp();
    let intrinsic = (strike - spot).max(T::zero());

    let x_max = grid.spec().x_max();
    let x_l = (strike / spot).ln() - mu_tau;
    if x_l <= -x_max {
        return Ok(PriceResult {
            price: T::zero(),
            quadrature_nodes: 0,
            intrinsic,
        });
    }
    let payoff = |x: T| strike - spot * (mu_tau + x).exp();
    let (integral, nodes) = integrate_below(grid, x_l, payoff);
    Ok(PriceResult {
        price: (discount * integral).max(T::zero()),
        quadrature_nodes: nodes,
        intrinsic,
    })
}

/// Trapezoidal integral of `f(x) p(x)` over `[lower, x_max]`; `f(lower)` must
/// vanish for the partial first cell to be exact.
fn integrate_above<T: Real, F: Fn(T) -> T>(
    grid: &DensityGrid<T>,
    lower: T,
    f: F,
) -> (T, usize) {
    let n = grid.values().len();
    let d = grid.spec().spacing();
    let half = T::lit(0.5);
    let j0 = if lower <= grid.x_at(0) {
        0
    } else {
        let pos = (lower - grid.x_at(0)) / d;
        (pos.ceil().to_usize().unwrap_or(0)).min(n - 1)
    };
    let mut acc = T::zero();
    for j in j0..n {
        let w = if j == j0 || j == n - 1 { half } else { T::one() };
        acc = acc + w * f(grid.x_at(j)) * grid.values()[j];
    }
    let mut integral = acc * d;
    if j0 > 0 {
        let delta = grid.x_at(j0) - lower;
        integral = integral + half * delta * f(grid.x_at(j0)) * grid.values()[j0];
    }
    (integral, n - j0)
}

/// Mirror of [`integrate_above`] for `[-x_max, upper]`.
fn integrate_below<T: Real, F: Fn(T) -> T>(
    grid: &DensityGrid<T>,
    upper: T,
    f: F,
) -> (T, usize) {
    let n = grid.values().len();
    let d = grid.spec().spacing();
    let half = T::lit(0.5);
    let j1 = if upper >= grid.x_at(n - 1) {
        n - 1
    } else {
        let pos = (upper - grid.x_at(0)) / d;
        pos.floor().to_usize().unwrap_or(0)
    };
    let mut acc = T::zero();
    for j in 0..=j1 {
        let w = if j == 0 || j == j1 { half } else { T::one() };
        acc = acc + w * f(grid.x_at(j)) * grid.values()[j];
    }
    let mut integral = acc * d;
    if j1 < n - 1 {
        let delta = upper - grid.x_at(j1);
        integral = integral + half * delta * f(grid.x_at(j1)) * grid.values()[j1];
    }
    (integral, j1 + 1)
}

/// `(C - P) - (S - K exp(-r tau))`; vanishes exactly under arbitrage-free
/// pricing and up to the moment-generating-function residual here.
pub fn parity_residual<T: Real>(
    grid: &DensityGrid<T>,
    strike: T,
    config: &PricingConfig<T>,
    gamma: T,
) -> Result<T> {
    let days = grid.horizon_days();
    let call = price_call(grid, &OptionContract::call(strike, days)?, config, gamma)?;
    let put = price_put(grid, &OptionContract::put(strike, days)?, config, gamma)?;
    let n_days = T::from_u32(days).unwrap();
    let discount = (-config.daily_rate() * n_days).exp();
    Ok((call.price - put.price) - (config.spot() - strike * discount))
}

/// Standard normal distribution function (Hart's rational approximation,
/// double-precision accurate).
pub fn norm_cdf<T: Real>(x: T) -> T {
    let z = x.abs();
    let c = T::lit;
    if z > c(37.0) {
        return if x > T::zero() { T::one() } else { T::zero() };
    }
    let e = (-z * z / c(2.0)).exp();
    let cum = if z < c(7.071_067_811_865_475) {
        let mut num = c(3.526_249_659_989_11e-2);
        for k in [
            0.700_383_064_443_688,
            6.373_962_203_531_65,
            33.912_866_078_383,
            112.079_291_497_871,
            221.213_596_169_931,
            220.206_867_912_376,
        ] {
            num = num * z + c(k);
        }
        let mut den = c(8.838_834_764_831_84e-2);
        for k in [
            1.755_667_163_182_64,
            16.064_177_579_207,
            86.780_732_202_946_1,
            296.564_248_779_674,
            637.333_633_378_831,
            793.826_512_519_948,
            440.413_735_824_752,
        ] {
            den = den * z + c(k);
        }
        e * num / den
    } else {
        let b = z + c(0.65);
        let b = z + c(4.0) / b;
        let b = z + c(3.0) / b;
        let b = z + c(2.0) / b;
        let b = z + T::one() / b;
        e / (b * c(2.506_628_274_631_000_5))
    };
    if x > T::zero() {
        T::one() - cum
    } else {
        cum
    }
}

/// Black-Scholes-Merton call value; the zero-volatility limit is the
/// discounted intrinsic bound.
pub fn bsm_call<T: Real>(
    spot: T,
    strike: T,
    tau_years: T,
    sigma_annual: T,
    rate_annual: T,
) -> Result<T> {
    for (name, v) in [("spot", spot), ("strike", strike), ("tau_years", tau_years)] {
        if v <= T::zero() {
            return Err(Error::NonPositive {
                name,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    if sigma_annual < T::zero() {
        return Err(Error::NonPositive {
            name: "sigma_annual",
            value: sigma_annual.to_f64().unwrap_or(f64::NAN),
        });
    }
    let discounted_strike = strike * (-rate_annual * tau_years).exp();
    if sigma_annual == T::zero() {
        return Ok((spot - discounted_strike).max(T::zero()));
    }
    let vol = sigma_annual * tau_years.sqrt();
    let d1 = ((spot / strike).ln() + rate_annual * tau_years) / vol + vol / T::lit(2.0);
    let d2 = d1 - vol;
    Ok(spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2))
}

/// Outcome of the implied-volatility inversion. Quotes below the zero-vol
/// bound have no solution; that is a value, not a fault.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpliedVol<T> {
    Vol(T),
    NoSolution,
}

const IV_SIGMA_LO: f64 = 1e-6;
const IV_SIGMA_HI: f64 = 5.0;
const IV_PRICE_TOL: f64 = 1e-8;

/// Safeguarded bisection of `bsm_call(sigma) = market_price` on
/// `sigma in (1e-6, 5)`.
pub fn implied_vol_bsm<T: Real>(
    market_price: T,
    spot: T,
    strike: T,
    tau_years: T,
    rate_annual: T,
) -> Result<ImpliedVol<T>> {
    if market_price <= T::zero() {
        return Err(Error::NonPositive {
            name: "market_price",
            value: market_price.to_f64().unwrap_or(f64::NAN),
        });
    }
    if market_price > spot {
        return Err(Error::PriceAboveSpot {
            price: market_price.to_f64().unwrap_or(f64::NAN),
            spot: spot.to_f64().unwrap_or(f64::NAN),
        });
    }
    let zero_vol = bsm_call(spot, strike, tau_years, T::zero(), rate_annual)?;
    if market_price < zero_vol {
        return Ok(ImpliedVol::NoSolution);
    }
    let mut lo = T::lit(IV_SIGMA_LO);
    let mut hi = T::lit(IV_SIGMA_HI);
    let value = |sigma: T| bsm_call(spot, strike, tau_years, sigma, rate_annual);
    if value(lo)? >= market_price {
        return Ok(ImpliedVol::Vol(lo));
    }
    if value(hi)? < market_price {
        return Err(Error::VolBracketExhausted(
            hi.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let tol = T::lit(IV_PRICE_TOL);
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        let diff = value(mid)? - market_price;
        if diff.abs() < tol || (hi - lo) < T::lit(1e-14) {
            return Ok(ImpliedVol::Vol(mid));
        }
        if diff < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ImpliedVol::Vol((lo + hi) / T::lit(2.0)))
}
