//! One-parameter fit of the return-width `gamma` to quoted call prices, plus
//! panel evaluation of a fitted width across expiries.

use crate::market::{OptionChain, QuoteRecord};
use crate::pricing::{price_call, DriftMode, OptionContract, OptionKind, PricingConfig};
use crate::returns::ReturnModel;
use crate::spectral::build_density;
use crate::{Error, Result};
use chrono::NaiveDate;
use serde::Serialize;

pub const GAMMA_LO: f64 = 0.001;
pub const GAMMA_HI: f64 = 0.1;
const COARSE_POINTS: usize = 20;
const GOLDEN_TOL: f64 = 1e-5;

/// Mean squared log-price error at one width, with exclusion bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Objective {
    pub value: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

/// `(1/N) sum [log C_model - log C_market]^2` over one expiry's calls.
///
/// Strikes the model prices at zero carry no log error; they are excluded and
/// counted. The window scales with the candidate width (`x_max = m_mult *
/// gamma`), so every width is judged on its own natural support.
pub fn objective(
    gamma: f64,
    quotes: &[QuoteRecord],
    horizon_days: u32,
    config: &PricingConfig<f64>,
    m_mult: f64,
    n_samples: usize,
) -> Result<Objective> {
    let first = quotes.first().ok_or(Error::TooFewStrikes { needed: 1, found: 0 })?;
    if quotes
        .iter()
        .any(|q| q.kind != OptionKind::Call || q.expiry_date != first.expiry_date)
    {
        return Err(Error::MixedChain);
    }
    let model = ReturnModel::new(gamma, m_mult)?;
    let grid = build_density(&model, horizon_days, n_samples)?;
    let mut sum = 0.0;
    let mut n_used = 0usize;
    let mut n_excluded = 0usize;
    for q in quotes {
        let contract = OptionContract::call(q.strike, horizon_days)?;
        let model_price = price_call(&grid, &contract, config, gamma)?.price;
        if model_price <= 0.0 {
            n_excluded += 1;
            continue;
        }
        let diff = model_price.ln() - q.mid().ln();
        sum += diff * diff;
        n_used += 1;
    }
    if n_used == 0 {
        return Err(Error::EmptyObjective);
    }
    Ok(Objective {
        value: sum / n_used as f64,
        n_used,
        n_excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaFit {
    pub gamma_hat: f64,
    pub objective: Objective,
    pub at_boundary: bool,
}

/// Coarse log-spaced sweep of `[GAMMA_LO, GAMMA_HI]` followed by a
/// golden-section refinement of the best bracket.
pub fn fit_gamma(
    quotes: &[QuoteRecord],
    horizon_days: u32,
    config: &PricingConfig<f64>,
    m_mult: f64,
    n_samples: usize,
) -> Result<GammaFit> {
    if quotes.len() < 3 {
        return Err(Error::TooFewStrikes {
            needed: 3,
            found: quotes.len(),
        });
    }
    let eval = |gamma: f64| -> Result<f64> {
        Ok(objective(gamma, quotes, horizon_days, config, m_mult, n_samples)?.value)
    };
    let ratio = (GAMMA_HI / GAMMA_LO).ln() / (COARSE_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..COARSE_POINTS)
        .map(|i| GAMMA_LO * (ratio * i as f64).exp())
        .collect();
    let mut best = None;
    for (i, &g) in grid.iter().enumerate() {
        match eval(g) {
            Ok(v) => {
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((i, v));
                }
            }
            Err(Error::EmptyObjective) => continue,
            Err(e) => return Err(e),
        }
    }
    let (i_best, _) = best.ok_or(Error::EmptyObjective)?;
    let at_boundary = i_best == 0 || i_best == COARSE_POINTS - 1;
    let mut a = grid[i_best.saturating_sub(1)];
    let mut b = grid[(i_best + 1).min(COARSE_POINTS - 1)];

    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d)?;
        }
    }
    let gamma_hat = (a + b) / 2.0;
    let objective = objective(gamma_hat, quotes, horizon_days, config, m_mult, n_samples)?;
    Ok(GammaFit {
        gamma_hat,
        objective,
        at_boundary,
    })
}

/// A completed calibration of one chain, shaped for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub symbol: String,
    pub quote_date: NaiveDate,
    pub expiry_used: NaiveDate,
    pub horizon_days: u32,
    pub gamma_hat: f64,
    pub objective_value: f64,
    pub n_strikes: usize,
    pub n_excluded: usize,
    pub at_boundary: bool,
    pub drift: DriftMode<f64>,
}

/// Fit `gamma` to the calls of one chain.
pub fn calibrate_chain(
    chain: &OptionChain,
    config: &PricingConfig<f64>,
    holidays: &[NaiveDate],
    m_mult: f64,
    n_samples: usize,
) -> Result<CalibrationResult> {
    let horizon_days = chain.days_to_expiry(holidays)?;
    let fit = fit_gamma(&chain.calls, horizon_days, config, m_mult, n_samples)?;
    Ok(CalibrationResult {
        symbol: chain.symbol.clone(),
        quote_date: chain.quote_date,
        expiry_used: chain.expiry_date,
        horizon_days,
        gamma_hat: fit.gamma_hat,
        objective_value: fit.objective.value,
        n_strikes: fit.objective.n_used,
        n_excluded: fit.objective.n_excluded,
        at_boundary: fit.at_boundary,
        drift: config.drift_mode(),
    })
}

/// One expiry's out-of-sample error under a fixed width; `mse` is `None` when
/// the horizon cannot be resolved on the window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelRow {
    pub expiry_date: NaiveDate,
    pub horizon_days: u32,
    pub n_strikes: usize,
    pub mse: Option<f64>,
}

/// Evaluate a fitted width across each chain in the panel.
pub fn evaluate_panel(
    chains: &[OptionChain],
    gamma: f64,
    config: &PricingConfig<f64>,
    holidays: &[NaiveDate],
    m_mult: f64,
    n_samples: usize,
) -> Result<Vec<PanelRow>> {
    let mut rows = Vec::with_capacity(chains.len());
    for chain in chains {
        let horizon_days = chain.days_to_expiry(holidays)?;
        let row = match objective(gamma, &chain.calls, horizon_days, config, m_mult, n_samples) {
            Ok(o) => PanelRow {
                expiry_date: chain.expiry_date,
                horizon_days,
                n_strikes: o.n_used,
                mse: Some(o.value),
            },
            Err(Error::HorizonTooLong { .. }) => PanelRow {
                expiry_date: chain.expiry_date,
                horizon_days,
                n_strikes: chain.calls.len(),
                mse: None,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(rows)
}
