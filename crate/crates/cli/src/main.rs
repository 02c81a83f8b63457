//! Command-line front end for the ht-options pricing engine.

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ht_options::calibration::{calibrate_chain, evaluate_panel};
use ht_options::market::{group_chains, parse_chain_csv, OptionChain};
use ht_options::mc::mc_price;
use ht_options::no_arbitrage::mgf_residual_from_grid;
use ht_options::pricing::{
    parity_residual, price_call, price_put, DriftMode, OptionContract, PricingConfig,
};
use ht_options::returns::ReturnModel;
use ht_options::spectral::build_density;
use ht_options::truncation::{plateau_inclination, plateau_scan};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_HORIZON: u8 = 2;
const EXIT_NO_DATA: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug, Serialize)]
#[command(name = "ht-options", version, about = "European option valuation under truncated t(3) log returns")]
struct Cli {
    /// Write the run manifest to this file instead of stderr
    #[arg(long, global = true)]
    #[serde(skip)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Price a single contract and report its consistency diagnostics
    Price(PriceArgs),
    /// Scan call prices over truncation window widths
    Plateau(PlateauArgs),
    /// Fit the return width to a quoted option chain
    Calibrate(CalibrateArgs),
    /// Cross-check quadrature prices against Monte Carlo and parity
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Call,
    Put,
}

fn parse_drift(s: &str) -> Result<DriftArg, String> {
    if s == "rn" {
        return Ok(DriftArg::RiskNeutral);
    }
    if let Some(mu) = s.strip_prefix("explicit:") {
        return mu
            .parse::<f64>()
            .map(DriftArg::Explicit)
            .map_err(|e| format!("bad drift value: {e}"));
    }
    Err("expected 'rn' or 'explicit:<mu per day>'".into())
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum DriftArg {
    RiskNeutral,
    Explicit(f64),
}

impl From<DriftArg> for DriftMode<f64> {
    fn from(d: DriftArg) -> Self {
        match d {
            DriftArg::RiskNeutral => DriftMode::RiskNeutralQuadratic,
            DriftArg::Explicit(mu) => DriftMode::Explicit(mu),
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct PriceArgs {
    #[arg(long)]
    spot: f64,
    #[arg(long)]
    strike: f64,
    /// Maturity in trading days
    #[arg(long)]
    days: u32,
    #[arg(long, value_enum, default_value = "call")]
    kind: KindArg,
    #[arg(long)]
    gamma: f64,
    /// Truncation half-width; defaults to 100 * gamma
    #[arg(long)]
    xmax: Option<f64>,
    /// Annual risk-free rate
    #[arg(long, default_value_t = 0.02)]
    rate: f64,
    /// Spatial grid samples (power of two)
    #[arg(long, default_value_t = 1 << 18)]
    samples: usize,
    /// 'rn' for the risk-neutral drift, or 'explicit:<mu per day>'
    #[arg(long, default_value = "rn", value_parser = parse_drift)]
    drift: DriftArg,
}

#[derive(Args, Debug, Serialize)]
struct PlateauArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    strike_ratio: f64,
    /// Comma-separated horizons in trading days
    #[arg(long, default_value = "1,8,64", value_delimiter = ',')]
    horizons: Vec<u32>,
    /// Either 'log:<lo>:<hi>:<count>' or a comma-separated list of widths
    #[arg(long, default_value = "log:0.1:20:40")]
    xmax_grid: String,
    #[arg(long, default_value_t = 1.0)]
    spot: f64,
    #[arg(long, default_value_t = 0.02)]
    rate: f64,
    #[arg(long, default_value_t = 1 << 14)]
    samples: usize,
}

#[derive(Args, Debug, Serialize)]
struct CalibrateArgs {
    /// Chain CSV file
    #[arg(long)]
    chains: PathBuf,
    #[arg(long)]
    symbol: String,
    #[arg(long)]
    quote_date: NaiveDate,
    #[arg(long)]
    spot: f64,
    #[arg(long, default_value_t = 0.02)]
    rate: f64,
    /// Truncation multiple: x_max = m * gamma during the search
    #[arg(long, default_value_t = 100.0)]
    m_mult: f64,
    #[arg(long, default_value_t = 1 << 14)]
    samples: usize,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value = "1,8,32", value_delimiter = ',')]
    horizons: Vec<u32>,
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    spot: f64,
    #[arg(long, default_value_t = 0.02)]
    rate: f64,
    #[arg(long, default_value_t = 1 << 16)]
    samples: usize,
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    timestamp: String,
    command: &'a Command,
    inputs: Vec<InputDigest>,
}

/// Round to six significant digits and print without an exponent where
/// reasonable.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..9).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ht_options::Error> for Failure {
    fn from(e: ht_options::Error) -> Self {
        let code = match e {
            ht_options::Error::HorizonTooLong { .. } => EXIT_HORIZON,
            ht_options::Error::TooFewStrikes { .. }
            | ht_options::Error::EmptyObjective
            | ht_options::Error::MissingColumn(_)
            | ht_options::Error::Csv(_) => EXIT_NO_DATA,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap distinguishes help/version from true usage errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::from(EXIT_OK);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(&cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("HT_OPTIONS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("HT_OPTIONS_THREADS must be a number, got {raw:?}"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn write_manifest(cli: &Cli, inputs: Vec<InputDigest>) -> Result<(), Failure> {
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339(),
        command: &cli.command,
        inputs,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    match &cli.manifest {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => eprintln!("{json}"),
    }
    Ok(())
}

fn digest_file(path: &PathBuf) -> Result<InputDigest, Failure> {
    let bytes = std::fs::read(path)?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Price(args) => {
            write_manifest(cli, Vec::new())?;
            run_price(args)
        }
        Command::Plateau(args) => {
            write_manifest(cli, Vec::new())?;
            run_plateau(args)
        }
        Command::Calibrate(args) => {
            write_manifest(cli, vec![digest_file(&args.chains)?])?;
            run_calibrate(args)
        }
        Command::Validate(args) => {
            write_manifest(cli, Vec::new())?;
            run_validate(args)
        }
    }
}

fn run_price(args: &PriceArgs) -> Result<(), Failure> {
    let model = match args.xmax {
        Some(x) => ReturnModel::with_x_max(args.gamma, x)?,
        None => ReturnModel::new(args.gamma, 100.0)?,
    };
    let config = PricingConfig::new(args.spot, args.rate)?.with_drift(args.drift.into());
    let grid = build_density(&model, args.days, args.samples)?;
    let (main, counterpart) = match args.kind {
        KindArg::Call => {
            let c = OptionContract::call(args.strike, args.days)?;
            let p = OptionContract::put(args.strike, args.days)?;
            (
                price_call(&grid, &c, &config, args.gamma)?,
                price_put(&grid, &p, &config, args.gamma)?.price,
            )
        }
        KindArg::Put => {
            let p = OptionContract::put(args.strike, args.days)?;
            let c = OptionContract::call(args.strike, args.days)?;
            (
                price_put(&grid, &p, &config, args.gamma)?,
                price_call(&grid, &c, &config, args.gamma)?.price,
            )
        }
    };
    let parity = parity_residual(&grid, args.strike, &config, args.gamma)?;
    let defect = mgf_residual_from_grid(&grid, args.gamma).relative_defect;
    println!("price {}", sig6(main.price));
    println!("intrinsic {}", sig6(main.intrinsic));
    println!("counterpart {}", sig6(counterpart));
    println!("parity_residual {}", sig6(parity));
    println!("mgf_defect {}", sig6(defect));
    Ok(())
}

fn parse_xmax_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let usage = || Failure {
        code: EXIT_USAGE,
        message: format!("bad --xmax-grid {spec:?}: expected 'log:<lo>:<hi>:<count>' or a comma list"),
    };
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(usage());
        };
        let lo: f64 = lo.parse().map_err(|_| usage())?;
        let hi: f64 = hi.parse().map_err(|_| usage())?;
        let count: usize = count.parse().map_err(|_| usage())?;
        if !(lo > 0.0 && hi > lo && count >= 2) {
            return Err(usage());
        }
        let step = (hi / lo).ln() / (count - 1) as f64;
        return Ok((0..count).map(|i| lo * (step * i as f64).exp()).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage()))
        .collect()
}

fn run_plateau(args: &PlateauArgs) -> Result<(), Failure> {
    let x_max_values = parse_xmax_grid(&args.xmax_grid)?;
    let config = PricingConfig::new(args.spot, args.rate)?;
    let scan = plateau_scan(
        args.gamma,
        args.strike_ratio,
        &args.horizons,
        &x_max_values,
        &config,
        args.samples,
    )?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    scan.write_csv(&mut out)?;
    for row in plateau_inclination(&scan) {
        let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), sig6);
        writeln!(
            out,
            "# horizon {}: {} of {} widths available, delta_abs {}, delta_rel {}",
            row.horizon_days,
            row.n_available,
            x_max_values.len(),
            fmt(row.delta_absolute),
            fmt(row.delta_relative),
        )?;
    }
    Ok(())
}

fn run_calibrate(args: &CalibrateArgs) -> Result<(), Failure> {
    let file = std::fs::File::open(&args.chains)?;
    let parsed = parse_chain_csv(file)?;
    for r in &parsed.rejects {
        eprintln!("rejected line {}: {}", r.line, r.reason);
    }
    let chains: Vec<OptionChain> = group_chains(parsed.records)?
        .into_iter()
        .filter(|c| c.symbol == args.symbol && c.quote_date == args.quote_date)
        .collect();
    if chains.is_empty() {
        return Err(Failure {
            code: EXIT_NO_DATA,
            message: format!(
                "no usable quotes for {} on {} in {}",
                args.symbol,
                args.quote_date,
                args.chains.display()
            ),
        });
    }
    let config = PricingConfig::new(args.spot, args.rate)?;
    // fit on the nearest expiry, judge the fit on all of them
    let nearest = chains
        .iter()
        .min_by_key(|c| c.expiry_date)
        .expect("nonempty");
    let result = calibrate_chain(nearest, &config, &[], args.m_mult, args.samples)?;
    let panel = evaluate_panel(&chains, result.gamma_hat, &config, &[], args.m_mult, args.samples)?;
    println!("{}", serde_json::to_string_pretty(&result).expect("serializes"));
    println!("expiry_date,horizon_days,n_strikes,mse");
    for row in panel {
        let mse = row.mse.map_or_else(|| "unavailable".to_string(), sig6);
        println!(
            "{},{},{},{}",
            row.expiry_date, row.horizon_days, row.n_strikes, mse
        );
    }
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let model = ReturnModel::new(args.gamma, 100.0)?;
    let config = PricingConfig::new(args.spot, args.rate)?;
    println!("horizon_days,quadrature,mc_price,mc_std_error,parity_residual,mgf_defect");
    for &days in &args.horizons {
        let grid = build_density(&model, days, args.samples)?;
        let contract = OptionContract::call(args.spot, days)?;
        let quad = price_call(&grid, &contract, &config, args.gamma)?.price;
        let mc = mc_price(&model, &contract, &config, args.paths, args.seed)?;
        let parity = parity_residual(&grid, args.spot, &config, args.gamma)?;
        let defect = mgf_residual_from_grid(&grid, args.gamma).relative_defect;
        println!(
            "{days},{},{},{},{},{}",
            sig6(quad),
            sig6(mc.price),
            sig6(mc.std_error),
            sig6(parity),
            sig6(defect)
        );
    }
    Ok(())
}
