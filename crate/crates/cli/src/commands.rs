//! The `cmt` subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cmt_core::blackvol::{build_surface, OptionQuote};
use cmt_core::curves::bond_price;
use cmt_core::engine::{option_payoffs, DistributionStats, Estimate, PricingPlan};
use serde_json::{json, Map, Value};

use crate::config::{value_name, Overrides, PayoffArg, Settings, StrikeArg, SweepArg};
use crate::error::{CliError, CliResult};
use crate::io::{self, CsvOut};
use crate::runner;

#[derive(Debug, Parser)]
#[command(name = "cmt", version, about = "Monte Carlo CMT convexity, caplets and implied vols under default risk")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward yield, CMT, convexity adjustment and an optional option price.
    Price(RunArgs),
    /// Estimates and standard errors for growing path counts.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Ascending path counts, e.g. `512,1024,2048`.
        #[arg(long, value_delimiter = ',')]
        path_counts: Vec<usize>,
    },
    /// Expected yield and ATMF caplet across values of one parameter.
    Sensitivity {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        sweep: Option<SweepArg>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Black implied volatilities of simulated caplets and floorlets.
    Surface {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',')]
        expiries: Vec<f64>,
        /// Strikes; `atm` is the simulated forward CMT of each expiry.
        #[arg(long, value_delimiter = ',')]
        strikes: Vec<StrikeArg>,
    },
    /// Bootstraps a hazard curve from bond quotes and reprices them.
    StripHazard(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Price(args) => price(&args),
        Command::Convergence { run, path_counts } => convergence(&run, path_counts),
        Command::Sensitivity { run, sweep, values } => sensitivity(&run, sweep, values),
        Command::Surface { run, expiries, strikes } => surface(&run, expiries, strikes),
        Command::StripHazard(args) => strip(&args),
    }
}

fn out_dir(args: &RunArgs) -> CliResult<&Path> {
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::file(&args.out, e))?;
    Ok(&args.out)
}

fn estimate_json(e: &Estimate) -> Value {
    json!({ "mean": e.mean, "std_error": e.std_error })
}

fn stats_json(stats: &Option<DistributionStats>) -> Value {
    match stats {
        None => Value::Null,
        Some(s) => json!({
            "min": s.min,
            "max": s.max,
            "average": s.average,
            "std_dev": s.std_dev,
            "skewness": s.skewness,
            "excess_kurtosis": s.excess_kurtosis,
        }),
    }
}

fn params_json(settings: &Settings) -> Value {
    Value::Object(settings.parameters().into_iter().map(|(k, v)| (k.to_owned(), v)).collect::<Map<_, _>>())
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// A single-fixing ATMF caplet on the settings' expiry, used by the studies.
fn caplet_settings(settings: &Settings) -> Settings {
    Settings {
        payoff: PayoffArg::Caplet,
        strike: StrikeArg::Atm,
        cap_end: None,
        ..settings.clone()
    }
}

/// Quotes are stripped at the settings' own recovery.
fn plan(settings: &Settings) -> CliResult<PricingPlan> {
    let cfg = settings.simulation()?;
    let dc = settings.discount_curve()?;
    let hz = settings.hazard_curve(&dc)?;
    Ok(PricingPlan::new(&cfg, &dc, &hz)?)
}

pub fn price(args: &RunArgs) -> CliResult<()> {
    let (settings, _) = Settings::resolve(&args.overrides)?;
    let dir = out_dir(args)?;
    let pool = runner::thread_pool(settings.threads)?;
    let plan = plan(&settings)?;
    let result = runner::price(&pool, &plan)?;

    let option = if settings.payoff_spec().kind.is_option() {
        json!({
            "payoff": value_name(settings.payoff),
            "strikes": result.strikes,
            "price": result.mean,
            "std_error": result.std_error,
        })
    } else {
        Value::Null
    };
    let doc = json!({
        "command": "price",
        "run": settings.echo("price", &[]),
        "parameters": params_json(&settings),
        "initial_yield": result.initial_yield,
        "expected_terminal_yield": estimate_json(&result.terminal_yield),
        "expected_cmt": estimate_json(&result.cmt),
        "convexity_adjustment": result.convexity_adjustment(),
        "option": option,
        "n_paths": result.n_paths,
        "absorbed_paths": result.absorbed_paths,
        "hazard_clamps": result.clamp_count,
        "payoff_stats": stats_json(&result.stats),
        "yield_vol_stats": stats_json(&result.yield_vol_stats),
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    io::write_text(&dir.join("result.json"), &text)?;

    if settings.dump_paths {
        let mut out = CsvOut::create(&dir.join("paths.csv"), &settings.echo("price", &[]), &["path", "y_T", "cmt", "payoff"])?;
        for p in &result.paths {
            out.row([p.path.to_string(), fmt(p.terminal_yield), fmt(p.cmt), fmt(p.payoff)])?;
        }
        out.finish()?;
    }
    Ok(())
}

pub fn convergence(args: &RunArgs, flag_counts: Vec<usize>) -> CliResult<()> {
    let (settings, file) = Settings::resolve(&args.overrides)?;
    let counts = if flag_counts.is_empty() { file.path_counts.unwrap_or_default() } else { flag_counts };
    if counts.is_empty() {
        return Err(CliError::validation("`path_counts` must list at least one path count"));
    }
    if counts.windows(2).any(|w| w[0] >= w[1]) || counts[0] == 0 {
        return Err(CliError::validation("`path_counts` must be positive and strictly ascending"));
    }
    let dir = out_dir(args)?;
    let pool = runner::thread_pool(settings.threads)?;
    let caplet = caplet_settings(&settings);
    let max = *counts.last().unwrap_or(&0);

    // One simulation of the largest count; smaller counts are its prefixes.
    let full = plan(&Settings { paths: max, ..caplet.clone() })?;
    let records = runner::simulate(&pool, &full, max)?;

    let list = counts.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
    let echo = settings.echo("convergence", &[("path_counts", list)]);
    let header = ["n_paths", "estimate", "std_error"];
    let mut yields = CsvOut::create(&dir.join("convergence_yield.csv"), &echo, &header)?;
    let mut caplets = CsvOut::create(&dir.join("convergence_caplet.csv"), &echo, &header)?;
    for &n in &counts {
        let prefix = plan(&Settings { paths: n, ..caplet.clone() })?;
        let cut: Vec<_> = records.iter().map(|r| r[..n].to_vec()).collect();
        let result = prefix.assemble(&cut)?;
        yields.row([n.to_string(), fmt(result.terminal_yield.mean), fmt(result.terminal_yield.std_error)])?;
        caplets.row([n.to_string(), fmt(result.mean), fmt(result.std_error)])?;
    }
    yields.finish()?;
    caplets.finish()
}

pub fn sensitivity(args: &RunArgs, sweep: Option<SweepArg>, flag_values: Vec<f64>) -> CliResult<()> {
    let (settings, file) = Settings::resolve(&args.overrides)?;
    let sweep = sweep
        .or(file.sweep)
        .ok_or_else(|| CliError::validation("`sweep` is required (sigma, alpha or recovery)"))?;
    let values = if flag_values.is_empty() { file.values.unwrap_or_default() } else { flag_values };
    if values.is_empty() {
        return Err(CliError::validation("`values` must list at least one value"));
    }
    let dir = out_dir(args)?;
    let pool = runner::thread_pool(settings.threads)?;
    let caplet = caplet_settings(&settings);

    let list = values.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(";");
    let echo = settings.echo("sensitivity", &[("sweep", value_name(sweep)), ("values", list)]);
    let mut out = CsvOut::create(
        &dir.join("sensitivity.csv"),
        &echo,
        &["param_value", "E_yield", "atmf_caplet", "std_error_yield", "std_error_caplet"],
    )?;
    for &value in &values {
        let mut point = caplet.clone();
        match sweep {
            SweepArg::Sigma => point.sigma = value,
            SweepArg::Alpha => point.alpha = value,
            // A hazard curve stripped from quotes depends on the recovery.
            SweepArg::Recovery => point.recovery = value,
        }
        let result = runner::price(&pool, &plan(&point)?)?;
        out.row([
            fmt(value),
            fmt(result.terminal_yield.mean),
            fmt(result.mean),
            fmt(result.terminal_yield.std_error),
            fmt(result.std_error),
        ])?;
    }
    out.finish()
}

pub fn surface(args: &RunArgs, flag_expiries: Vec<f64>, flag_strikes: Vec<StrikeArg>) -> CliResult<()> {
    let (settings, file) = Settings::resolve(&args.overrides)?;
    let expiries = if flag_expiries.is_empty() { file.expiries.unwrap_or_default() } else { flag_expiries };
    let strikes = if flag_strikes.is_empty() { file.strikes.unwrap_or_default() } else { flag_strikes };
    if expiries.is_empty() || strikes.is_empty() {
        return Err(CliError::validation("`expiries` and `strikes` must both be nonempty"));
    }
    if let Some(&k) = strikes.iter().find_map(|s| match s {
        StrikeArg::Fixed(k) if !(*k >= 0.0 && k.is_finite()) => Some(k),
        _ => None,
    }) {
        return Err(CliError::validation(format!("strike {k} must be a finite nonnegative rate")));
    }
    let dir = out_dir(args)?;
    let pool = runner::thread_pool(settings.threads)?;
    let caplet = caplet_settings(&settings);

    let mut quotes = Vec::new();
    for &expiry in &expiries {
        let point = Settings { expiry, ..caplet.clone() };
        let plan = plan(&point)?;
        let records = runner::simulate(&pool, &plan, point.paths)?;
        let fixing = &records[0];
        let forward = fixing.iter().map(|r| r.cmt).sum::<f64>() / fixing.len() as f64;
        let (period, df) = plan
            .periods()
            .next()
            .ok_or_else(|| CliError::Numerical(format!("no fixing at expiry {expiry}")))?;
        for strike in &strikes {
            let k = match strike {
                StrikeArg::Atm => forward,
                StrikeArg::Fixed(k) => *k,
            };
            let is_call = k >= forward;
            let sum: f64 = option_payoffs(fixing, k, is_call, df, period.accrual).sum();
            quotes.push(OptionQuote {
                expiry,
                strike: k,
                price: sum / fixing.len() as f64,
                forward,
                df,
                accrual: period.accrual,
                is_call,
            });
        }
    }

    let e_list = expiries.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(";");
    let k_list = strikes.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
    let echo = settings.echo("surface", &[("expiries", e_list), ("strikes", k_list)]);
    let mut out = CsvOut::create(
        &dir.join("surface.csv"),
        &echo,
        &["expiry", "strike", "forward", "option", "price", "implied_vol", "converged"],
    )?;
    for (quote, point) in quotes.iter().zip(build_surface(&quotes)) {
        out.row([
            fmt(point.expiry),
            fmt(point.strike),
            fmt(quote.forward),
            (if quote.is_call { "caplet" } else { "floorlet" }).to_owned(),
            fmt(point.source_price),
            point.implied_vol.map(fmt).unwrap_or_default(),
            point.converged.to_string(),
        ])?;
    }
    out.finish()
}

pub fn strip(args: &RunArgs) -> CliResult<()> {
    let (settings, _) = Settings::resolve(&args.overrides)?;
    let quotes_path = settings
        .bond_quotes
        .clone()
        .ok_or_else(|| CliError::validation("strip-hazard needs bond quotes (--bond-quotes or `bond_quotes`)"))?;
    let dir = out_dir(args)?;
    let dc = settings.discount_curve()?;
    let quotes = io::read_quotes(&quotes_path)?;
    let curve = cmt_core::curves::strip_hazard(&quotes, &dc, settings.recovery)?;

    let echo = format!(
        "cmt strip-hazard discount_curve={} bond_quotes={} recovery={}",
        settings.discount_curve.display(),
        quotes_path.display(),
        settings.recovery
    );
    io::write_hazard_curve(&dir.join("hazard.csv"), &echo, &curve)?;
    let mut out = CsvOut::create(&dir.join("repricing.csv"), &echo, &["maturity", "quoted_dirty", "model", "residual"])?;
    for q in &quotes {
        let model = bond_price(q, &dc, &curve, settings.recovery)?;
        let quoted = q.dirty_price();
        out.row([fmt(q.maturity), fmt(quoted), fmt(model), fmt(model - quoted)])?;
    }
    out.finish()
}
