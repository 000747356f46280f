//! Run configuration: a flat JSON object, overridden key by key by flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use cmt_core::bondmath::{BondSpec, CouponMode, DEFAULT_QUAD_STEP};
use cmt_core::curves::{strip_hazard, DiscountCurve, HazardCurve};
use cmt_core::engine::{PayoffKind, PayoffSpec, SimulationConfig, Strike};
use cmt_core::hazard::InitMode;
use cmt_core::hullwhite::HullWhiteParams;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io;

/// Days per year used to turn `step_days` into a year fraction.
pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum InitModeArg {
    Stabilized,
    PaperExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PayoffArg {
    TerminalYield,
    TerminalCmt,
    Caplet,
    Floorlet,
    Cap,
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepArg {
    Sigma,
    Alpha,
    Recovery,
}

/// A strike given as a rate or as `atm`/`atmf`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RawStrike")]
pub enum StrikeArg {
    Atm,
    Fixed(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawStrike {
    Number(f64),
    Text(String),
}

impl TryFrom<RawStrike> for StrikeArg {
    type Error = String;

    fn try_from(raw: RawStrike) -> Result<Self, String> {
        match raw {
            RawStrike::Number(k) => Ok(StrikeArg::Fixed(k)),
            RawStrike::Text(s) => s.parse(),
        }
    }
}

impl FromStr for StrikeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "atm" | "atmf" => Ok(StrikeArg::Atm),
            other => other.parse().map(StrikeArg::Fixed).map_err(|_| format!("invalid strike `{s}`")),
        }
    }
}

impl std::fmt::Display for StrikeArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrikeArg::Atm => f.write_str("atmf"),
            StrikeArg::Fixed(k) => write!(f, "{k}"),
        }
    }
}

/// Keys accepted in the JSON config file. Every key can be overridden by the
/// flag of the same name.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub discount_curve: Option<PathBuf>,
    pub hazard_curve: Option<PathBuf>,
    pub bond_quotes: Option<PathBuf>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub recovery: Option<f64>,
    pub paths: Option<usize>,
    pub step_days: Option<f64>,
    pub expiry: Option<f64>,
    pub theta: Option<f64>,
    pub kappa: Option<u32>,
    pub seed: Option<u64>,
    pub lambda_init_mode: Option<InitModeArg>,
    pub quad_step: Option<f64>,
    pub coupon: Option<f64>,
    pub payoff: Option<PayoffArg>,
    pub strike: Option<StrikeArg>,
    pub pay_frequency: Option<u32>,
    pub cap_end: Option<f64>,
    pub threads: Option<usize>,
    pub dump_paths: Option<bool>,
    pub path_counts: Option<Vec<usize>>,
    pub sweep: Option<SweepArg>,
    pub values: Option<Vec<f64>>,
    pub expiries: Option<Vec<f64>>,
    pub strikes: Option<Vec<StrikeArg>>,
}

impl FileConfig {
    /// Reads a config file; relative curve paths are resolved against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        let mut cfg: FileConfig = serde_json::from_str(&text).map_err(|e| CliError::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for file in [&mut cfg.discount_curve, &mut cfg.hazard_curve, &mut cfg.bond_quotes].into_iter().flatten() {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        Ok(cfg)
    }
}

/// Model and run flags shared by the simulation commands.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Discount curve CSV (`t,df`).
    #[arg(long)]
    pub discount_curve: Option<PathBuf>,
    /// Hazard curve CSV (`t,lambda`).
    #[arg(long)]
    pub hazard_curve: Option<PathBuf>,
    /// Bond quotes CSV, stripped into a hazard curve when no hazard curve is given.
    #[arg(long)]
    pub bond_quotes: Option<PathBuf>,
    /// Hull–White short-rate volatility.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Hull–White mean reversion.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub recovery: Option<f64>,
    /// Monte Carlo paths.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub step_days: Option<f64>,
    /// Option expiry / forward start, in years.
    #[arg(long)]
    pub expiry: Option<f64>,
    /// Bond tenor in years.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Coupons per year.
    #[arg(long)]
    pub kappa: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub lambda_init_mode: Option<InitModeArg>,
    /// Step of the recovery-integral quadrature, in years.
    #[arg(long)]
    pub quad_step: Option<f64>,
    /// Fixed annual coupon; without it the coupon is reset to par (CMT).
    #[arg(long)]
    pub coupon: Option<f64>,
    #[arg(long, value_enum)]
    pub payoff: Option<PayoffArg>,
    /// Strike rate, or `atmf`.
    #[arg(long)]
    pub strike: Option<StrikeArg>,
    /// Option payments per year.
    #[arg(long)]
    pub pay_frequency: Option<u32>,
    /// Last payment date of a cap or floor, in years.
    #[arg(long)]
    pub cap_end: Option<f64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write per-path values.
    #[arg(long)]
    pub dump_paths: Option<bool>,
}

/// Fully resolved parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub discount_curve: PathBuf,
    pub hazard_curve: Option<PathBuf>,
    pub bond_quotes: Option<PathBuf>,
    pub sigma: f64,
    pub alpha: f64,
    pub recovery: f64,
    pub paths: usize,
    pub step_days: f64,
    pub expiry: f64,
    pub theta: f64,
    pub kappa: u32,
    pub seed: u64,
    pub init_mode: InitModeArg,
    pub quad_step: f64,
    pub coupon: Option<f64>,
    pub payoff: PayoffArg,
    pub strike: StrikeArg,
    pub pay_frequency: u32,
    pub cap_end: Option<f64>,
    pub threads: Option<usize>,
    pub dump_paths: bool,
}

impl Settings {
    /// Flags first, then the config file, then the defaults.
    pub fn resolve(overrides: &Overrides) -> CliResult<(Self, FileConfig)> {
        let file = match &overrides.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let o = overrides.clone();
        let f = file.clone();
        let settings = Settings {
            discount_curve: o
                .discount_curve
                .or(f.discount_curve)
                .ok_or_else(|| CliError::validation("a discount curve is required (--discount-curve or `discount_curve`)"))?,
            hazard_curve: o.hazard_curve.or(f.hazard_curve),
            bond_quotes: o.bond_quotes.or(f.bond_quotes),
            sigma: o.sigma.or(f.sigma).unwrap_or(0.01),
            alpha: o.alpha.or(f.alpha).unwrap_or(0.1),
            recovery: o.recovery.or(f.recovery).unwrap_or(0.2),
            paths: o.paths.or(f.paths).unwrap_or(1024),
            step_days: o.step_days.or(f.step_days).unwrap_or(1.0),
            expiry: o.expiry.or(f.expiry).unwrap_or(1.0),
            theta: o.theta.or(f.theta).unwrap_or(10.0),
            kappa: o.kappa.or(f.kappa).unwrap_or(2),
            seed: o.seed.or(f.seed).unwrap_or(0),
            init_mode: o.lambda_init_mode.or(f.lambda_init_mode).unwrap_or(InitModeArg::Stabilized),
            quad_step: o.quad_step.or(f.quad_step).unwrap_or(DEFAULT_QUAD_STEP),
            coupon: o.coupon.or(f.coupon),
            payoff: o.payoff.or(f.payoff).unwrap_or(PayoffArg::TerminalYield),
            strike: o.strike.or(f.strike).unwrap_or(StrikeArg::Atm),
            pay_frequency: o.pay_frequency.or(f.pay_frequency).unwrap_or(4),
            cap_end: o.cap_end.or(f.cap_end),
            threads: o.threads.or(f.threads),
            dump_paths: o.dump_paths.or(f.dump_paths).unwrap_or(false),
        };
        settings.check()?;
        Ok((settings, file))
    }

    fn check(&self) -> CliResult<()> {
        let finite = [
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("recovery", self.recovery),
            ("step_days", self.step_days),
            ("expiry", self.expiry),
            ("theta", self.theta),
            ("quad_step", self.quad_step),
        ];
        if let Some((name, value)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(CliError::validation(format!("`{name}` must be finite, got {value}")));
        }
        if !(self.step_days > 0.0) {
            return Err(CliError::validation("`step_days` must be positive"));
        }
        if self.threads == Some(0) {
            return Err(CliError::validation("`threads` must be at least 1"));
        }
        Ok(())
    }

    pub fn spec(&self) -> CliResult<BondSpec> {
        let mode = match self.coupon {
            Some(c) => CouponMode::FixedCoupon(c),
            None => CouponMode::CmtPar,
        };
        Ok(BondSpec::new(self.theta, self.kappa, self.recovery, mode)?)
    }

    pub fn payoff_spec(&self) -> PayoffSpec {
        PayoffSpec {
            kind: payoff_kind(self.payoff),
            strike: match self.strike {
                StrikeArg::Atm => Strike::Atmf,
                StrikeArg::Fixed(k) => Strike::Fixed(k),
            },
            pay_frequency: self.pay_frequency,
            final_payment: self.cap_end,
        }
    }

    pub fn simulation(&self) -> CliResult<SimulationConfig> {
        let mut cfg = SimulationConfig::new(self.expiry, self.spec()?, HullWhiteParams::new(self.alpha, self.sigma)?);
        cfg.n_paths = self.paths;
        cfg.seed = self.seed;
        cfg.step = self.step_days / DAYS_PER_YEAR;
        cfg.quad_step = self.quad_step;
        cfg.init_mode = match self.init_mode {
            InitModeArg::Stabilized => InitMode::Stabilized,
            InitModeArg::PaperExact => InitMode::PaperExact,
        };
        cfg.payoff = self.payoff_spec();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn discount_curve(&self) -> CliResult<DiscountCurve> {
        io::read_discount_curve(&self.discount_curve)
    }

    /// The hazard curve file, else quotes stripped at `recovery`, else zero hazard.
    pub fn hazard_curve(&self, dc: &DiscountCurve) -> CliResult<HazardCurve> {
        if let Some(path) = &self.hazard_curve {
            return io::read_hazard_curve(path);
        }
        if let Some(path) = &self.bond_quotes {
            let quotes = io::read_quotes(path)?;
            return strip_hazard(&quotes, dc, self.recovery).map_err(|e| CliError::from(e).context("stripping bond quotes"));
        }
        Ok(HazardCurve::flat(0.0, dc.last_time())?)
    }

    /// Parameters in a fixed order. Thread count and output location are left
    /// out so that outputs do not depend on them.
    pub fn parameters(&self) -> Vec<(&'static str, Value)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(Value::Null, |p| json!(p.display().to_string()));
        vec![
            ("discount_curve", json!(self.discount_curve.display().to_string())),
            ("hazard_curve", path(&self.hazard_curve)),
            ("bond_quotes", path(&self.bond_quotes)),
            ("sigma", json!(self.sigma)),
            ("alpha", json!(self.alpha)),
            ("recovery", json!(self.recovery)),
            ("paths", json!(self.paths)),
            ("step_days", json!(self.step_days)),
            ("expiry", json!(self.expiry)),
            ("theta", json!(self.theta)),
            ("kappa", json!(self.kappa)),
            ("seed", json!(self.seed)),
            ("lambda_init_mode", json!(value_name(self.init_mode))),
            ("quad_step", json!(self.quad_step)),
            ("coupon", self.coupon.map_or(json!("par"), |c| json!(c))),
            ("payoff", json!(value_name(self.payoff))),
            ("strike", json!(self.strike.to_string())),
            ("pay_frequency", json!(self.pay_frequency)),
            ("cap_end", self.cap_end.map_or(Value::Null, |c| json!(c))),
        ]
    }

    /// One-line parameter echo for output headers.
    pub fn echo(&self, command: &str, extra: &[(&str, String)]) -> String {
        let mut line = format!("cmt {command}");
        for (key, value) in self.parameters() {
            let text = match value {
                Value::String(s) => s,
                Value::Null => "none".to_owned(),
                other => other.to_string(),
            };
            line.push_str(&format!(" {key}={text}"));
        }
        for (key, value) in extra {
            line.push_str(&format!(" {key}={value}"));
        }
        line
    }
}

pub fn payoff_kind(arg: PayoffArg) -> PayoffKind {
    match arg {
        PayoffArg::TerminalYield => PayoffKind::TerminalYield,
        PayoffArg::TerminalCmt => PayoffKind::TerminalCmt,
        PayoffArg::Caplet => PayoffKind::Caplet,
        PayoffArg::Floorlet => PayoffKind::Floorlet,
        PayoffArg::Cap => PayoffKind::Cap,
        PayoffArg::Floor => PayoffKind::Floor,
    }
}

pub fn value_name<T: ValueEnum>(value: T) -> String {
    value.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default()
}
