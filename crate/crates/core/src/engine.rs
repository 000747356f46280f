//! Path simulation of the forward yield, payoffs and cross-path statistics.
//!
//! One normal draw per time step drives the whole forward zero-coupon family
//! and the yield. Each step, with every quantity taken at the previous level:
//!
//! 1. bond volatility `σ_B` from the forward zero-coupon vols and the hazard rate;
//! 2. yield volatility `σ_y = f/(y f′) σ_B`;
//! 3. the next hazard level from the leapfrog recursion;
//! 4. log-Euler step of `dy/y = -½(y f″/f′)σ_y² dt + σ_y dW`;
//! 5. log-Euler step of every forward zero-coupon bond with the same draw.
//!
//! Path `p` draws from its own ChaCha stream `(seed, p)`, so a path never
//! depends on how paths are scheduled.
//!
//! `σ_y y` is close to a constant normal volatility, so the yield can reach
//! zero, where `σ_y` is singular. A path whose yield falls below
//! [`YIELD_FLOOR`] is stopped there; the stopped forward bond is still a
//! martingale.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bondmath::{cmt_from_yield, starting_yield, BondSpec, YieldFunction, DEFAULT_QUAD_STEP, YIELD_EPSILON};
use crate::curves::{DiscountCurve, HazardCurve};
use crate::error::{finite, Error, Result};
use crate::hazard::{step_hazard_with, survival_weights, FwdZcSnapshot, HazardState, InitMode};
use crate::hullwhite::{lognormal_step, HullWhiteParams};

/// Yields below this absorb the path.
pub const YIELD_FLOOR: f64 = 1e-8;

/// Spacing of successive per-fixing seeds.
const FIXING_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    TerminalYield,
    TerminalCmt,
    Caplet,
    Floorlet,
    Cap,
    Floor,
}

impl PayoffKind {
    pub fn is_option(self) -> bool {
        !matches!(self, PayoffKind::TerminalYield | PayoffKind::TerminalCmt)
    }

    fn is_call(self) -> bool {
        matches!(self, PayoffKind::Caplet | PayoffKind::Cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strike {
    Fixed(f64),
    /// The mean simulated CMT of the fixing: at the money forward.
    Atmf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub strike: Strike,
    /// Payments per year; the accrual of one period is its reciprocal.
    pub pay_frequency: u32,
    /// Last payment date of a cap or floor. Ignored by single-period payoffs.
    pub final_payment: Option<f64>,
}

impl Default for PayoffSpec {
    fn default() -> Self {
        Self { kind: PayoffKind::TerminalYield, strike: Strike::Atmf, pay_frequency: 4, final_payment: None }
    }
}

/// One option period: CMT fixed at `fixing`, paid at `payment`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Period {
    pub fixing: f64,
    pub payment: f64,
    pub accrual: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, strike: Strike) -> Self {
        Self { kind, strike, ..Self::default() }
    }

    pub fn accrual(&self) -> f64 {
        1.0 / f64::from(self.pay_frequency)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pay_frequency == 0 {
            return Err(Error::InvalidParameter { name: "pay_frequency", value: 0.0 });
        }
        if let Strike::Fixed(k) = self.strike {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(Error::InvalidParameter { name: "strike", value: k });
            }
        }
        Ok(())
    }

    /// Fixing schedule starting at `expiry`. Caps and floors roll every
    /// accrual period while the payment stays on or before `final_payment`.
    pub fn schedule(&self, expiry: f64) -> Result<Vec<Period>> {
        self.validate()?;
        let accrual = self.accrual();
        let first = Period { fixing: expiry, payment: expiry + accrual, accrual };
        if !matches!(self.kind, PayoffKind::Cap | PayoffKind::Floor) {
            return Ok(alloc::vec![first]);
        }
        let end = self.final_payment.ok_or(Error::InvalidParameter { name: "final_payment", value: f64::NAN })?;
        let mut periods = Vec::new();
        for k in 0.. {
            let fixing = expiry + k as f64 * accrual;
            let payment = fixing + accrual;
            if payment > end + 1e-9 {
                break;
            }
            periods.push(Period { fixing, payment, accrual });
        }
        if periods.is_empty() {
            return Err(Error::InvalidInterval { start: first.payment, end });
        }
        Ok(periods)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub expiry: f64,
    pub spec: BondSpec,
    pub hw: HullWhiteParams,
    pub n_paths: usize,
    pub seed: u64,
    /// Time step in years.
    pub step: f64,
    pub quad_step: f64,
    pub init_mode: InitMode,
    pub payoff: PayoffSpec,
}

impl SimulationConfig {
    /// Daily steps, monthly quadrature, 1024 paths, seed 0, terminal yield payoff.
    pub fn new(expiry: f64, spec: BondSpec, hw: HullWhiteParams) -> Self {
        Self {
            expiry,
            spec,
            hw,
            n_paths: 1024,
            seed: 0,
            step: 1.0 / 365.0,
            quad_step: DEFAULT_QUAD_STEP,
            init_mode: InitMode::default(),
            payoff: PayoffSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.payoff.validate()?;
        if !(self.expiry > 0.0) || !self.expiry.is_finite() {
            return Err(Error::InvalidParameter { name: "expiry", value: self.expiry });
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter { name: "n_paths", value: 0.0 });
        }
        if !(self.step > 0.0) || self.step > self.expiry * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter { name: "step", value: self.step });
        }
        if !(self.quad_step > 0.0) || !self.quad_step.is_finite() {
            return Err(Error::InvalidParameter { name: "quad_step", value: self.quad_step });
        }
        Ok(())
    }
}

/// Terminal state of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub index: u64,
    pub terminal_yield: f64,
    pub cmt: f64,
    /// `|σ_y|` evaluated on the terminal state; `None` for an absorbed path.
    pub yield_vol: Option<f64>,
    /// Steps where the hazard recursion left `[0, LAMBDA_CAP]`.
    pub clamp_count: u32,
}

/// Random stream of path `index`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of the `k`-th fixing of a multi-period payoff; fixing 0 keeps `seed`.
pub fn fixing_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(FIXING_SEED_STRIDE))
}

/// `σ_B = (S P σ_P(T+θ) + c Σ S P σ_P(T_i) + R ∫ S P σ_P λ du) / f` with
/// `S = e^{-(u-T)λ}`.
pub fn bond_vol(snap: &FwdZcSnapshot, lambda: f64, spec: &BondSpec, y_proxy: f64, f_value: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter { name: "lambda", value: lambda });
    }
    let coupon = spec.per_period_coupon(y_proxy)?;
    let mut weights = Vec::new();
    survival_weights(snap, lambda, &mut weights);
    bond_vol_with(&weights, snap, lambda, spec.recovery, coupon, f_value)
}

fn bond_vol_with(
    weights: &[f64],
    snap: &FwdZcSnapshot,
    lambda: f64,
    recovery: f64,
    coupon: f64,
    f_value: f64,
) -> Result<f64> {
    if !(f_value > 0.0) {
        return Err(Error::DegenerateBond { value: f_value });
    }
    let vols = snap.vols();
    let top = vols.len() - 1;
    let coupons: f64 = snap.coupon_nodes().iter().map(|&i| weights[i] * vols[i]).sum();
    let mut total = weights[top] * vols[top] + coupon * coupons;
    if recovery != 0.0 {
        let integral: f64 = snap.quad_weights().iter().enumerate().map(|(k, &q)| q * weights[k] * vols[k]).sum();
        total += recovery * lambda * integral;
    }
    Ok(total / f_value)
}

/// `σ_y = f/(y f′) σ_B`. Negative because `f′ < 0`; the sign is kept.
pub fn yield_vol(y: f64, f_value: f64, f_prime: f64, bond_vol: f64) -> Result<f64> {
    if y.abs() < 1e-12 || !(f_prime.abs() >= 1e-300) {
        return Err(Error::DegenerateYield { y });
    }
    Ok(f_value / (y * f_prime) * bond_vol)
}

/// Log-Euler step of `dy/y = -½(y f″/f′)σ_y² dt + σ_y dW`.
pub fn step_yield(y: f64, yield_vol: f64, f_prime: f64, f_second: f64, dt: f64, z: f64) -> f64 {
    let drift = -0.5 * (y * f_second / f_prime) * yield_vol * yield_vol;
    lognormal_step(y, drift, yield_vol, dt, z)
}

/// Immutable per-expiry set-up shared by all paths of one fixing.
#[derive(Debug, Clone)]
pub struct PathEngine {
    spec: BondSpec,
    hw: HullWhiteParams,
    seed: u64,
    expiry: f64,
    n_steps: usize,
    dt: f64,
    init_mode: InitMode,
    initial_yield: f64,
    initial_lambda: f64,
    start: FwdZcSnapshot,
}

impl PathEngine {
    pub fn new(cfg: &SimulationConfig, dc: &DiscountCurve, hz: &HazardCurve) -> Result<Self> {
        Self::for_fixing(cfg, dc, hz, cfg.expiry, cfg.seed)
    }

    /// Engine for the same model re-expired at `expiry` with its own seed.
    pub fn for_fixing(cfg: &SimulationConfig, dc: &DiscountCurve, hz: &HazardCurve, expiry: f64, seed: u64) -> Result<Self> {
        cfg.validate()?;
        finite("expiry", expiry)?;
        if !(expiry > 0.0) || cfg.step > expiry * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter { name: "expiry", value: expiry });
        }
        let spec = cfg.spec;
        let initial_yield = starting_yield(dc, hz, &spec, expiry, cfg.quad_step)?;
        let initial_lambda = hz.initial_forward_hazard(expiry, spec.theta)?;
        let quad = if spec.recovery != 0.0 { Some(cfg.quad_step) } else { None };
        let start = FwdZcSnapshot::from_curve(dc, &cfg.hw, &spec, expiry, quad)?;
        let n_steps = ((expiry / cfg.step) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            spec,
            hw: cfg.hw,
            seed,
            expiry,
            n_steps,
            dt: expiry / n_steps as f64,
            init_mode: cfg.init_mode,
            initial_yield,
            initial_lambda,
            start,
        })
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `y(0, T)`.
    pub fn initial_yield(&self) -> f64 {
        self.initial_yield
    }

    /// `λ(0, T)`.
    pub fn initial_lambda(&self) -> f64 {
        self.initial_lambda
    }

    pub fn simulate_path(&self, index: u64) -> Result<PathRecord> {
        self.run(index).map_err(|e| e.on_path(index))
    }

    fn run(&self, index: u64) -> Result<PathRecord> {
        let spec = &self.spec;
        let mut rng = path_rng(self.seed, index);
        let mut snap = self.start.clone();
        let mut hazard = HazardState::new(self.initial_lambda, self.init_mode);
        let mut weights = Vec::with_capacity(snap.offsets().len());
        let mut y = self.initial_yield;
        let mut clamp_count = 0u32;
        for _ in 0..self.n_steps {
            let (sigma_y, f1, f2, coupon) = self.yield_coefficients(&snap, hazard.lambda_curr, y, &mut weights)?;
            let next = step_hazard_with(&weights, &hazard, &snap, spec.recovery, coupon, self.dt)?;
            clamp_count += u32::from(next.clamped);
            let z: f64 = StandardNormal.sample(&mut rng);
            y = step_yield(y, sigma_y, f1, f2, self.dt, z);
            if !(y > -1.0 + YIELD_EPSILON) || !y.is_finite() {
                return Err(Error::DomainError { x: y });
            }
            if y.abs() < YIELD_FLOOR {
                return Ok(PathRecord {
                    index,
                    terminal_yield: y,
                    cmt: cmt_from_yield(spec.kappa, y)?,
                    yield_vol: None,
                    clamp_count,
                });
            }
            snap.diffuse(&self.hw, self.dt, z)?;
            hazard = next.state;
        }
        let (sigma_y, ..) = self.yield_coefficients(&snap, hazard.lambda_curr, y, &mut weights)?;
        Ok(PathRecord {
            index,
            terminal_yield: y,
            cmt: cmt_from_yield(spec.kappa, y)?,
            yield_vol: Some(sigma_y.abs()),
            clamp_count,
        })
    }

    /// `(σ_y, f′, f″, c)` at the current state; leaves the survival weights in `weights`.
    fn yield_coefficients(
        &self,
        snap: &FwdZcSnapshot,
        lambda: f64,
        y: f64,
        weights: &mut Vec<f64>,
    ) -> Result<(f64, f64, f64, f64)> {
        let yf = YieldFunction::new(&self.spec, y)?;
        let coupon = yf.per_period_coupon();
        let (f, f1, f2) = yf.evaluate(y)?;
        survival_weights(snap, lambda, weights);
        let sigma_b = bond_vol_with(weights, snap, lambda, self.spec.recovery, coupon, f)?;
        Ok((yield_vol(y, f, f1, sigma_b)?, f1, f2, coupon))
    }
}

/// Discounted payoff `df·accrual·max(±(CMT − K), 0)` of one fixing, per path.
pub fn option_payoffs<'a>(
    records: &'a [PathRecord],
    strike: f64,
    is_call: bool,
    df: f64,
    accrual: f64,
) -> impl Iterator<Item = f64> + 'a {
    let sign = if is_call { 1.0 } else { -1.0 };
    records.iter().map(move |r| df * accrual * (sign * (r.cmt - strike)).max(0.0))
}

/// Runs path `index` of `cfg` from scratch.
pub fn simulate_path(cfg: &SimulationConfig, dc: &DiscountCurve, hz: &HazardCurve, index: u64) -> Result<PathRecord> {
    PathEngine::new(cfg, dc, hz)?.simulate_path(index)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    pub min: f64,
    pub max: f64,
    pub average: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Population moments (divisor `n`). A constant sample reports zero
/// dispersion, skewness and kurtosis.
pub fn distribution_stats(samples: &[f64]) -> Result<DistributionStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { n });
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(DistributionStats { min, max, average: min, std_dev: 0.0, skewness: 0.0, excess_kurtosis: 0.0 });
    }
    let nf = n as f64;
    let average = (samples.iter().sum::<f64>() / nf).clamp(min, max);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - average;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    Ok(DistributionStats {
        min,
        max,
        average,
        std_dev: m2.sqrt(),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// Mean and standard error `std_dev/√n` of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        match samples.len() {
            0 => Err(Error::InsufficientSamples { n: 0 }),
            1 => Ok(Self { mean: samples[0], std_error: 0.0 }),
            n => {
                let stats = distribution_stats(samples)?;
                Ok(Self { mean: stats.average, std_error: stats.std_dev / (n as f64).sqrt() })
            }
        }
    }
}

/// Per-path values of a pricing run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub path: u64,
    pub terminal_yield: f64,
    pub cmt: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    /// Mean payoff.
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Payoff distribution; `None` for a single path.
    pub stats: Option<DistributionStats>,
    /// `y(0, T)` of the first fixing.
    pub initial_yield: f64,
    /// `E[y_T]` of the first fixing.
    pub terminal_yield: Estimate,
    /// `E[CMT]` of the first fixing.
    pub cmt: Estimate,
    /// Strike of each fixing (options only).
    pub strikes: Vec<f64>,
    /// Distribution of the terminal `|σ_y|` over the surviving paths of the
    /// first fixing.
    pub yield_vol_stats: Option<DistributionStats>,
    /// Paths of the first fixing stopped at the yield floor.
    pub absorbed_paths: usize,
    pub clamp_count: u64,
    pub paths: Vec<PathOutcome>,
}

impl PricingResult {
    /// `E[y_T] - y(0, T)`.
    pub fn convexity_adjustment(&self) -> f64 {
        self.terminal_yield.mean - self.initial_yield
    }
}

/// The engines of a pricing run, one per fixing. Paths may be simulated in
/// any order or in parallel; [`PricingPlan::assemble`] only needs each
/// fixing's records in path order.
#[derive(Debug, Clone)]
pub struct PricingPlan {
    kind: PayoffKind,
    strike: Strike,
    n_paths: usize,
    fixings: Vec<(Period, PathEngine, f64)>,
}

impl PricingPlan {
    pub fn new(cfg: &SimulationConfig, dc: &DiscountCurve, hz: &HazardCurve) -> Result<Self> {
        cfg.validate()?;
        let fixings = cfg
            .payoff
            .schedule(cfg.expiry)?
            .into_iter()
            .enumerate()
            .map(|(k, period)| {
                let engine = PathEngine::for_fixing(cfg, dc, hz, period.fixing, fixing_seed(cfg.seed, k))?;
                let df = if cfg.payoff.kind.is_option() { dc.discount_factor(period.payment)? } else { 1.0 };
                Ok((period, engine, df))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind: cfg.payoff.kind, strike: cfg.payoff.strike, n_paths: cfg.n_paths, fixings })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    /// Periods with the discount factor to their payment date (1 for non-options).
    pub fn periods(&self) -> impl Iterator<Item = (Period, f64)> + '_ {
        self.fixings.iter().map(|(period, _, df)| (*period, *df))
    }

    pub fn engines(&self) -> impl Iterator<Item = &PathEngine> {
        self.fixings.iter().map(|(_, engine, _)| engine)
    }

    /// Sequential path loop.
    pub fn simulate(&self) -> Result<Vec<Vec<PathRecord>>> {
        self.engines()
            .map(|engine| (0..self.n_paths as u64).map(|p| engine.simulate_path(p)).collect())
            .collect()
    }

    /// Reduces per-fixing records (each in path order) to a result.
    pub fn assemble(&self, records: &[Vec<PathRecord>]) -> Result<PricingResult> {
        if records.len() != self.fixings.len() || records.iter().any(|r| r.len() != self.n_paths) {
            return Err(Error::InvalidParameter { name: "records", value: records.len() as f64 });
        }
        let first = &records[0];
        let yields: Vec<f64> = first.iter().map(|r| r.terminal_yield).collect();
        let cmts: Vec<f64> = first.iter().map(|r| r.cmt).collect();
        let mut payoffs: Vec<f64> = match self.kind {
            PayoffKind::TerminalYield => yields.clone(),
            PayoffKind::TerminalCmt => cmts.clone(),
            _ => alloc::vec![0.0; self.n_paths],
        };
        let mut strikes = Vec::new();
        if self.kind.is_option() {
            for ((period, _, df), fixing) in self.fixings.iter().zip(records) {
                let strike = match self.strike {
                    Strike::Fixed(k) => k,
                    Strike::Atmf => fixing.iter().map(|r| r.cmt).sum::<f64>() / self.n_paths as f64,
                };
                let leg = option_payoffs(fixing, strike, self.kind.is_call(), *df, period.accrual);
                for (payoff, value) in payoffs.iter_mut().zip(leg) {
                    *payoff += value;
                }
                strikes.push(strike);
            }
        }
        let value = Estimate::from_samples(&payoffs)?;
        let vols: Vec<f64> = first.iter().filter_map(|r| r.yield_vol).collect();
        let many = self.n_paths >= 2;
        Ok(PricingResult {
            mean: value.mean,
            std_error: value.std_error,
            n_paths: self.n_paths,
            stats: if many { Some(distribution_stats(&payoffs)?) } else { None },
            initial_yield: self.fixings[0].1.initial_yield(),
            terminal_yield: Estimate::from_samples(&yields)?,
            cmt: Estimate::from_samples(&cmts)?,
            strikes,
            yield_vol_stats: if vols.len() >= 2 { Some(distribution_stats(&vols)?) } else { None },
            absorbed_paths: self.n_paths - vols.len(),
            clamp_count: records.iter().flatten().map(|r| u64::from(r.clamp_count)).sum(),
            paths: first
                .iter()
                .zip(&payoffs)
                .map(|(r, &payoff)| PathOutcome { path: r.index, terminal_yield: r.terminal_yield, cmt: r.cmt, payoff })
                .collect(),
        })
    }
}

/// Prices `cfg` with a sequential path loop.
pub fn price(cfg: &SimulationConfig, dc: &DiscountCurve, hz: &HazardCurve) -> Result<PricingResult> {
    let plan = PricingPlan::new(cfg, dc, hz)?;
    plan.assemble(&plan.simulate()?)
}
