//! Initial term structures: discount factors `DF(0, t)` and survival
//! probabilities `S(0, t)` built from a piecewise-constant hazard rate.
//!
//! Discount factors interpolate log-linearly (constant forward rate between
//! pillars). Hazard curves hold one intensity per segment `[t_{k-1}, t_k)`,
//! so survival integrals are exact. Both curves refuse to extrapolate past
//! their last pillar unless [`Extrapolation::Flat`] is set.

use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::error::{finite, Error, Result};

/// Pillar-time slack absorbing rounding in `T + θ` style sums.
const PILLAR_SLACK: f64 = 1e-10;

/// ACT/365-Fixed year fraction between two dates.
pub fn year_fraction(start: NaiveDate, end: NaiveDate) -> Result<f64> {
    let days = end.signed_duration_since(start).num_days();
    if days < 0 {
        return Err(Error::InvalidDateOrder);
    }
    Ok(days as f64 / 365.0)
}

/// Behaviour past the last pillar of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extrapolation {
    /// Queries past the last pillar fail with `ExtrapolationNotAllowed`.
    #[default]
    Forbidden,
    /// Flat forward rate (discount curves) or flat intensity (hazard curves).
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    times: Vec<f64>,
    dfs: Vec<f64>,
    log_dfs: Vec<f64>,
    extrapolation: Extrapolation,
}

impl DiscountCurve {
    /// Builds a curve from `(t, df)` pillars. The first pillar must be `(0, 1)`.
    pub fn new(pillars: &[(f64, f64)]) -> Result<Self> {
        if pillars.len() < 2 {
            return Err(Error::InvalidCurve("discount curve needs at least two pillars"));
        }
        if pillars[0] != (0.0, 1.0) {
            return Err(Error::InvalidCurve("discount curve must start at (0, 1)"));
        }
        for w in pillars.windows(2) {
            if !(w[1].0 > w[0].0) || !w[1].0.is_finite() {
                return Err(Error::InvalidCurve("discount pillar times must strictly increase"));
            }
        }
        if pillars.iter().any(|&(_, df)| !(df > 0.0) || !df.is_finite()) {
            return Err(Error::InvalidCurve("discount factors must be positive"));
        }
        Ok(Self {
            times: pillars.iter().map(|p| p.0).collect(),
            dfs: pillars.iter().map(|p| p.1).collect(),
            log_dfs: pillars.iter().map(|p| p.1.ln()).collect(),
            extrapolation: Extrapolation::Forbidden,
        })
    }

    /// Flat continuously-compounded curve `exp(-rate * t)` out to `horizon`.
    pub fn flat(rate: f64, horizon: f64) -> Result<Self> {
        finite("rate", rate)?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter { name: "horizon", value: horizon });
        }
        Self::new(&[(0.0, 1.0), (horizon, (-rate * horizon).exp())])
    }

    pub fn with_extrapolation(mut self, extrapolation: Extrapolation) -> Self {
        self.extrapolation = extrapolation;
        self
    }

    pub fn pillars(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.dfs.iter().copied())
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("curve has pillars")
    }

    /// `DF(0, t)`, bit-exact at pillars.
    pub fn discount_factor(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter { name: "t", value: t });
        }
        let n = self.times.len();
        let last = self.times[n - 1];
        if t > last {
            if t - last <= PILLAR_SLACK {
                return Ok(self.dfs[n - 1]);
            }
            if self.extrapolation == Extrapolation::Forbidden {
                return Err(Error::ExtrapolationNotAllowed { t, last });
            }
            let slope = (self.log_dfs[n - 1] - self.log_dfs[n - 2]) / (last - self.times[n - 2]);
            return Ok((self.log_dfs[n - 1] + slope * (t - last)).exp());
        }
        // First pillar strictly greater than t.
        let hi = self.times.partition_point(|&x| x <= t);
        let lo = hi - 1;
        if self.times[lo] == t || hi == n {
            return Ok(self.dfs[lo]);
        }
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        Ok((self.log_dfs[lo] + w * (self.log_dfs[hi] - self.log_dfs[lo])).exp())
    }

    /// `DF(0, start, end) = DF(0, end) / DF(0, start)`.
    pub fn forward_df(&self, start: f64, end: f64) -> Result<f64> {
        if end < start {
            return Err(Error::InvalidInterval { start, end });
        }
        if end == start {
            return Ok(1.0);
        }
        Ok(self.discount_factor(end)? / self.discount_factor(start)?)
    }

    /// Continuously-compounded forward rate on the pillar segment containing `t`.
    fn segment_forward(&self, t: f64) -> f64 {
        let n = self.times.len();
        let hi = self.times.partition_point(|&x| x <= t).clamp(1, n - 1);
        let lo = hi - 1;
        -(self.log_dfs[hi] - self.log_dfs[lo]) / (self.times[hi] - self.times[lo])
    }
}

/// Piecewise-constant default intensity: `lambdas[k]` applies on
/// `[times[k-1], times[k])` with `times[-1] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardCurve {
    times: Vec<f64>,
    lambdas: Vec<f64>,
    /// `cumulative[k] = ∫_0^{times[k]} λ`.
    cumulative: Vec<f64>,
    extrapolation: Extrapolation,
}

impl HazardCurve {
    /// Builds a curve from `(t, λ)` pillars; `λ` holds up to and including `t`'s segment.
    pub fn new(pillars: &[(f64, f64)]) -> Result<Self> {
        if pillars.is_empty() {
            return Err(Error::InvalidCurve("hazard curve needs at least one pillar"));
        }
        let mut prev = 0.0;
        for &(t, lambda) in pillars {
            if !(t > prev) || !t.is_finite() {
                return Err(Error::InvalidCurve("hazard pillar times must be positive and strictly increasing"));
            }
            if !(lambda >= 0.0) || !lambda.is_finite() {
                return Err(Error::InvalidCurve("hazard intensities must be non-negative"));
            }
            prev = t;
        }
        let mut cumulative = Vec::with_capacity(pillars.len());
        let (mut acc, mut start) = (0.0, 0.0);
        for &(t, lambda) in pillars {
            acc += lambda * (t - start);
            cumulative.push(acc);
            start = t;
        }
        Ok(Self {
            times: pillars.iter().map(|p| p.0).collect(),
            lambdas: pillars.iter().map(|p| p.1).collect(),
            cumulative,
            extrapolation: Extrapolation::Forbidden,
        })
    }

    pub fn flat(lambda: f64, horizon: f64) -> Result<Self> {
        Self::new(&[(horizon, lambda)])
    }

    pub fn with_extrapolation(mut self, extrapolation: Extrapolation) -> Self {
        self.extrapolation = extrapolation;
        self
    }

    pub fn pillars(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.lambdas.iter().copied())
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("curve has pillars")
    }

    fn check_horizon(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter { name: "t", value: t });
        }
        let last = self.last_time();
        if t - last > PILLAR_SLACK && self.extrapolation == Extrapolation::Forbidden {
            return Err(Error::ExtrapolationNotAllowed { t, last });
        }
        Ok(())
    }

    /// Intensity in force at `t` (right-continuous; the last pillar is inclusive).
    pub fn intensity(&self, t: f64) -> Result<f64> {
        self.check_horizon(t)?;
        let k = self.times.partition_point(|&x| x <= t);
        Ok(self.lambdas[k.min(self.lambdas.len() - 1)])
    }

    /// `∫_0^t λ(v) dv`, exact.
    pub fn integrated(&self, t: f64) -> Result<f64> {
        self.check_horizon(t)?;
        let k = self.times.partition_point(|&x| x <= t);
        if k == self.times.len() {
            let last = self.times.len() - 1;
            return Ok(self.cumulative[last] + self.lambdas[last] * (t - self.times[last]).max(0.0));
        }
        let (base, start) = if k == 0 { (0.0, 0.0) } else { (self.cumulative[k - 1], self.times[k - 1]) };
        Ok(base + self.lambdas[k] * (t - start))
    }

    /// `S(0, t) = exp(-∫_0^t λ)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        Ok((-self.integrated(t)?).exp())
    }

    /// `S(0, start, end) = S(0, end) / S(0, start)`.
    pub fn forward_survival(&self, start: f64, end: f64) -> Result<f64> {
        if end < start {
            return Err(Error::InvalidInterval { start, end });
        }
        if end == start {
            return Ok(1.0);
        }
        Ok((self.integrated(start)? - self.integrated(end)?).exp())
    }

    /// Flat forward intensity over `[expiry, expiry + tenor]`:
    /// `-(1/θ) ln(S(0, T+θ) / S(0, T))`.
    pub fn initial_forward_hazard(&self, expiry: f64, tenor: f64) -> Result<f64> {
        if !(tenor > 0.0) || !tenor.is_finite() {
            return Err(Error::InvalidTenor(tenor));
        }
        let ratio = self.survival(expiry + tenor)? / self.survival(expiry)?;
        Ok(-ratio.ln() / tenor)
    }
}

/// Quote convention of a bond price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceKind {
    Clean,
    #[default]
    Dirty,
}

/// Spot price of a fixed-coupon government bond, as a fraction of notional.
#[derive(Debug, Clone, PartialEq)]
pub struct BondQuote {
    pub maturity: f64,
    pub coupon_rate: f64,
    pub frequency: u32,
    pub kind: PriceKind,
    pub price: f64,
}

impl BondQuote {
    pub fn new(maturity: f64, coupon_rate: f64, frequency: u32, price: f64) -> Result<Self> {
        let quote = Self { maturity, coupon_rate, frequency, kind: PriceKind::Dirty, price };
        quote.validate()?;
        Ok(quote)
    }

    pub fn clean(mut self) -> Self {
        self.kind = PriceKind::Clean;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return Err(Error::InvalidParameter { name: "maturity", value: self.maturity });
        }
        if !(self.price > 0.0) || !self.price.is_finite() {
            return Err(Error::InvalidParameter { name: "price", value: self.price });
        }
        if !(self.coupon_rate >= 0.0) || !self.coupon_rate.is_finite() {
            return Err(Error::InvalidParameter { name: "coupon_rate", value: self.coupon_rate });
        }
        if self.frequency == 0 {
            return Err(Error::InvalidParameter { name: "frequency", value: 0.0 });
        }
        Ok(())
    }

    /// Coupon dates rolled back from maturity in steps of `1/frequency`, ascending.
    pub fn coupon_times(&self) -> Vec<f64> {
        let period = 1.0 / f64::from(self.frequency);
        let mut times = Vec::new();
        let mut k = 0u32;
        loop {
            let t = self.maturity - f64::from(k) * period;
            if t <= PILLAR_SLACK {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.reverse();
        times
    }

    /// Price including accrued interest.
    pub fn dirty_price(&self) -> f64 {
        match self.kind {
            PriceKind::Dirty => self.price,
            PriceKind::Clean => {
                let period = 1.0 / f64::from(self.frequency);
                let first = self.coupon_times()[0];
                let accrued_fraction = ((period - first) / period).max(0.0);
                self.price + self.coupon_rate * period * accrued_fraction
            }
        }
    }
}

/// `∫_0^end DF(0,u) S(0,u) λ(u) du`, integrated exactly segment by segment
/// (constant forward rate and constant intensity on every piece).
pub fn recovery_leg(dc: &DiscountCurve, hz: &HazardCurve, end: f64) -> Result<f64> {
    if !(end >= 0.0) {
        return Err(Error::InvalidParameter { name: "end", value: end });
    }
    let mut breaks: Vec<f64> = dc
        .times
        .iter()
        .chain(hz.times.iter())
        .copied()
        .filter(|&t| t > 0.0 && t < end)
        .collect();
    breaks.push(end);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();

    let mut total = 0.0;
    let mut a = 0.0;
    for b in breaks {
        let h = b - a;
        if h <= 0.0 {
            continue;
        }
        let mid = 0.5 * (a + b);
        let lambda = hz.intensity(mid)?;
        if lambda > 0.0 {
            let rate = dc.segment_forward(mid);
            let x = (rate + lambda) * h;
            let shape = if x.abs() < 1e-12 { 1.0 - 0.5 * x } else { -(-x).exp_m1() / x };
            total += dc.discount_factor(a)? * hz.survival(a)? * lambda * h * shape;
        }
        a = b;
    }
    Ok(total)
}

/// Model dirty price of a quote: survival-weighted cash flows plus recovery
/// `R` paid on default.
pub fn bond_price(quote: &BondQuote, dc: &DiscountCurve, hz: &HazardCurve, recovery: f64) -> Result<f64> {
    let coupon = quote.coupon_rate / f64::from(quote.frequency);
    let mut price = hz.survival(quote.maturity)? * dc.discount_factor(quote.maturity)?;
    for t in quote.coupon_times() {
        price += coupon * hz.survival(t)? * dc.discount_factor(t)?;
    }
    if recovery > 0.0 {
        price += recovery * recovery_leg(dc, hz, quote.maturity)?;
    }
    Ok(price)
}

const STRIP_LAMBDA_MAX: f64 = 10.0;
const STRIP_TOLERANCE: f64 = 1e-12;
const STRIP_MAX_ITERATIONS: usize = 200;

/// Bootstraps a piecewise-constant hazard curve with one pillar per quote,
/// shortest maturity first, so every quote reprices at its model value.
pub fn strip_hazard(quotes: &[BondQuote], dc: &DiscountCurve, recovery: f64) -> Result<HazardCurve> {
    if !(0.0..1.0).contains(&recovery) {
        return Err(Error::InvalidParameter { name: "recovery", value: recovery });
    }
    if quotes.is_empty() {
        return Err(Error::InvalidCurve("no bond quotes to strip"));
    }
    for (index, q) in quotes.iter().enumerate() {
        q.validate()?;
        if index > 0 && !(q.maturity > quotes[index - 1].maturity) {
            return Err(Error::UnsortedQuotes { index });
        }
    }

    let mut pillars: Vec<(f64, f64)> = Vec::with_capacity(quotes.len());
    for q in quotes {
        let target = q.dirty_price();
        let mut residual = |lambda: f64| -> Result<f64> {
            pillars.push((q.maturity, lambda));
            let curve = HazardCurve::new(&pillars);
            pillars.pop();
            Ok(bond_price(q, dc, &curve?, recovery)? - target)
        };

        let at_zero = residual(0.0)?;
        let lambda = if at_zero.abs() <= STRIP_TOLERANCE {
            0.0
        } else if at_zero < 0.0 {
            return Err(Error::NegativeHazardImplied { maturity: q.maturity });
        } else {
            let at_cap = residual(STRIP_LAMBDA_MAX)?;
            if at_cap > 0.0 {
                return Err(Error::StrippingFailed { maturity: q.maturity });
            }
            solve_decreasing(&mut residual, 0.0, STRIP_LAMBDA_MAX, at_zero, at_cap)
                .map_err(|_| Error::StrippingFailed { maturity: q.maturity })?
        };
        pillars.push((q.maturity, lambda));
    }
    HazardCurve::new(&pillars)
}

/// Root of a decreasing function bracketed by `f(lo) > 0 > f(hi)`:
/// bisection until the bracket is narrow, then secant steps kept inside it.
fn solve_decreasing(
    f: &mut impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
) -> Result<f64> {
    let update = |x: f64, fx: f64, lo: &mut f64, hi: &mut f64, f_lo: &mut f64, f_hi: &mut f64| {
        if fx > 0.0 {
            *lo = x;
            *f_lo = fx;
        } else {
            *hi = x;
            *f_hi = fx;
        }
    };
    for _ in 0..STRIP_MAX_ITERATIONS {
        let width = hi - lo;
        let secant = lo + f_lo * width / (f_lo - f_hi);
        let x = if width > 1e-3 || !(secant > lo && secant < hi) { 0.5 * (lo + hi) } else { secant };
        let fx = f(x)?;
        if fx.abs() <= 1e-15 {
            return Ok(x);
        }
        update(x, fx, &mut lo, &mut hi, &mut f_lo, &mut f_hi);
        if hi - lo <= STRIP_TOLERANCE {
            return Ok(0.5 * (lo + hi));
        }
        // Secant iterates creep in from one side; force the bracket to halve.
        if hi - lo > 0.5 * width {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid)?;
            update(mid, fm, &mut lo, &mut hi, &mut f_lo, &mut f_hi);
        }
    }
    Err(Error::ConvergenceError { iterations: STRIP_MAX_ITERATIONS })
}
