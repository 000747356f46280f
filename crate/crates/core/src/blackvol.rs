//! Black-76 caplets and floorlets on the CMT rate, and implied volatility.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const VOL_LOWER: f64 = 1e-4;
const VOL_UPPER: f64 = 5.0;
const MAX_ITERATIONS: usize = 200;

/// Standard normal CDF via the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * core::f64::consts::PI).sqrt()
}

fn check_inputs(forward: f64, strike: f64, expiry: f64) -> Result<()> {
    if !(forward > 0.0) || !forward.is_finite() {
        return Err(Error::DomainError { x: forward });
    }
    if !(strike >= 0.0) || !strike.is_finite() {
        return Err(Error::DomainError { x: strike });
    }
    if !(expiry > 0.0) || !expiry.is_finite() {
        return Err(Error::InvalidParameter { name: "expiry", value: expiry });
    }
    Ok(())
}

/// Undiscounted call or put per unit accrual.
fn undiscounted(forward: f64, strike: f64, total_vol: f64, is_call: bool) -> f64 {
    let intrinsic = if is_call { (forward - strike).max(0.0) } else { (strike - forward).max(0.0) };
    if total_vol == 0.0 || strike == 0.0 {
        return intrinsic;
    }
    let d1 = (forward / strike).ln() / total_vol + 0.5 * total_vol;
    let d2 = d1 - total_vol;
    if is_call {
        forward * norm_cdf(d1) - strike * norm_cdf(d2)
    } else {
        strike * norm_cdf(-d2) - forward * norm_cdf(-d1)
    }
}

/// `df·accrual·(F N(d₁) − K N(d₂))` for a call, the parity mirror for a put.
pub fn black_price(
    forward: f64,
    strike: f64,
    vol: f64,
    expiry: f64,
    df: f64,
    accrual: f64,
    is_call: bool,
) -> Result<f64> {
    check_inputs(forward, strike, expiry)?;
    if !(vol >= 0.0) || !vol.is_finite() {
        return Err(Error::InvalidParameter { name: "vol", value: vol });
    }
    Ok(df * accrual * undiscounted(forward, strike, vol * expiry.sqrt(), is_call))
}

/// `∂price/∂σ`.
pub fn black_vega(forward: f64, strike: f64, vol: f64, expiry: f64, df: f64, accrual: f64) -> Result<f64> {
    check_inputs(forward, strike, expiry)?;
    if strike == 0.0 || vol <= 0.0 {
        return Ok(0.0);
    }
    let sqrt_t = expiry.sqrt();
    let total = vol * sqrt_t;
    let d1 = (forward / strike).ln() / total + 0.5 * total;
    Ok(df * accrual * forward * norm_pdf(d1) * sqrt_t)
}

/// Black volatility reproducing `price`.
///
/// The price is mapped to the out-of-the-money side by parity (calls for
/// `K ≥ F`, puts below) and inverted by Newton on the log price, falling back
/// to bisection whenever a step leaves the bracket `[1e-4, 5]`.
pub fn implied_vol(
    price: f64,
    forward: f64,
    strike: f64,
    expiry: f64,
    df: f64,
    accrual: f64,
    is_call: bool,
) -> Result<f64> {
    check_inputs(forward, strike, expiry)?;
    let scale = df * accrual;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter { name: "df_accrual", value: scale });
    }
    let (lower, upper) = if is_call { ((forward - strike).max(0.0), forward) } else { ((strike - forward).max(0.0), strike) };
    let unit = price / scale;
    if !(unit > lower && unit < upper) {
        return Err(Error::NoArbitrageViolation { price, lower: scale * lower, upper: scale * upper });
    }
    let otm_call = strike >= forward;
    let target = match (is_call, otm_call) {
        (true, true) | (false, false) => unit,
        (true, false) => unit - (forward - strike),
        (false, true) => unit + (forward - strike),
    };
    if !(target > 0.0) {
        return Err(Error::NoArbitrageViolation { price, lower: scale * lower, upper: scale * upper });
    }
    let sqrt_t = expiry.sqrt();
    let value = |vol: f64| undiscounted(forward, strike, vol * sqrt_t, otm_call);
    let tolerance = 1e-12 * forward.max(strike);

    let (mut lo, mut hi) = (VOL_LOWER, VOL_UPPER);
    if value(lo) >= target {
        // Below the bracket: the target sits in the exponentially small tail.
        return Err(Error::ConvergenceError { iterations: 0 });
    }
    if value(hi) <= target {
        return Err(Error::ConvergenceError { iterations: 0 });
    }
    let log_target = target.ln();
    let mut vol = (2.0 * core::f64::consts::PI / expiry).sqrt() * target / forward;
    if !(vol > lo && vol < hi) {
        vol = 0.5 * (lo + hi);
    }
    for iteration in 1..=MAX_ITERATIONS {
        let v = value(vol);
        let diff = v - target;
        if diff == 0.0 {
            return Ok(vol);
        }
        if diff > 0.0 {
            hi = vol;
        } else {
            lo = vol;
        }
        let d1 = (forward / strike).ln() / (vol * sqrt_t) + 0.5 * vol * sqrt_t;
        let vega = forward * norm_pdf(d1) * sqrt_t;
        let mut next = if v > 0.0 && vega > 0.0 { vol - (v.ln() - log_target) * v / vega } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        // Converged in σ, not only in price: deep out of the money or at very
        // high total variance the price barely moves with σ.
        if (next - vol).abs() <= 1e-14 * vol || hi - lo <= 4.0 * f64::EPSILON * hi {
            return if diff.abs() <= tolerance { Ok(next) } else { Err(Error::ConvergenceError { iterations: iteration }) };
        }
        vol = next;
    }
    Err(Error::ConvergenceError { iterations: MAX_ITERATIONS })
}

/// One Monte Carlo option price to invert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub expiry: f64,
    pub strike: f64,
    pub price: f64,
    pub forward: f64,
    pub df: f64,
    pub accrual: f64,
    pub is_call: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolSurfacePoint {
    pub expiry: f64,
    pub strike: f64,
    /// `None` when the price could not be inverted.
    pub implied_vol: Option<f64>,
    pub source_price: f64,
    pub converged: bool,
}

/// Inverts every quote; failures are flagged per point instead of aborting.
pub fn build_surface(quotes: &[OptionQuote]) -> Vec<VolSurfacePoint> {
    quotes
        .iter()
        .map(|q| {
            let vol = implied_vol(q.price, q.forward, q.strike, q.expiry, q.df, q.accrual, q.is_call).ok();
            VolSurfacePoint {
                expiry: q.expiry,
                strike: q.strike,
                implied_vol: vol,
                source_price: q.price,
                converged: vol.is_some(),
            }
        })
        .collect()
}
