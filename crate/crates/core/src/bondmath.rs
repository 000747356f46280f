//! Bond price as a function of yield to maturity, and back.
//!
//! For a constant per-period coupon `c`, tenor `θ` and `κ` coupons a year the
//! price of the forward bond at yield `x` is
//!
//! ```text
//! f(x) = c (1 - (1+x)^-θ) / ((1+x)^(1/κ) - 1) + (1+x)^-θ
//! ```
//!
//! In CMT mode the coupon is the par coupon of a proxy yield,
//! `c = (1+y_proxy)^(1/κ) - 1`, so that `f(y_proxy) = 1`.
//!
//! The annuity factor `A(a) = (1 - e^{-θa}) / (e^{a/κ} - 1)` with `a = ln(1+x)`
//! has a removable singularity at `x = 0`. Near it both numerator and
//! denominator are divided by `a` and evaluated from their power series.

use alloc::vec::Vec;

use crate::curves::{DiscountCurve, HazardCurve};
use crate::error::{Error, Result};

/// Yields must stay above `-1 + YIELD_EPSILON`.
pub const YIELD_EPSILON: f64 = 1e-8;

/// Upper end of the yield bracket used by the inversion.
const YIELD_MAX: f64 = 10.0;
const INVERSION_TOLERANCE: f64 = 1e-12;
const INVERSION_MAX_ITERATIONS: usize = 200;

/// Below this `|ln(1+x)|` the annuity factor is evaluated from power series.
const SERIES_BAND: f64 = 0.02;
const SERIES_TERMS: usize = 30;

/// Default step of the recovery-integral quadrature, in years.
pub const DEFAULT_QUAD_STEP: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouponMode {
    /// Constant coupon rate per annum.
    FixedCoupon(f64),
    /// Coupon reset to the par rate of the terminal yield.
    CmtPar,
}

/// A constant-maturity bond: tenor, coupon frequency, issuer recovery, coupon rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondSpec {
    pub theta: f64,
    pub kappa: u32,
    pub recovery: f64,
    pub coupon_mode: CouponMode,
}

impl BondSpec {
    pub fn new(theta: f64, kappa: u32, recovery: f64, coupon_mode: CouponMode) -> Result<Self> {
        let spec = Self { theta, kappa, recovery, coupon_mode };
        spec.validate()?;
        Ok(spec)
    }

    /// CMT`θ` bond with `κ` coupons a year and recovery `R`.
    pub fn cmt(theta: f64, kappa: u32, recovery: f64) -> Result<Self> {
        Self::new(theta, kappa, recovery, CouponMode::CmtPar)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidTenor(self.theta));
        }
        if self.kappa == 0 {
            return Err(Error::InvalidParameter { name: "kappa", value: 0.0 });
        }
        if !(0.0..1.0).contains(&self.recovery) {
            return Err(Error::InvalidParameter { name: "recovery", value: self.recovery });
        }
        if let CouponMode::FixedCoupon(c) = self.coupon_mode {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter { name: "coupon", value: c });
            }
        }
        Ok(())
    }

    fn kappa_f64(&self) -> f64 {
        f64::from(self.kappa)
    }

    /// Number of coupons `κθ`, rounded up when `κθ` is not an integer.
    pub fn coupon_count(&self) -> usize {
        let n = self.kappa_f64() * self.theta;
        if (n - n.round()).abs() < 1e-9 {
            n.round() as usize
        } else {
            n.ceil() as usize
        }
    }

    /// Coupon dates as offsets `T_i - T` from expiry, ascending and ending at `θ`.
    pub fn coupon_offsets(&self) -> Vec<f64> {
        let n = self.coupon_count();
        let k = self.kappa_f64();
        let whole = ((self.kappa_f64() * self.theta) - n as f64).abs() < 1e-9;
        (1..=n)
            .map(|i| {
                if i == n {
                    self.theta
                } else if whole {
                    i as f64 / k
                } else {
                    self.theta - (n - i) as f64 / k
                }
            })
            .collect()
    }

    /// Coupon paid per period. In CMT mode this is `(1+y_proxy)^(1/κ) - 1`.
    pub fn per_period_coupon(&self, y_proxy: f64) -> Result<f64> {
        match self.coupon_mode {
            CouponMode::FixedCoupon(c) => Ok(c / self.kappa_f64()),
            CouponMode::CmtPar => {
                if !(y_proxy > -1.0 + YIELD_EPSILON) {
                    return Err(Error::DomainError { x: y_proxy });
                }
                let c = (y_proxy.ln_1p() / self.kappa_f64()).exp_m1();
                if c < 0.0 {
                    return Err(Error::InvalidParameter { name: "coupon_rate_in_effect", value: c * self.kappa_f64() });
                }
                Ok(c)
            }
        }
    }
}

/// The transfer function `f` between yield and forward bond price, with the
/// coupon frozen at the value in effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldFunction {
    theta: f64,
    kappa: f64,
    coupon: f64,
}

impl YieldFunction {
    /// `y_proxy` sets the coupon in CMT mode and is ignored for fixed coupons.
    pub fn new(spec: &BondSpec, y_proxy: f64) -> Result<Self> {
        spec.validate()?;
        Ok(Self { theta: spec.theta, kappa: spec.kappa_f64(), coupon: spec.per_period_coupon(y_proxy)? })
    }

    /// Coupon paid each period, as a fraction of notional.
    pub fn per_period_coupon(&self) -> f64 {
        self.coupon
    }

    /// Annualised coupon rate `c̃ = κ c`.
    pub fn coupon_rate(&self) -> f64 {
        self.coupon * self.kappa
    }

    fn check_domain(x: f64) -> Result<()> {
        if x >= -1.0 + YIELD_EPSILON && x.is_finite() {
            Ok(())
        } else {
            Err(Error::DomainError { x })
        }
    }

    /// `f(x)`.
    pub fn bond_from_yield(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x)?.0)
    }

    /// `(f'(x), f''(x))`.
    pub fn bond_derivatives(&self, x: f64) -> Result<(f64, f64)> {
        let (_, d1, d2) = self.evaluate(x)?;
        Ok((d1, d2))
    }

    /// `(f(x), f'(x), f''(x))` in one pass.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64, f64)> {
        Self::check_domain(x)?;
        let u = 1.0 + x;
        let a = x.ln_1p();
        let (ann, ann_a, ann_aa) = annuity(a, self.theta, 1.0 / self.kappa);
        let principal = (-self.theta * a).exp();
        let value = self.coupon * ann + principal;
        let value_a = self.coupon * ann_a - self.theta * principal;
        let value_aa = self.coupon * ann_aa + self.theta * self.theta * principal;
        Ok((value, value_a / u, (value_aa - value_a) / (u * u)))
    }

    /// `g(b) = f^{-1}(b)` by Newton steps safeguarded by bisection on
    /// `[-1 + ε, 10]`.
    pub fn yield_from_bond(&self, price: f64) -> Result<f64> {
        let mut lo = -1.0 + YIELD_EPSILON;
        let mut hi = YIELD_MAX;
        let upper = self.bond_from_yield(lo)?;
        let lower = self.bond_from_yield(hi)?;
        if !(price < upper && price > lower) {
            return Err(Error::InversionRangeError { price });
        }
        let mut x = 0.03;
        for _ in 0..INVERSION_MAX_ITERATIONS {
            let (fx, dfx, _) = self.evaluate(x)?;
            let residual = fx - price;
            if residual == 0.0 {
                return Ok(x);
            }
            if residual > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - residual / dfx;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let step = (next - x).abs();
            x = next;
            if step <= 1e-15 * (1.0 + x.abs()) {
                let final_residual = self.bond_from_yield(x)? - price;
                if final_residual.abs() <= INVERSION_TOLERANCE {
                    return Ok(x);
                }
                return Err(Error::ConvergenceError { iterations: INVERSION_MAX_ITERATIONS });
            }
        }
        Err(Error::ConvergenceError { iterations: INVERSION_MAX_ITERATIONS })
    }
}

/// `A(a) = (1 - e^{-θa}) / (e^{a/κ} - 1)` and its first two derivatives in `a`.
fn annuity(a: f64, theta: f64, inv_kappa: f64) -> (f64, f64, f64) {
    if a.abs() < SERIES_BAND {
        // A = g/h with g = (1 - e^{-θa})/a and h = (e^{a/κ} - 1)/a, both entire.
        let (g, g1, g2) = series_over_a(-theta, a);
        let (h, h1, h2) = series_over_a(inv_kappa, a);
        let (g, g1, g2) = (-g, -g1, -g2);
        let cross = g1 * h - g * h1;
        let ann = g / h;
        let ann1 = cross / (h * h);
        let ann2 = (g2 * h - g * h2) / (h * h) - 2.0 * h1 * cross / (h * h * h);
        (ann, ann1, ann2)
    } else {
        let e = (-theta * a).exp();
        let num = -(-theta * a).exp_m1();
        let num1 = theta * e;
        let num2 = -theta * theta * e;
        let den = (a * inv_kappa).exp_m1();
        let den1 = inv_kappa * (a * inv_kappa).exp();
        let den2 = inv_kappa * den1;
        let cross = num1 * den - num * den1;
        let ann = num / den;
        let ann1 = cross / (den * den);
        let ann2 = (num2 * den - num * den2) / (den * den) - 2.0 * den1 * cross / (den * den * den);
        (ann, ann1, ann2)
    }
}

/// `(e^{sa} - 1)/a` and its first two derivatives in `a`, from the series
/// `Σ s^{n+1} a^n / (n+1)!`.
fn series_over_a(s: f64, a: f64) -> (f64, f64, f64) {
    let mut coeff = s; // s^{n+1}/(n+1)! at n = 0
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    let mut pow = [1.0, 0.0, 0.0]; // a^n, a^{n-1}, a^{n-2}
    for n in 0..SERIES_TERMS {
        let nf = n as f64;
        v += coeff * pow[0];
        d1 += nf * coeff * pow[1];
        d2 += nf * (nf - 1.0) * coeff * pow[2];
        pow = [pow[0] * a, pow[0], pow[1]];
        coeff *= s / (nf + 2.0);
    }
    (v, d1, d2)
}

/// CMT rate fixed from a terminal yield: `κ((1+y)^(1/κ) - 1)`.
pub fn cmt_from_yield(kappa: u32, terminal_yield: f64) -> Result<f64> {
    if kappa == 0 {
        return Err(Error::InvalidParameter { name: "kappa", value: 0.0 });
    }
    if !(terminal_yield > -1.0) {
        return Err(Error::DomainError { x: terminal_yield });
    }
    let k = f64::from(kappa);
    Ok(k * (terminal_yield.ln_1p() / k).exp_m1())
}

/// Nodes `start, start+step, …` with a final partial panel ending at `end`.
pub fn quadrature_nodes(start: f64, end: f64, step: f64) -> Vec<f64> {
    let span = end - start;
    if span <= 0.0 {
        return alloc::vec![start];
    }
    let full = ((span / step) + 1e-9).floor() as usize;
    let mut nodes: Vec<f64> = (0..=full).map(|k| start + k as f64 * step).collect();
    let last = nodes.len() - 1;
    if end - nodes[last] > 1e-12 * span.max(1.0) {
        nodes.push(end);
    } else {
        nodes[last] = end;
    }
    nodes
}

/// Composite trapezoid rule over arbitrary ascending nodes.
pub fn trapezoid(nodes: &[f64], values: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `Γ(T, U) = ∫_T^U P(u) S(u) λ(u) du` by the composite trapezoid rule.
pub fn gamma_integral(
    forward_df: impl Fn(f64) -> Result<f64>,
    survival: impl Fn(f64) -> Result<f64>,
    intensity: impl Fn(f64) -> Result<f64>,
    start: f64,
    end: f64,
    quad_step: f64,
) -> Result<f64> {
    if end < start {
        return Err(Error::InvalidInterval { start, end });
    }
    if !(quad_step > 0.0) || !quad_step.is_finite() {
        return Err(Error::InvalidParameter { name: "quad_step", value: quad_step });
    }
    let nodes = quadrature_nodes(start, end, quad_step);
    let values = nodes
        .iter()
        .map(|&u| Ok(forward_df(u)? * survival(u)? * intensity(u)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(trapezoid(&nodes, &values))
}

/// Survival-weighted pieces of the forward bond price seen from today.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardBondLegs {
    /// `S(0,T,T+θ) DF(0,T,T+θ)`.
    pub principal: f64,
    /// `Σ S(0,T,T_i) DF(0,T,T_i)`.
    pub annuity: f64,
    /// `Γ(0,T,T+θ)`.
    pub gamma: f64,
}

impl ForwardBondLegs {
    pub fn new(dc: &DiscountCurve, hz: &HazardCurve, spec: &BondSpec, expiry: f64, quad_step: f64) -> Result<Self> {
        spec.validate()?;
        if !(expiry >= 0.0) || !expiry.is_finite() {
            return Err(Error::InvalidParameter { name: "expiry", value: expiry });
        }
        let end = expiry + spec.theta;
        let weight = |u: f64| -> Result<f64> { Ok(dc.forward_df(expiry, u)? * hz.forward_survival(expiry, u)?) };
        let principal = weight(end)?;
        let annuity = spec
            .coupon_offsets()
            .iter()
            .map(|&off| weight(expiry + off))
            .sum::<Result<f64>>()?;
        let gamma = gamma_integral(
            |u| dc.forward_df(expiry, u),
            |u| hz.forward_survival(expiry, u),
            |u| hz.intensity(u),
            expiry,
            end,
            quad_step,
        )?;
        Ok(Self { principal, annuity, gamma })
    }

    /// Forward bond value for a given per-period coupon.
    pub fn price(&self, spec: &BondSpec, per_period_coupon: f64) -> f64 {
        self.principal + per_period_coupon * self.annuity + spec.recovery * self.gamma
    }

    /// Par yield: the `y` whose par coupon prices the forward bond at 1.
    pub fn par_yield(&self, spec: &BondSpec) -> Result<f64> {
        if !(self.annuity > 0.0) {
            return Err(Error::DegenerateCurve);
        }
        let base = (1.0 - self.principal - spec.recovery * self.gamma) / self.annuity + 1.0;
        if !(base > 0.0) {
            return Err(Error::DegenerateCurve);
        }
        Ok(base.powi(spec.kappa as i32) - 1.0)
    }
}

/// Initial forward yield of the CMT`θ` bond expiring at `expiry`:
/// `((1 - S·DF - R·Γ) / Σ S·DF + 1)^κ - 1` under today's curves.
pub fn initial_forward_yield(
    dc: &DiscountCurve,
    hz: &HazardCurve,
    spec: &BondSpec,
    expiry: f64,
    quad_step: f64,
) -> Result<f64> {
    ForwardBondLegs::new(dc, hz, spec, expiry, quad_step)?.par_yield(spec)
}

/// Starting yield of a simulation: the par yield in CMT mode, otherwise the
/// yield of the fixed-coupon forward bond priced off today's curves.
pub fn starting_yield(dc: &DiscountCurve, hz: &HazardCurve, spec: &BondSpec, expiry: f64, quad_step: f64) -> Result<f64> {
    let legs = ForwardBondLegs::new(dc, hz, spec, expiry, quad_step)?;
    match spec.coupon_mode {
        CouponMode::CmtPar => legs.par_yield(spec),
        CouponMode::FixedCoupon(_) => {
            let yf = YieldFunction::new(spec, 0.0)?;
            yf.yield_from_bond(legs.price(spec, yf.per_period_coupon()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fixed(coupon: f64, kappa: u32, theta: f64) -> YieldFunction {
        YieldFunction::new(&BondSpec::new(theta, kappa, 0.0, CouponMode::FixedCoupon(coupon)).unwrap(), 0.0).unwrap()
    }

    /// Direct cash-flow summation of the bond price.
    fn brute_force_price(coupon_rate: f64, kappa: u32, theta: f64, x: f64) -> f64 {
        let n = (kappa as f64 * theta).round() as i32;
        let c = coupon_rate / kappa as f64;
        (1..=n).map(|i| c * (1.0 + x).powf(-(i as f64) / kappa as f64)).sum::<f64>() + (1.0 + x).powf(-theta)
    }

    #[test]
    fn zero_coupon_price_and_inverse() {
        let yf = fixed(0.0, 2, 10.0);
        assert_relative_eq!(yf.bond_from_yield(0.02).unwrap(), 1.02f64.powf(-10.0), max_relative = 1e-14);
        assert_relative_eq!(yf.bond_from_yield(0.02).unwrap(), 0.8203483, epsilon = 1e-7);
        let b = 1.02f64.powf(-10.0);
        assert_relative_eq!(yf.yield_from_bond(b).unwrap(), 0.02, epsilon = 1e-12);
        let (d1, _) = yf.bond_derivatives(0.02).unwrap();
        assert_relative_eq!(d1, -10.0 * 1.02f64.powf(-11.0), max_relative = 1e-12);
    }

    #[test]
    fn coupon_bond_matches_cash_flow_sum() {
        // A 4% semi-annual coupon at a 4% annually-compounded yield is slightly above par.
        let yf = fixed(0.04, 2, 10.0);
        let closed = yf.bond_from_yield(0.04).unwrap();
        assert_relative_eq!(closed, brute_force_price(0.04, 2, 10.0, 0.04), max_relative = 1e-14);
        assert_relative_eq!(closed, 1.0032125, epsilon = 1e-6);
        for x in [-0.005, -1e-9, 0.0, 1e-9, 1e-5, 0.019, 0.021, 0.3] {
            assert_relative_eq!(
                yf.bond_from_yield(x).unwrap(),
                brute_force_price(0.04, 2, 10.0, x),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn zero_yield_limit() {
        // f(0) = c κθ + 1.
        let yf = fixed(0.03, 4, 10.0);
        assert_relative_eq!(yf.bond_from_yield(0.0).unwrap(), 0.0075 * 40.0 + 1.0, max_relative = 1e-15);
    }

    #[test]
    fn cmt_par_identity() {
        let spec = BondSpec::cmt(10.0, 2, 0.2).unwrap();
        for y in [0.001, 0.01, 0.05, 0.0123] {
            let yf = YieldFunction::new(&spec, y).unwrap();
            assert!((yf.bond_from_yield(y).unwrap() - 1.0).abs() < 1e-12);
            assert_relative_eq!(yf.yield_from_bond(1.0).unwrap(), y, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for yf in [fixed(0.0, 2, 10.0), fixed(0.04, 2, 10.0), fixed(0.01, 1, 30.0)] {
            for x in [0.0, 1e-4, 0.015, 0.0199, 0.0201, 0.05, 0.2] {
                let (d1, d2) = yf.bond_derivatives(x).unwrap();
                let up = yf.bond_from_yield(x + h).unwrap();
                let mid = yf.bond_from_yield(x).unwrap();
                let down = yf.bond_from_yield(x - h).unwrap();
                let fd1 = (up - down) / (2.0 * h);
                let (u1, _) = yf.bond_derivatives(x + h).unwrap();
                let (l1, _) = yf.bond_derivatives(x - h).unwrap();
                let fd2 = (u1 - l1) / (2.0 * h);
                assert_relative_eq!(d1, fd1, max_relative = 1e-6);
                assert_relative_eq!(d2, fd2, max_relative = 1e-6);
                assert_relative_eq!(d2, (up - 2.0 * mid + down) / (h * h), max_relative = 1e-3);
                assert!(d1 < 0.0);
            }
        }
    }

    #[test]
    fn domain_and_range_errors() {
        let yf = fixed(0.02, 2, 10.0);
        assert!(matches!(yf.bond_from_yield(-1.0), Err(Error::DomainError { .. })));
        assert!(matches!(yf.yield_from_bond(-0.5), Err(Error::InversionRangeError { .. })));
        assert!(matches!(yf.yield_from_bond(0.0), Err(Error::InversionRangeError { .. })));
    }

    #[test]
    fn price_strictly_decreasing_on_grid() {
        for yf in [fixed(0.0, 2, 10.0), fixed(0.05, 2, 10.0)] {
            let lo = -1.0 + 1e-3;
            let grid: Vec<f64> = (0..1000).map(|i| lo + (10.0 - lo) * i as f64 / 999.0).collect();
            let prices: Vec<f64> = grid.iter().map(|&x| yf.bond_from_yield(x).unwrap()).collect();
            assert!(prices.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn roundtrips_on_grid() {
        let yf = fixed(0.025, 2, 10.0);
        for i in 1..=100 {
            let x = 0.001 * i as f64;
            assert!((yf.yield_from_bond(yf.bond_from_yield(x).unwrap()).unwrap() - x).abs() < 1e-10);
            let b = 0.6 + 0.008 * i as f64;
            assert!((yf.bond_from_yield(yf.yield_from_bond(b).unwrap()).unwrap() - b).abs() < 1e-10);
        }
    }

    #[test]
    fn cmt_conversion() {
        assert_eq!(cmt_from_yield(2, 0.0).unwrap(), 0.0);
        assert_relative_eq!(cmt_from_yield(1, 0.037).unwrap(), 0.037, max_relative = 1e-15);
        assert_relative_eq!(cmt_from_yield(2, 0.04).unwrap(), 2.0 * (1.04f64.sqrt() - 1.0), max_relative = 1e-15);
        assert_relative_eq!(cmt_from_yield(2, 0.04).unwrap(), 0.0396078, epsilon = 1e-7);
        for k in 1..=12 {
            for y in [0.0, 0.001, 0.02, 0.1] {
                assert!(cmt_from_yield(k, y).unwrap() <= y);
            }
        }
    }

    #[test]
    fn gamma_integral_closed_form_and_refinement() {
        let zero = gamma_integral(|_| Ok(1.0), |_| Ok(1.0), |_| Ok(0.0), 1.0, 11.0, 1.0 / 12.0).unwrap();
        assert_eq!(zero, 0.0);
        let l = 0.02;
        let g = |step: f64| {
            gamma_integral(|_| Ok(1.0), |u| Ok((-l * (u - 1.0)).exp()), |_| Ok(l), 1.0, 11.0, step).unwrap()
        };
        let exact = 1.0 - (-0.2f64).exp();
        assert_relative_eq!(exact, 0.1812692, epsilon = 1e-7);
        assert_relative_eq!(g(1.0 / 12.0), exact, max_relative = 1e-5);
        // Trapezoid error is O(h²): halving the step divides it by four.
        let e1 = (g(0.5) - exact).abs();
        let e2 = (g(0.25) - exact).abs();
        assert_relative_eq!(e1 / e2, 4.0, max_relative = 1e-3);
    }

    #[test]
    fn quadrature_nodes_include_partial_panel() {
        assert_eq!(quadrature_nodes(0.0, 1.0, 0.25), [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(quadrature_nodes(0.0, 1.0, 0.3).len(), 5);
        assert_eq!(*quadrature_nodes(0.0, 1.0, 0.3).last().unwrap(), 1.0);
        assert_eq!(*quadrature_nodes(1.0, 11.0, 1.0 / 12.0).last().unwrap(), 11.0);
    }

    #[test]
    fn coupon_schedule() {
        let spec = BondSpec::cmt(10.0, 2, 0.0).unwrap();
        let offs = spec.coupon_offsets();
        assert_eq!(offs.len(), 20);
        assert_eq!(offs[0], 0.5);
        assert_eq!(offs[19], 10.0);
        let odd = BondSpec::cmt(2.3, 2, 0.0).unwrap();
        let offs = odd.coupon_offsets();
        assert_eq!(offs.len(), 5);
        assert_relative_eq!(offs[0], 0.3, epsilon = 1e-14);
        assert_eq!(offs[4], 2.3);
    }

    /// Σ_{i=1}^{κθ} e^{-r i/κ} summed term by term.
    fn annuity_by_summation(rate: f64, kappa: u32, theta: f64) -> f64 {
        (1..=(kappa as f64 * theta) as u32).map(|i| (-rate * i as f64 / kappa as f64).exp()).sum()
    }

    #[test]
    fn initial_forward_yield_flat_curve() {
        let dc = DiscountCurve::flat(0.01, 40.0).unwrap();
        let hz = HazardCurve::flat(0.0, 40.0).unwrap();
        for r in [0.0, 0.2, 0.6] {
            let spec = BondSpec::cmt(10.0, 2, r).unwrap();
            let y = initial_forward_yield(&dc, &hz, &spec, 1.0, DEFAULT_QUAD_STEP).unwrap();
            let expected = ((1.0 - (-0.1f64).exp()) / annuity_by_summation(0.01, 2, 10.0) + 1.0).powi(2) - 1.0;
            assert_relative_eq!(y, expected, max_relative = 1e-12);
            assert_relative_eq!(y, 0.01f64.exp() - 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn initial_forward_yield_reprices_par_bond() {
        let dc = DiscountCurve::new(&[(0.0, 1.0), (2.0, 0.99), (10.0, 0.9), (30.0, 0.6)]).unwrap();
        let hz = HazardCurve::new(&[(3.0, 0.004), (12.0, 0.01), (30.0, 0.02)]).unwrap();
        let spec = BondSpec::cmt(10.0, 2, 0.3).unwrap();
        let legs = ForwardBondLegs::new(&dc, &hz, &spec, 2.0, DEFAULT_QUAD_STEP).unwrap();
        let y = legs.par_yield(&spec).unwrap();
        let coupon = cmt_from_yield(2, y).unwrap() / 2.0;
        assert!((legs.price(&spec, coupon) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn higher_rates_give_higher_forward_yield() {
        let hz = HazardCurve::flat(0.005, 40.0).unwrap();
        let spec = BondSpec::cmt(10.0, 2, 0.2).unwrap();
        let y1 = initial_forward_yield(&DiscountCurve::flat(0.01, 40.0).unwrap(), &hz, &spec, 1.0, DEFAULT_QUAD_STEP).unwrap();
        let y2 = initial_forward_yield(&DiscountCurve::flat(0.02, 40.0).unwrap(), &hz, &spec, 1.0, DEFAULT_QUAD_STEP).unwrap();
        assert!(y2 > y1);
    }

    #[test]
    fn fixed_coupon_starting_yield_on_flat_curve() {
        let dc = DiscountCurve::flat(0.01, 40.0).unwrap();
        let hz = HazardCurve::flat(0.0, 40.0).unwrap();
        let spec = BondSpec::new(10.0, 2, 0.0, CouponMode::FixedCoupon(0.03)).unwrap();
        let y = starting_yield(&dc, &hz, &spec, 1.0, DEFAULT_QUAD_STEP).unwrap();
        assert_relative_eq!(y, 0.01f64.exp() - 1.0, max_relative = 1e-10);
    }

    proptest! {
        #[test]
        fn inversion_roundtrip(x in 0.0005f64..0.3, coupon in 0.0f64..0.08, kappa in 1u32..=12) {
            let yf = fixed(coupon, kappa, 10.0);
            let b = yf.bond_from_yield(x).unwrap();
            prop_assert!((yf.yield_from_bond(b).unwrap() - x).abs() < 1e-10);
        }
    }
}
