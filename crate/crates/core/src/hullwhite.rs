//! One-factor Hull–White zero-coupon volatilities.
//!
//! With `dr = α(r̃ - r)dt + σ dW` and a deterministic reversion level, the
//! zero-coupon bond `P(t, T)` has volatility `σ(1 - e^{-α(T-t)})/α` and the
//! `T`-forward zero-coupon bond `P(t, T, U) = P(t, U)/P(t, T)` follows
//!
//! ```text
//! dP/P = ξ(t,T,U) dt + σ_P(t,T,U) dW
//! ξ(t,T,U) = σ_P(t,T)² - σ_P(t,T) σ_P(t,U)
//! ```
//!
//! The reversion level `r̃` enters none of these expressions and is not stored.

use crate::error::{Error, Result};

/// Below this `α·τ` the exponential factor uses its series expansion.
pub const SMALL_ALPHA_TAU: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullWhiteParams {
    alpha: f64,
    sigma: f64,
}

impl HullWhiteParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter { name: "alpha", value: alpha });
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter { name: "sigma", value: sigma });
        }
        Ok(Self { alpha, sigma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `(1 - e^{-ατ})/α`, continuous through `ατ → 0`.
    pub(crate) fn decay_integral(&self, tau: f64) -> f64 {
        let x = self.alpha * tau;
        if x.abs() < SMALL_ALPHA_TAU {
            tau * (1.0 - 0.5 * x)
        } else {
            -(-x).exp_m1() / self.alpha
        }
    }

    /// `σ_P(t, T)`.
    pub fn zc_vol(&self, t: f64, maturity: f64) -> Result<f64> {
        ordered(t, maturity)?;
        Ok(self.sigma * self.decay_integral(maturity - t))
    }

    /// `σ_P(t, T, U) = (σ/α)(e^{-α(T-t)} - e^{-α(U-t)})`.
    pub fn forward_zc_vol(&self, t: f64, expiry: f64, maturity: f64) -> Result<f64> {
        ordered(t, expiry)?;
        ordered(expiry, maturity)?;
        Ok(self.sigma * (-self.alpha * (expiry - t)).exp() * self.decay_integral(maturity - expiry))
    }

    /// `ξ(t, T, U) = σ_P(t,T)² - σ_P(t,T) σ_P(t,U) = -σ_P(t,T) σ_P(t,T,U)`.
    pub fn forward_zc_drift(&self, t: f64, expiry: f64, maturity: f64) -> Result<f64> {
        let short = self.zc_vol(t, expiry)?;
        Ok(-short * self.forward_zc_vol(t, expiry, maturity)?)
    }

    /// One log-Euler step of the forward zero-coupon bond with coefficients
    /// frozen at `t`.
    pub fn step_forward_zc(&self, p: f64, t: f64, dt: f64, expiry: f64, maturity: f64, z: f64) -> Result<f64> {
        let vol = self.forward_zc_vol(t, expiry, maturity)?;
        let drift = self.forward_zc_drift(t, expiry, maturity)?;
        Ok(lognormal_step(p, drift, vol, dt, z))
    }
}

/// `x · exp((μ - σ²/2)Δt + σ√Δt z)`.
#[inline]
pub(crate) fn lognormal_step(x: f64, drift: f64, vol: f64, dt: f64, z: f64) -> f64 {
    x * ((drift - 0.5 * vol * vol) * dt + vol * dt.sqrt() * z).exp()
}

fn ordered(start: f64, end: f64) -> Result<()> {
    if end >= start {
        Ok(())
    } else {
        Err(Error::InvalidInterval { start, end })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn hw() -> HullWhiteParams {
        HullWhiteParams::new(0.1, 0.01).unwrap()
    }

    #[test]
    fn zero_coupon_vol() {
        assert_eq!(hw().zc_vol(3.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(hw().zc_vol(0.0, 10.0).unwrap(), 0.01 * (1.0 - (-1.0f64).exp()) / 0.1, max_relative = 1e-14);
        assert_relative_eq!(hw().zc_vol(0.0, 10.0).unwrap(), 0.0632121, epsilon = 1e-7);
        let tiny = HullWhiteParams::new(1e-12, 0.01).unwrap();
        assert_relative_eq!(tiny.zc_vol(0.0, 5.0).unwrap(), 0.05, max_relative = 1e-11);
        assert!(matches!(hw().zc_vol(2.0, 1.0), Err(Error::InvalidInterval { .. })));
    }

    #[test]
    fn small_alpha_branch_is_continuous() {
        let tau = 5.0;
        let alpha = SMALL_ALPHA_TAU / tau;
        let below = HullWhiteParams::new(alpha * (1.0 - 1e-9), 0.01).unwrap().zc_vol(0.0, tau).unwrap();
        let above = HullWhiteParams::new(alpha * (1.0 + 1e-9), 0.01).unwrap().zc_vol(0.0, tau).unwrap();
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn forward_vol_is_difference_of_spot_vols() {
        assert_eq!(hw().forward_zc_vol(0.0, 1.0, 1.0).unwrap(), 0.0);
        let v = hw().forward_zc_vol(0.0, 1.0, 11.0).unwrap();
        assert_relative_eq!(v, 0.1 * ((-0.1f64).exp() - (-1.1f64).exp()), max_relative = 1e-14);
        assert_relative_eq!(v, 0.0571966, epsilon = 1e-7);
        for (t, e, m) in [(0.0, 1.0, 11.0), (0.5, 1.0, 1.5), (0.99, 1.0, 31.0)] {
            let diff = hw().zc_vol(t, m).unwrap() - hw().zc_vol(t, e).unwrap();
            assert!((hw().forward_zc_vol(t, e, m).unwrap() - diff).abs() < 1e-14);
        }
    }

    #[test]
    fn forward_drift() {
        let flat = HullWhiteParams::new(0.1, 0.0).unwrap();
        assert_eq!(flat.forward_zc_drift(0.0, 1.0, 11.0).unwrap(), 0.0);
        assert_eq!(hw().forward_zc_drift(0.0, 1.0, 1.0).unwrap(), 0.0);
        let s1 = hw().zc_vol(0.0, 1.0).unwrap();
        let s11 = hw().zc_vol(0.0, 11.0).unwrap();
        assert_relative_eq!(s1, 0.0095163, epsilon = 1e-7);
        assert_relative_eq!(s11, 0.0667129, epsilon = 1e-7);
        let xi = hw().forward_zc_drift(0.0, 1.0, 11.0).unwrap();
        assert_relative_eq!(xi, s1 * s1 - s1 * s11, max_relative = 1e-12);
        assert_relative_eq!(xi, -5.443e-4, epsilon = 1e-7);
    }

    #[test]
    fn degenerate_steps() {
        let flat = HullWhiteParams::new(0.1, 0.0).unwrap();
        assert_eq!(flat.step_forward_zc(0.9, 0.0, 1.0 / 365.0, 1.0, 11.0, 2.5).unwrap(), 0.9);
        assert_eq!(hw().step_forward_zc(0.9, 0.0, 0.0, 1.0, 11.0, 2.5).unwrap(), 0.9);
    }

    #[test]
    fn antithetic_geometric_mean() {
        let (p, dt) = (0.87, 0.25);
        let up = hw().step_forward_zc(p, 0.2, dt, 1.0, 11.0, 1.3).unwrap();
        let down = hw().step_forward_zc(p, 0.2, dt, 1.0, 11.0, -1.3).unwrap();
        let xi = hw().forward_zc_drift(0.2, 1.0, 11.0).unwrap();
        let v = hw().forward_zc_vol(0.2, 1.0, 11.0).unwrap();
        assert_relative_eq!((up * down).sqrt(), p * ((xi - 0.5 * v * v) * dt).exp(), max_relative = 1e-15);
    }

    #[test]
    fn step_mean_matches_drift() {
        // Large step so the drift dominates the rounding; E[P_next] = P e^{ξΔt}.
        let big = HullWhiteParams::new(0.1, 0.2).unwrap();
        let (p, dt) = (1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let draws: std::vec::Vec<f64> = (0..n)
            .map(|_| big.step_forward_zc(p, 0.0, dt, 1.0, 11.0, StandardNormal.sample(&mut rng)).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let expected = p * (big.forward_zc_drift(0.0, 1.0, 11.0).unwrap() * dt).exp();
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} expected {expected} se {se}");
    }
}
