//! Per-path evolution of the forward hazard rate.
//!
//! The hazard rate is taken flat in maturity, `λ(t,T,U) = λ(t,T)`, so the
//! forward survival probability is `S(t,T,U) = e^{-(U-T)λ(t,T)}`. Requiring
//! the forward bond to be driftless and replacing `∂λ/∂t` by a central
//! difference gives a two-level recursion
//!
//! ```text
//! λ(t_{j+1}) = Φ(t_{j-1}, t_j) / Ψ(t_j)
//! ```
//!
//! where `Φ` and `Ψ` are sums of a principal term, a coupon term and a
//! recovery integral over the forward zero-coupon curve `P(t_j, T, u)`.
//! The recovery integral runs on the trapezoid nodes of [`FwdZcSnapshot`].

use alloc::vec::Vec;

use crate::bondmath::{quadrature_nodes, BondSpec};
use crate::curves::DiscountCurve;
use crate::error::{Error, Result};
use crate::hullwhite::{lognormal_step, HullWhiteParams};

/// Upper clamp on the evolved intensity.
pub const LAMBDA_CAP: f64 = 10.0;

/// Two grid offsets closer than this are the same node.
const NODE_MERGE_TOLERANCE: f64 = 1e-9;

/// How the level before the first step, `λ(t_{-1}, T)`, is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// `λ(t_{-1}) = 0`. The recursion then alternates between two decoupled
    /// sequences.
    PaperExact,
    /// `λ(t_{-1}) = λ(t_0)`.
    #[default]
    Stabilized,
}

/// The two levels carried by the leapfrog recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardState {
    /// `λ(t_{j-1}, T)`.
    pub lambda_prev: f64,
    /// `λ(t_j, T)`.
    pub lambda_curr: f64,
    pub init_mode: InitMode,
}

impl HazardState {
    pub fn new(lambda0: f64, init_mode: InitMode) -> Self {
        let lambda_prev = match init_mode {
            InitMode::PaperExact => 0.0,
            InitMode::Stabilized => lambda0,
        };
        Self { lambda_prev, lambda_curr: lambda0, init_mode }
    }
}

/// Outcome of one recursion step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardStep {
    pub state: HazardState,
    /// `Φ/Ψ` fell outside `[0, LAMBDA_CAP]` and was clamped.
    pub clamped: bool,
}

/// Forward zero-coupon bonds `P(t, T, u)` for `u ∈ [T, T+θ]` together with
/// their drift `ξ(t,T,u)` and volatility `σ_P(t,T,u)` at the snapshot time.
///
/// Nodes are the coupon dates plus, when a recovery integral is needed, the
/// quadrature grid. Node 0 is `u = T` and the last node is `u = T + θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FwdZcSnapshot {
    expiry: f64,
    time: f64,
    offsets: Vec<f64>,
    values: Vec<f64>,
    vols: Vec<f64>,
    drifts: Vec<f64>,
    /// `(1 - e^{-α(u-T)})/α`; the time-independent factor of `σ_P(t,T,u)`.
    decay: Vec<f64>,
    coupon_nodes: Vec<usize>,
    quad_weights: Vec<f64>,
}

impl FwdZcSnapshot {
    /// Grid for `spec` with unit values and zero coefficients. `quad_step` adds
    /// the recovery-integral nodes; pass `None` when the recovery is zero.
    pub fn new(spec: &BondSpec, expiry: f64, quad_step: Option<f64>) -> Result<Self> {
        spec.validate()?;
        if !(expiry >= 0.0) || !expiry.is_finite() {
            return Err(Error::InvalidParameter { name: "expiry", value: expiry });
        }
        let coupons = spec.coupon_offsets();
        let mut offsets: Vec<f64> = match quad_step {
            Some(step) => {
                if !(step > 0.0) || !step.is_finite() {
                    return Err(Error::InvalidParameter { name: "quad_step", value: step });
                }
                quadrature_nodes(0.0, spec.theta, step)
            }
            None => alloc::vec![0.0],
        };
        offsets.extend_from_slice(&coupons);
        offsets.sort_by(|a, b| a.total_cmp(b));
        // Merge near-duplicates, keeping the exact coupon offset.
        let mut merged: Vec<f64> = Vec::with_capacity(offsets.len());
        for x in offsets {
            match merged.last_mut() {
                Some(last) if (x - *last).abs() < NODE_MERGE_TOLERANCE => {
                    if coupons.contains(&x) {
                        *last = x;
                    }
                }
                _ => merged.push(x),
            }
        }
        let coupon_nodes = coupons
            .iter()
            .map(|c| merged.iter().position(|x| x == c).expect("coupon offset is a node"))
            .collect();
        let quad_weights = if quad_step.is_some() { trapezoid_weights(&merged) } else { Vec::new() };
        let n = merged.len();
        Ok(Self {
            expiry,
            time: 0.0,
            offsets: merged,
            values: alloc::vec![1.0; n],
            vols: alloc::vec![0.0; n],
            drifts: alloc::vec![0.0; n],
            decay: alloc::vec![0.0; n],
            coupon_nodes,
            quad_weights,
        })
    }

    /// Snapshot at time 0 seeded from today's discount curve,
    /// `P(0,T,u) = DF(0,u)/DF(0,T)`, with Hull–White coefficients.
    pub fn from_curve(
        dc: &DiscountCurve,
        hw: &HullWhiteParams,
        spec: &BondSpec,
        expiry: f64,
        quad_step: Option<f64>,
    ) -> Result<Self> {
        let mut snap = Self::new(spec, expiry, quad_step)?;
        for (value, &off) in snap.values.iter_mut().zip(&snap.offsets) {
            *value = dc.forward_df(expiry, expiry + off)?;
        }
        snap.decay = snap.offsets.iter().map(|&off| hw.decay_integral(off)).collect();
        snap.refresh(hw, 0.0)?;
        Ok(snap)
    }

    /// Replaces the forward zero-coupon values.
    pub fn with_values(mut self, values: &[f64]) -> Result<Self> {
        if values.len() != self.values.len() || values.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter { name: "forward_zc", value: f64::NAN });
        }
        self.values.copy_from_slice(values);
        Ok(self)
    }

    /// Replaces drift and volatility with constant per-node values.
    pub fn with_coefficients(mut self, drifts: &[f64], vols: &[f64]) -> Result<Self> {
        if drifts.len() != self.offsets.len() || vols.len() != self.offsets.len() {
            return Err(Error::InvalidParameter { name: "coefficients", value: f64::NAN });
        }
        self.drifts.copy_from_slice(drifts);
        self.vols.copy_from_slice(vols);
        Ok(self)
    }

    /// Recomputes `ξ(t,T,u)` and `σ_P(t,T,u)` at time `t`.
    pub fn refresh(&mut self, hw: &HullWhiteParams, t: f64) -> Result<()> {
        if t > self.expiry + 1e-12 || t < 0.0 {
            return Err(Error::InvalidInterval { start: t, end: self.expiry });
        }
        let t = t.min(self.expiry);
        if self.decay.len() != self.offsets.len() || self.decay.iter().all(|&d| d == 0.0) {
            self.decay = self.offsets.iter().map(|&off| hw.decay_integral(off)).collect();
        }
        let level = hw.sigma() * (-hw.alpha() * (self.expiry - t)).exp();
        let short = hw.sigma() * hw.decay_integral(self.expiry - t);
        for ((vol, drift), &decay) in self.vols.iter_mut().zip(self.drifts.iter_mut()).zip(&self.decay) {
            *vol = level * decay;
            *drift = -short * *vol;
        }
        self.time = t;
        Ok(())
    }

    /// Moves every forward zero-coupon bond across `[t, t+dt]` with the same
    /// normal draw `z`, coefficients frozen at `t`, then refreshes them.
    pub fn diffuse(&mut self, hw: &HullWhiteParams, dt: f64, z: f64) -> Result<()> {
        for ((p, &drift), &vol) in self.values.iter_mut().zip(&self.drifts).zip(&self.vols) {
            *p = lognormal_step(*p, drift, vol, dt, z);
        }
        self.refresh(hw, self.time + dt)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    /// Node offsets `u - T`.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// `P(t, T, u)` per node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vols(&self) -> &[f64] {
        &self.vols
    }

    pub fn drifts(&self) -> &[f64] {
        &self.drifts
    }

    /// Node indices of the coupon dates `T_i`.
    pub fn coupon_nodes(&self) -> &[usize] {
        &self.coupon_nodes
    }

    /// Trapezoid weights of the recovery integral; empty without a quadrature grid.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub(crate) fn principal_node(&self) -> usize {
        self.offsets.len() - 1
    }
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = alloc::vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (nodes[k + 1] - nodes[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// `e^{-(u-T)λ} P(t,T,u)` for every node.
pub(crate) fn survival_weights(snap: &FwdZcSnapshot, lambda: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(snap.offsets.iter().zip(&snap.values).map(|(&off, &p)| (-off * lambda).exp() * p));
}

/// Recovery integral `Σ_k q_k g(k) w_k` over the quadrature nodes.
fn recovery_sum(snap: &FwdZcSnapshot, weights: &[f64], integrand: impl Fn(usize) -> f64) -> f64 {
    snap.quad_weights.iter().enumerate().map(|(k, &q)| q * integrand(k) * weights[k]).sum()
}

pub(crate) fn phi_with(
    weights: &[f64],
    state: &HazardState,
    snap: &FwdZcSnapshot,
    recovery: f64,
    coupon: f64,
    dt: f64,
) -> f64 {
    let (prev, curr) = (state.lambda_prev, state.lambda_curr);
    let top = snap.principal_node();
    let principal = (0.5 * snap.offsets[top] * prev + dt * snap.drifts[top]) * weights[top];
    let coupons: f64 = snap
        .coupon_nodes
        .iter()
        .map(|&i| (0.5 * snap.offsets[i] * prev + dt * snap.drifts[i]) * weights[i])
        .sum();
    let mut phi = principal + coupon * coupons;
    if recovery != 0.0 {
        phi += recovery
            * recovery_sum(snap, weights, |k| {
                curr * (0.5 * snap.offsets[k] * prev + dt * snap.drifts[k]) - 0.5 * prev
            });
    }
    phi
}

pub(crate) fn psi_with(weights: &[f64], state: &HazardState, snap: &FwdZcSnapshot, recovery: f64, coupon: f64) -> f64 {
    let curr = state.lambda_curr;
    let top = snap.principal_node();
    let principal = 0.5 * snap.offsets[top] * weights[top];
    let coupons: f64 = snap.coupon_nodes.iter().map(|&i| 0.5 * snap.offsets[i] * weights[i]).sum();
    let mut psi = principal + coupon * coupons;
    if recovery != 0.0 {
        psi += 0.5 * recovery * recovery_sum(snap, weights, |k| 1.0 + snap.offsets[k] * curr);
    }
    psi
}

pub(crate) fn step_hazard_with(
    weights: &[f64],
    state: &HazardState,
    snap: &FwdZcSnapshot,
    recovery: f64,
    coupon: f64,
    dt: f64,
) -> Result<HazardStep> {
    let psi = psi_with(weights, state, snap, recovery, coupon);
    if !(psi.abs() >= 1e-300) {
        return Err(Error::DegenerateDenominator);
    }
    let ratio = phi_with(weights, state, snap, recovery, coupon, dt) / psi;
    if ratio.is_nan() {
        return Err(Error::DegenerateDenominator);
    }
    let next = ratio.clamp(0.0, LAMBDA_CAP);
    Ok(HazardStep {
        state: HazardState { lambda_prev: state.lambda_curr, lambda_curr: next, init_mode: state.init_mode },
        clamped: next != ratio,
    })
}

fn checked_inputs(spec: &BondSpec, y_proxy: f64, dt: Option<f64>) -> Result<f64> {
    if let Some(dt) = dt {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter { name: "dt", value: dt });
        }
    }
    spec.per_period_coupon(y_proxy)
}

/// `Φ(t_{j-1}, t_j, T)`: numerator of the recursion.
pub fn phi(state: &HazardState, snap: &FwdZcSnapshot, spec: &BondSpec, y_proxy: f64, dt: f64) -> Result<f64> {
    let coupon = checked_inputs(spec, y_proxy, Some(dt))?;
    let mut weights = Vec::new();
    survival_weights(snap, state.lambda_curr, &mut weights);
    Ok(phi_with(&weights, state, snap, spec.recovery, coupon, dt))
}

/// `Ψ(t_j, T)`: denominator of the recursion.
pub fn psi(state: &HazardState, snap: &FwdZcSnapshot, spec: &BondSpec, y_proxy: f64) -> Result<f64> {
    let coupon = checked_inputs(spec, y_proxy, None)?;
    let mut weights = Vec::new();
    survival_weights(snap, state.lambda_curr, &mut weights);
    Ok(psi_with(&weights, state, snap, spec.recovery, coupon))
}

/// Advances the recursion one level: `λ_next = clamp(Φ/Ψ, 0, LAMBDA_CAP)`.
pub fn step_hazard(
    state: &HazardState,
    snap: &FwdZcSnapshot,
    spec: &BondSpec,
    y_proxy: f64,
    dt: f64,
) -> Result<HazardStep> {
    let coupon = checked_inputs(spec, y_proxy, Some(dt))?;
    let mut weights = Vec::new();
    survival_weights(snap, state.lambda_curr, &mut weights);
    step_hazard_with(&weights, state, snap, spec.recovery, coupon, dt)
}

/// `S(t,T,U) = e^{-(U-T)λ}`.
pub fn survival_from_lambda(lambda: f64, expiry: f64, maturity: f64) -> Result<f64> {
    if maturity < expiry {
        return Err(Error::InvalidInterval { start: expiry, end: maturity });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter { name: "lambda", value: lambda });
    }
    Ok((-(maturity - expiry) * lambda).exp())
}
