//! Monte Carlo pricing of derivatives on Constant Maturity Treasury (CMT)
//! rates and forward bonds.
//!
//! The forward yield to maturity `y(t, T)` of a constant-tenor bond is
//! diffused directly. Its volatility is not an input: it is computed at every
//! time step from the volatility of the forward bond, which in turn comes from
//! the forward zero-coupon volatilities of a one-factor Hull–White model and a
//! deterministic hazard rate that is evolved along each path so that the
//! forward bond stays driftless.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration, the
//! parallel path loop and the command line live in the `cmt-cli` crate.
//!
//! Module map:
//!
//! * [`curves`]: discount and hazard term structures, bond-quote stripping.
//! * [`bondmath`]: the price/yield transfer function, CMT conversion, the
//!   recovery integral and the initial forward yield.
//! * [`hullwhite`]: zero-coupon volatilities and forward zero-coupon dynamics.
//! * [`hazard`]: the per-path leapfrog recursion for the hazard rate.
//! * [`engine`]: path simulation, payoffs and statistics.
//! * [`blackvol`]: Black-76 pricing and implied volatility inversion.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod blackvol;
pub mod bondmath;
pub mod curves;
pub mod engine;
mod error;
pub mod hazard;
pub mod hullwhite;

pub use error::{Error, Result};
