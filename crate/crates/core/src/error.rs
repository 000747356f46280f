use alloc::boxed::Box;

/// Errors raised by the pricing library.
///
/// Variants split into two families, see [`Error::is_validation`]: bad inputs
/// (rejected before any numerics run) and numerical failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("end date precedes start date")]
    InvalidDateOrder,
    #[error("time {t} lies beyond the last curve pillar {last}")]
    ExtrapolationNotAllowed { t: f64, last: f64 },
    #[error("invalid interval [{start}, {end}]")]
    InvalidInterval { start: f64, end: f64 },
    #[error("tenor must be positive, got {0}")]
    InvalidTenor(f64),
    #[error("invalid curve: {0}")]
    InvalidCurve(&'static str),
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("bond quotes must be sorted by strictly increasing maturity (quote {index})")]
    UnsortedQuotes { index: usize },
    #[error("quote maturing at {maturity} is priced above its risk-free value")]
    NegativeHazardImplied { maturity: f64 },
    #[error("hazard stripping failed for the quote maturing at {maturity}")]
    StrippingFailed { maturity: f64 },
    #[error("yield {x} is outside the domain of the price function")]
    DomainError { x: f64 },
    #[error("price {price} is outside the attainable range of the price function")]
    InversionRangeError { price: f64 },
    #[error("root finder did not converge in {iterations} iterations")]
    ConvergenceError { iterations: usize },
    #[error("degenerate curve: coupon annuity is not positive")]
    DegenerateCurve,
    #[error("hazard recursion denominator vanished")]
    DegenerateDenominator,
    #[error("forward bond value {value} is not positive")]
    DegenerateBond { value: f64 },
    #[error("yield volatility undefined at y = {y}")]
    DegenerateYield { y: f64 },
    #[error("need at least 2 samples, got {n}")]
    InsufficientSamples { n: usize },
    #[error("option price {price} outside no-arbitrage bounds ({lower}, {upper})")]
    NoArbitrageViolation { price: f64, lower: f64, upper: f64 },
    #[error("path {index}: {source}")]
    Path { index: u64, source: Box<Error> },
}

impl Error {
    /// True for input-validation failures, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidDateOrder
            | Error::ExtrapolationNotAllowed { .. }
            | Error::InvalidInterval { .. }
            | Error::InvalidTenor(_)
            | Error::InvalidCurve(_)
            | Error::InvalidParameter { .. }
            | Error::UnsortedQuotes { .. }
            | Error::DomainError { .. } => true,
            Error::Path { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn on_path(self, index: u64) -> Self {
        Error::Path { index, source: Box::new(self) }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

/// Rejects NaN and infinities for a named parameter.
pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}
