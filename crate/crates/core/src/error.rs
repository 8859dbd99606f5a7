use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which no-arbitrage bound a target price violates or sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Lower => f.write_str("lower"),
            Bound::Upper => f.write_str("upper"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("result overflows the floating-point range")]
    Overflow,
    #[error("no convergence after {evaluations} evaluations")]
    NonConvergence { evaluations: usize },
    #[error("expiry {expiry:e} is below the degenerate-expiry threshold")]
    DegenerateExpiry { expiry: f64 },
    #[error("expiry {expiry:e} exceeds the cap {cap:e} (e^(eta T) overflow guard)")]
    ExpiryTooLarge { expiry: f64, cap: f64 },
    #[error("target price {price:e} violates the {bound} arbitrage bound {limit:e}")]
    OutOfBounds {
        bound: Bound,
        price: f64,
        limit: f64,
    },
    #[error("target price sits on the {bound} arbitrage bound (implied volatility is {})",
        if matches!(bound, Bound::Lower) { "0" } else { "infinite" })]
    AtBound { bound: Bound },
    #[error("volatility must be positive")]
    ZeroVolatility,
    #[error("call price does not exceed its intrinsic value at this precision")]
    NonPositiveExcess,
    #[error(
        "intrinsic excess {excess:e} is not below one; expiry is outside the small-time regime"
    )]
    NegativeRadicand { excess: f64 },
    #[error("strike is at the money; use the at-the-money branch")]
    AtTheMoney,
}

impl Error {
    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Overflow => "overflow",
            Error::NonConvergence { .. } => "non-convergence",
            Error::DegenerateExpiry { .. } => "degenerate-expiry",
            Error::ExpiryTooLarge { .. } => "expiry-too-large",
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::AtBound { .. } => "at-bound",
            Error::ZeroVolatility => "zero-volatility",
            Error::NonPositiveExcess => "nonpositive-excess",
            Error::NegativeRadicand { .. } => "negative-radicand",
            Error::AtTheMoney => "at-the-money",
        }
    }
}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
