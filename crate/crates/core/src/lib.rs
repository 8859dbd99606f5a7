//! Option pricing under the minimal market model (MMM).
//!
//! The discounted index is a time-changed squared Bessel process of
//! dimension four, so European prices reduce to noncentral chi-square
//! tails. This crate evaluates those prices, inverts them to Black–Scholes
//! implied volatilities, and exposes the closed-form small-time and
//! large-time implied-volatility limits together with the model-free
//! Roper–Rutkowski small-time estimator.
//!
//! The crate is `no_std` and only needs `alloc` (for grids and the adaptive
//! quadrature work list). IO, configuration and threading live in the
//! `mmm-cli` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod blackscholes;
mod error;
pub mod implied_vol;
pub mod mmm;
pub mod oracle;
pub mod quad;
pub mod specfun;
pub mod surface;

pub use asymptotics::{
    convergence_report, large_time_limit, rr_estimate, rr_estimate_mmm, small_time_limit,
    LimitReport, LimitRow, ATM_LOG_MONEYNESS_TOL,
};
pub use blackscholes::{bs_call, bs_call_mmm, bs_d1_d2, bs_put, bs_put_mmm, bs_vega, BsContext};
pub use error::{Bound, Error, Result};
pub use implied_vol::{implied_vol, implied_vol_mmm, IvResult};
pub use mmm::{
    call_price, call_theta, call_theta2, coordinates, is_at_the_money, log_call_excess, phi,
    put_price, yield_to_maturity, zcb_price, zcb_theta, Coordinates, ModelParams, OptionKind,
    OptionQuote, PhiValues,
};
pub use oracle::{finite_diff, mc_call_price, sample_terminal, DiffOrder, McEstimate};
pub use specfun::{
    bessel_i, bessel_i_scaled, ncx2_ccdf, ncx2_cdf, ncx2_cdf_oracle, ncx2_ln_ccdf, ncx2_pdf,
    norm_cdf, norm_inv, norm_pdf, ChiSquareArgs,
};
pub use surface::SurfaceGrid;
