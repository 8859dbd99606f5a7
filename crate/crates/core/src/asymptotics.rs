//! Closed-form implied-volatility limits and the extended Roper–Rutkowski
//! estimator.
//!
//! As `T -> 0` the MMM implied volatility tends to
//! `sqrt(alpha) ln(S/K) / (2 (sqrt(S) - sqrt(K)))`, with value
//! `sqrt(alpha/S)` at the money, and is unaffected by the interest rate. As
//! `T -> inf` it tends to `sqrt(2 (3 - 2 sqrt 2)(r + eta))` for every strike.

use alloc::vec::Vec;

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::implied_vol::implied_vol_mmm;
use crate::mmm::{call_price, is_at_the_money, log_call_excess, zcb_price, ModelParams};

pub use crate::mmm::ATM_LOG_MONEYNESS_TOL;

const SQRT_TAU: f64 = 2.506_628_274_631_000_5;

/// Small-time limit of the implied volatility for strike `K`.
///
/// Written as `sqrt(alpha/S) u / (e^u - 1)` with `u = ln(K/S) / 2`, which is
/// the same expression but continuous through `K = S`.
pub fn small_time_limit(params: &ModelParams, strike: f64) -> Result<f64> {
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(invalid("K", "strike must be positive and finite"));
    }
    let atm = (params.alpha / params.spot).sqrt();
    let u = 0.5 * (strike / params.spot).ln();
    if u == 0.0 {
        return Ok(atm);
    }
    Ok(atm * u / u.exp_m1())
}

/// Large-time limit `sqrt(2 (3 - 2 sqrt 2)(r + eta))`.
pub fn large_time_limit(params: &ModelParams) -> f64 {
    (2.0 * (3.0 - 2.0 * core::f64::consts::SQRT_2) * (params.rate + params.eta)).sqrt()
}

/// Extended Roper–Rutkowski estimate of the implied volatility from a call
/// price at a finite expiry.
///
/// At the money it is `sqrt(2 pi) C / (K sqrt(T))`; otherwise
/// `|ln(S/K)| / sqrt(-2 T ln(C - (S e^{-kappa T} - K Z)_+))`. Pass
/// `log_excess` when the excess is below the floating-point range.
pub fn rr_estimate(
    spot: f64,
    dividend_yield: f64,
    bond: f64,
    call: f64,
    strike: f64,
    expiry: f64,
    log_excess: Option<f64>,
) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0) {
        return Err(invalid("S/K", "must be positive"));
    }
    if !(expiry > 0.0) {
        return Err(invalid("T", "expiry must be positive"));
    }
    if !(bond > 0.0 && bond <= 1.0) {
        return Err(invalid("bond", "must lie in (0, 1]"));
    }
    if !(call >= 0.0) {
        return Err(invalid("call", "must be nonnegative"));
    }
    if is_at_the_money(spot, strike) {
        return Ok(SQRT_TAU * call / (strike * expiry.sqrt()));
    }
    let ln_excess = match log_excess {
        Some(v) => v,
        None => {
            let intrinsic = (spot * (-dividend_yield * expiry).exp() - strike * bond).max(0.0);
            let excess = call - intrinsic;
            if !(excess > 0.0) {
                return Err(Error::NonPositiveExcess);
            }
            excess.ln()
        }
    };
    if ln_excess.is_nan() || ln_excess == f64::NEG_INFINITY {
        return Err(Error::NonPositiveExcess);
    }
    if ln_excess >= 0.0 {
        return Err(Error::NegativeRadicand {
            excess: ln_excess.exp(),
        });
    }
    Ok((spot / strike).ln().abs() / (-2.0 * expiry * ln_excess).sqrt())
}

/// [`rr_estimate`] on MMM prices, with the excess taken in log space.
pub fn rr_estimate_mmm(params: &ModelParams, strike: f64, expiry: f64) -> Result<f64> {
    let bond = zcb_price(params, expiry)?;
    if is_at_the_money(params.spot, strike) {
        let call = call_price(params, strike, expiry)?;
        return rr_estimate(params.spot, 0.0, bond, call, strike, expiry, None);
    }
    let ln_excess = log_call_excess(params, strike, expiry)?;
    // The call itself is only used by the ATM branch.
    rr_estimate(params.spot, 0.0, bond, 0.0, strike, expiry, Some(ln_excess))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub expiry: f64,
    pub iv: Result<f64>,
    pub rr: Result<f64>,
}

/// Implied volatility and Roper–Rutkowski estimate at one expiry.
pub fn limit_row(params: &ModelParams, strike: f64, expiry: f64) -> LimitRow {
    LimitRow {
        expiry,
        iv: implied_vol_mmm(params, strike, expiry).map(|r| r.vol),
        rr: rr_estimate_mmm(params, strike, expiry),
    }
}

/// Convergence of the numerical implied volatility towards both limits.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub strike: f64,
    pub limit_small: f64,
    pub limit_large: f64,
    /// Rows in the order of the small-time grid (decreasing expiries).
    pub small: Vec<LimitRow>,
    /// Rows in the order of the large-time grid (increasing expiries).
    pub large: Vec<LimitRow>,
}

impl LimitReport {
    /// `|iv - limit_small|` strictly decreases along the small-time grid.
    pub fn small_iv_converges(&self) -> bool {
        strictly_decreasing(self.small.iter().map(|r| r.iv.clone()), self.limit_small)
    }

    /// `|rr - limit_small|` strictly decreases along the small-time grid.
    pub fn small_rr_converges(&self) -> bool {
        strictly_decreasing(self.small.iter().map(|r| r.rr.clone()), self.limit_small)
    }

    /// `|iv - limit_large|` strictly decreases along the large-time grid.
    pub fn large_iv_converges(&self) -> bool {
        strictly_decreasing(self.large.iter().map(|r| r.iv.clone()), self.limit_large)
    }
}

/// A failed row breaks monotonicity.
fn strictly_decreasing<I: Iterator<Item = Result<f64>>>(values: I, limit: f64) -> bool {
    let mut prev = f64::INFINITY;
    for v in values {
        match v {
            Ok(v) => {
                let err = (v - limit).abs();
                if !(err < prev) {
                    return false;
                }
                prev = err;
            }
            Err(_) => return false,
        }
    }
    true
}

/// Tabulates both limits against the numerical implied volatility and the
/// Roper–Rutkowski estimate. `small_grid` must decrease towards zero and
/// `large_grid` increase; failing rows are kept as data.
pub fn convergence_report(
    params: &ModelParams,
    strike: f64,
    small_grid: &[f64],
    large_grid: &[f64],
) -> Result<LimitReport> {
    if small_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("small_grid", "must be strictly decreasing"));
    }
    if large_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("large_grid", "must be strictly increasing"));
    }
    Ok(LimitReport {
        strike,
        limit_small: small_time_limit(params, strike)?,
        limit_large: large_time_limit(params),
        small: small_grid
            .iter()
            .map(|&t| limit_row(params, strike, t))
            .collect(),
        large: large_grid
            .iter()
            .map(|&t| limit_row(params, strike, t))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: ModelParams = ModelParams::SP500_2009_01_27;

    #[test]
    fn small_time_limit_values() {
        let atm = small_time_limit(&P, P.spot).unwrap();
        assert!((atm - 0.17831).abs() < 1e-5);
        let p = ModelParams::new(3.0, 0.01, 12.0, 0.1).unwrap();
        let v = small_time_limit(&p, 12.0).unwrap();
        assert!((v - 2.0 * core::f64::consts::LN_2).abs() < 1e-15);
        // Literal closed form away from the money.
        for k in [0.5 * P.spot, 0.9 * P.spot, 1.3 * P.spot, 3.0 * P.spot] {
            let literal = P.alpha.sqrt() * (P.spot / k).ln() / (2.0 * (P.spot.sqrt() - k.sqrt()));
            let v = small_time_limit(&P, k).unwrap();
            assert!((v - literal).abs() < 1e-14 * literal);
        }
    }

    #[test]
    fn small_time_limit_is_smooth_at_the_money() {
        let atm = (P.alpha / P.spot).sqrt();
        for h in [1e-10, -1e-10] {
            let v = small_time_limit(&P, P.spot * (1.0 + h)).unwrap();
            assert!((v - atm).abs() <= 1e-8 * atm);
        }
        let h = 1e-4;
        let sum = small_time_limit(&P, P.spot * (1.0 + h)).unwrap()
            + small_time_limit(&P, P.spot * (1.0 - h)).unwrap();
        assert!((sum / (2.0 * atm) - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn small_time_limit_ignores_the_rate() {
        let shifted = ModelParams {
            rate: P.rate + 0.05,
            ..P
        };
        for k in [0.5, 0.8, 1.0, 1.25, 2.0] {
            let k = k * P.spot;
            assert_eq!(
                small_time_limit(&P, k).unwrap().to_bits(),
                small_time_limit(&shifted, k).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn large_time_limit_values() {
        assert!((large_time_limit(&P) - 0.17672).abs() < 1e-5);
        let c = 3.0 - 2.0 * core::f64::consts::SQRT_2;
        let unit = ModelParams {
            rate: 0.0,
            eta: 1.0 / (2.0 * c),
            ..P
        };
        assert!((large_time_limit(&unit) - 1.0).abs() < 1e-15);
        let doubled = ModelParams {
            rate: 2.0 * P.rate,
            eta: 2.0 * P.eta,
            ..P
        };
        assert!(
            (large_time_limit(&doubled) / large_time_limit(&P) - core::f64::consts::SQRT_2).abs()
                < 1e-15
        );
        assert!(large_time_limit(&P) < (2.0 * (P.rate + P.eta)).sqrt());
    }

    #[test]
    fn rr_reduces_to_the_plain_formula() {
        let (s, k, t, c) = (100.0, 110.0, 0.01, 0.05);
        let plain = (s / k).ln().abs() / (-2.0 * t * c.ln()).sqrt();
        assert_eq!(rr_estimate(s, 0.0, 1.0, c, k, t, None).unwrap(), plain);
        let atm = rr_estimate(s, 0.0, 1.0, 0.4, s, t, None).unwrap();
        assert!((atm - SQRT_TAU * 0.4 / (s * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn rr_errors() {
        assert_eq!(
            rr_estimate(100.0, 0.0, 1.0, 10.0, 90.0, 0.01, None),
            Err(Error::NonPositiveExcess)
        );
        assert!(matches!(
            rr_estimate(100.0, 0.0, 1.0, 5.0, 110.0, 1.0, None),
            Err(Error::NegativeRadicand { .. })
        ));
        assert_eq!(
            rr_estimate(100.0, 0.0, 1.0, 0.0, 110.0, 1.0, Some(f64::NEG_INFINITY)),
            Err(Error::NonPositiveExcess)
        );
    }

    #[test]
    fn rr_log_path_matches_direct_path() {
        let (k, t) = (1.2 * P.spot, 0.01);
        let z = zcb_price(&P, t).unwrap();
        let c = call_price(&P, k, t).unwrap();
        let direct = rr_estimate(P.spot, 0.0, z, c, k, t, None).unwrap();
        assert!((rr_estimate_mmm(&P, k, t).unwrap() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn rr_atm_approaches_the_limit() {
        let atm = (P.alpha / P.spot).sqrt();
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&t| (rr_estimate_mmm(&P, P.spot, t).unwrap() - atm).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn rr_otm_trend() {
        let k = 1.2 * P.spot;
        let limit = small_time_limit(&P, k).unwrap();
        let errs: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&t| (rr_estimate_mmm(&P, k, t).unwrap() - limit).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    // The two branches cannot agree here: at |ln(K/S)| = 1.5e-9 the
    // non-ATM branch returns |ln(S/K)| / sqrt(-2T ln C) ~ 1e-6 while the ATM
    // branch gives ~0.178, because the numerator vanishes with ln(K/S) and
    // the denominator does not. Kept as written so the gap stays visible.
    #[test]
    #[ignore = "seam agreement is mathematically unattainable; see comment"]
    fn rr_branches_agree_at_the_seam() {
        let t = 1e-4;
        let z = zcb_price(&P, t).unwrap();
        for factor in [0.5, 1.5] {
            let k = P.spot * (ATM_LOG_MONEYNESS_TOL * factor).exp();
            let c = call_price(&P, k, t).unwrap();
            let atm = SQRT_TAU * c / (k * t.sqrt());
            let via_rr = rr_estimate(P.spot, 0.0, z, c, k, t, None).unwrap();
            assert!((via_rr - atm).abs() < 0.05 * atm, "{via_rr} vs {atm}");
        }
    }

    #[test]
    fn report_flags() {
        let report = convergence_report(
            &P,
            P.spot,
            &[1e-2, 1e-3, 1e-4],
            &[50.0, 100.0, 200.0, 400.0],
        )
        .unwrap();
        assert!(report.small_iv_converges());
        assert!(report.small_rr_converges());
        assert!(report.large_iv_converges());
        assert!(report.large.iter().all(|r| r.iv.is_ok()));
        assert!(convergence_report(&P, P.spot, &[1e-4, 1e-2], &[]).is_err());
    }

    #[test]
    fn high_strike_crosses_the_large_time_limit() {
        // At K = 2S the implied volatility dips below the limit near T = 100
        // and approaches it from above afterwards, so the error is not monotone.
        let report =
            convergence_report(&P, 2.0 * P.spot, &[], &[50.0, 100.0, 200.0, 400.0]).unwrap();
        let signed: Vec<f64> = report
            .large
            .iter()
            .map(|r| r.iv.clone().unwrap() - report.limit_large)
            .collect();
        assert!(signed[0] > 0.0 && signed[1] < 0.0 && signed[2] > 0.0);
        assert!(!report.large_iv_converges());
        let rr_small = convergence_report(&P, 2.0 * P.spot, &[], &[50.0]).unwrap();
        assert!(matches!(
            rr_small.large[0].rr,
            Err(Error::NegativeRadicand { .. })
        ));
    }
}
