//! Closed-form MMM prices at valuation time zero.
//!
//! With `phi(T) = alpha/(4 eta) (e^{eta T} - 1)`, `x = S/phi` and
//! `y = K e^{-rT}/phi`, the benchmarked call is
//! `C = S tilde chi^2(y;4,x) - K e^{-rT} tilde chi^2(y;0,x)`, the put and
//! zero-coupon bond follow, and put–call parity reads `C + K Z = P + S`.
//!
//! Prices are evaluated from nonnegative Poisson-mixture sums (see
//! `specfun::ncx2`), so both the call and the put keep relative accuracy
//! far into their tails. Whichever side is in the money is obtained from
//! the other through parity, which also makes the arbitrage bounds hold
//! exactly in floating point.

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

use crate::error::{invalid, Bound, Error, Result};
use crate::quad;
use crate::specfun::ncx2::{call_fraction, ln_pdf, pdf, put_fraction, tail_scale, upper_tail};

/// Expiries at or below this are priced at their payoff.
pub const DEGENERATE_EXPIRY: f64 = 1e-12;
/// Lower end of the accuracy domain of [`call_theta2`].
pub const THETA2_MIN_EXPIRY: f64 = 1e-8;
/// `eta * T` is capped here to keep `e^{eta T}` in range.
pub const MAX_GROWTH_EXPONENT: f64 = 650.0;
/// `|ln(K/S)| <= ATM_LOG_MONEYNESS_TOL` counts as at the money.
pub const ATM_LOG_MONEYNESS_TOL: f64 = 1e-9;

pub fn is_at_the_money(spot: f64, strike: f64) -> bool {
    (strike / spot).ln().abs() <= ATM_LOG_MONEYNESS_TOL
}

/// MMM parameters: index level `S`, short rate `r`, GOP scale `alpha` and
/// net growth rate `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub spot: f64,
    pub rate: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl ModelParams {
    /// SP500 total return index calibration of 27 January 2009.
    pub const SP500_2009_01_27: ModelParams = ModelParams {
        spot: 1362.18,
        rate: 0.0011154,
        alpha: 43.307,
        eta: 0.089896,
    };

    pub fn new(spot: f64, rate: f64, alpha: f64, eta: f64) -> Result<Self> {
        let params = Self {
            spot,
            rate,
            alpha,
            eta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(invalid("S", "index level must be positive and finite"));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(invalid("r", "rate must be nonnegative and finite"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", "must be positive and finite"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta", "must be positive and finite"));
        }
        Ok(())
    }

    /// Largest admissible expiry, `650 / eta`.
    pub fn max_expiry(&self) -> f64 {
        MAX_GROWTH_EXPONENT / self.eta
    }

    fn check_expiry(&self, expiry: f64) -> Result<()> {
        if !(expiry >= 0.0) {
            return Err(invalid("T", "expiry must be nonnegative"));
        }
        let cap = self.max_expiry();
        if expiry > cap {
            return Err(Error::ExpiryTooLarge { expiry, cap });
        }
        Ok(())
    }
}

fn check_strike(strike: f64) -> Result<()> {
    if strike > 0.0 && strike.is_finite() {
        Ok(())
    } else {
        Err(invalid("K", "strike must be positive and finite"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

/// A strike/expiry pair with an optional observed price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub strike: f64,
    pub expiry: f64,
    pub price: Option<f64>,
    pub kind: OptionKind,
}

impl OptionQuote {
    pub fn new(strike: f64, expiry: f64, price: Option<f64>, kind: OptionKind) -> Result<Self> {
        check_strike(strike)?;
        if !(expiry > 0.0 && expiry.is_finite()) {
            return Err(invalid("T", "expiry must be positive and finite"));
        }
        if let Some(p) = price {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(invalid("price", "must be nonnegative and finite"));
            }
        }
        Ok(Self {
            strike,
            expiry,
            price,
            kind,
        })
    }

    /// Checks the quoted price against the MMM no-arbitrage bounds
    /// `(S - K Z)_+ <= C <= S` and `(K Z - S)_+ <= P <= K Z`.
    pub fn check_bounds(&self, params: &ModelParams) -> Result<()> {
        let Some(price) = self.price else {
            return Ok(());
        };
        let bond = zcb_price(params, self.expiry)?;
        let forward_gap = params.spot - self.strike * bond;
        let (lower, upper) = match self.kind {
            OptionKind::Call => (forward_gap.max(0.0), params.spot),
            OptionKind::Put => ((-forward_gap).max(0.0), self.strike * bond),
        };
        if price < lower {
            return Err(Error::OutOfBounds {
                bound: Bound::Lower,
                price,
                limit: lower,
            });
        }
        if price > upper {
            return Err(Error::OutOfBounds {
                bound: Bound::Upper,
                price,
                limit: upper,
            });
        }
        Ok(())
    }

    pub fn model_price(&self, params: &ModelParams) -> Result<f64> {
        match self.kind {
            OptionKind::Call => call_price(params, self.strike, self.expiry),
            OptionKind::Put => put_price(params, self.strike, self.expiry),
        }
    }
}

/// `phi(T)` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValues {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_tt: f64,
}

/// The time transform `phi(T) = alpha/(4 eta) (e^{eta T} - 1)`.
pub fn phi(params: &ModelParams, expiry: f64) -> Result<PhiValues> {
    params.check_expiry(expiry)?;
    let (alpha, eta) = (params.alpha, params.eta);
    let growth = (eta * expiry).exp();
    Ok(PhiValues {
        phi: alpha / (4.0 * eta) * (eta * expiry).exp_m1(),
        phi_t: 0.25 * alpha * growth,
        phi_tt: 0.25 * alpha * eta * growth,
    })
}

/// `phi_T / phi = eta e^{eta T} / (e^{eta T} - 1)`.
fn phi_ratio(eta: f64, expiry: f64) -> f64 {
    eta / -(-eta * expiry).exp_m1()
}

/// Pricing coordinates and their analytic expiry derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinates {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_tt: f64,
    pub x: f64,
    pub y: f64,
    pub x_t: f64,
    pub y_t: f64,
    pub x_tt: f64,
}

pub fn coordinates(params: &ModelParams, strike: f64, expiry: f64) -> Result<Coordinates> {
    check_strike(strike)?;
    params.check_expiry(expiry)?;
    if expiry <= DEGENERATE_EXPIRY {
        return Err(Error::DegenerateExpiry { expiry });
    }
    let PhiValues { phi, phi_t, phi_tt } = phi(params, expiry)?;
    let ratio = phi_ratio(params.eta, expiry);
    let x = params.spot / phi;
    let y = strike * (-params.rate * expiry).exp() / phi;
    Ok(Coordinates {
        phi,
        phi_t,
        phi_tt,
        x,
        y,
        x_t: -x * ratio,
        y_t: -params.rate * y - y * ratio,
        // 2 S phi_T^2/phi^3 - S phi_TT/phi^2, with phi_TT/phi = eta * ratio
        x_tt: x * ratio * (2.0 * ratio - params.eta),
    })
}

/// Zero-coupon bond `Z(T) = e^{-rT} (1 - e^{-x/2})`.
pub fn zcb_price(params: &ModelParams, expiry: f64) -> Result<f64> {
    params.check_expiry(expiry)?;
    if expiry <= DEGENERATE_EXPIRY {
        return Ok(1.0);
    }
    let x = params.spot / phi(params, expiry)?.phi;
    Ok((-params.rate * expiry).exp() * -(-0.5 * x).exp_m1())
}

/// `dZ/dT = -r Z + (x_T / 2) e^{-rT - x/2}`.
pub fn zcb_theta(params: &ModelParams, expiry: f64) -> Result<f64> {
    let c = coordinates(params, params.spot, expiry)?;
    let discount = (-params.rate * expiry).exp();
    let z = discount * -(-0.5 * c.x).exp_m1();
    Ok(-params.rate * z + 0.5 * c.x_t * discount * (-0.5 * c.x).exp())
}

/// `ln(1 - e^{-x/2})` without cancellation at either end.
fn ln_one_minus_exp_half(x: f64) -> f64 {
    if 0.5 * x > core::f64::consts::LN_2 {
        (-(-0.5 * x).exp()).ln_1p()
    } else {
        (-(-0.5 * x).exp_m1()).ln()
    }
}

/// Yield-to-maturity `r_hat(T) = -ln Z(T) / T = r - ln(1 - e^{-x/2}) / T`.
pub fn yield_to_maturity(params: &ModelParams, expiry: f64) -> Result<f64> {
    if !(expiry > 0.0) {
        return Err(invalid("T", "expiry must be positive"));
    }
    params.check_expiry(expiry)?;
    if expiry <= DEGENERATE_EXPIRY {
        return Ok(params.rate);
    }
    let x = params.spot / phi(params, expiry)?.phi;
    Ok(params.rate - ln_one_minus_exp_half(x) / expiry)
}

/// MMM call price `C(K, T)`.
pub fn call_price(params: &ModelParams, strike: f64, expiry: f64) -> Result<f64> {
    check_strike(strike)?;
    params.check_expiry(expiry)?;
    if expiry <= DEGENERATE_EXPIRY {
        return Ok((params.spot - strike).max(0.0));
    }
    let c = coordinates(params, strike, expiry)?;
    let forward_gap = params.spot - strike * zcb_price(params, expiry)?;
    Ok(if forward_gap > 0.0 {
        forward_gap + params.spot * put_fraction(0.5 * c.x, 0.5 * c.y)
    } else {
        params.spot * call_fraction(0.5 * c.x, 0.5 * c.y)
    })
}

/// MMM put price `P(K, T) = K e^{-rT} (chi^2(y;0,x) - e^{-x/2}) - S chi^2(y;4,x)`.
pub fn put_price(params: &ModelParams, strike: f64, expiry: f64) -> Result<f64> {
    check_strike(strike)?;
    params.check_expiry(expiry)?;
    if expiry <= DEGENERATE_EXPIRY {
        return Ok((strike - params.spot).max(0.0));
    }
    let c = coordinates(params, strike, expiry)?;
    let forward_gap = params.spot - strike * zcb_price(params, expiry)?;
    Ok(if forward_gap > 0.0 {
        params.spot * put_fraction(0.5 * c.x, 0.5 * c.y)
    } else {
        params.spot * call_fraction(0.5 * c.x, 0.5 * c.y) - forward_gap
    })
}

/// `C_T = -(2S/x) x_T p(y;4,x) + r K e^{-rT} tilde chi^2(y;0,x)`.
pub fn call_theta(params: &ModelParams, strike: f64, expiry: f64) -> Result<f64> {
    let c = coordinates(params, strike, expiry)?;
    let ratio = phi_ratio(params.eta, expiry);
    let discounted = strike * (-params.rate * expiry).exp();
    let p4 = pdf(c.y, 4.0, c.x);
    let tail0 = upper_tail(0.0, 0.5 * c.x, 0.5 * c.y);
    Ok(2.0 * params.spot * ratio * p4 + params.rate * discounted * tail0)
}

/// Second expiry derivative `C_TT` from the five-density combination.
/// Accurate for `T` in `[1e-8, 650/eta]`.
pub fn call_theta2(params: &ModelParams, strike: f64, expiry: f64) -> Result<f64> {
    if expiry < THETA2_MIN_EXPIRY {
        return Err(Error::DegenerateExpiry { expiry });
    }
    let c = coordinates(params, strike, expiry)?;
    let (eta, r, s) = (params.eta, params.rate, params.spot);
    let ratio = phi_ratio(eta, expiry);
    // eta^2 e^{eta T} / (e^{eta T} - 1)^2
    let curvature = eta * eta / ((eta * expiry).exp_m1() * -(-eta * expiry).exp_m1());
    let discounted = strike * (-r * expiry).exp();
    let p0 = pdf(c.y, 0.0, c.x);
    let p2 = pdf(c.y, 2.0, c.x);
    let p4 = pdf(c.y, 4.0, c.x);
    let p6 = pdf(c.y, 6.0, c.x);
    let tail0 = upper_tail(0.0, 0.5 * c.x, 0.5 * c.y);
    Ok(
        -2.0 * s * curvature * p4 + s * ratio * ((p2 - p4) * c.y_t + (p6 - p4) * c.x_t)
            - r * r * discounted * tail0
            + r * discounted * (-p0 * c.y_t + p2 * c.x_t),
    )
}

/// `ln(C - (S - K Z)_+)`, the log of the call's excess over its intrinsic
/// bound. Out of the money this is `ln C`; in the money it is `ln P` by
/// parity. Values below the floating-point range come from log-space
/// quadrature of `phi * ∫ |z - y| p(z;0,x) dz` over the relevant tail.
pub fn log_call_excess(params: &ModelParams, strike: f64, expiry: f64) -> Result<f64> {
    check_strike(strike)?;
    if is_at_the_money(params.spot, strike) {
        return Err(Error::AtTheMoney);
    }
    if expiry <= DEGENERATE_EXPIRY {
        return Err(Error::NonPositiveExcess);
    }
    let c = coordinates(params, strike, expiry)?;
    let forward_gap = params.spot - strike * zcb_price(params, expiry)?;
    let in_the_money = forward_gap > 0.0;
    let direct = if in_the_money {
        params.spot * put_fraction(0.5 * c.x, 0.5 * c.y)
    } else {
        params.spot * call_fraction(0.5 * c.x, 0.5 * c.y)
    };
    if direct > 1e-280 {
        return Ok(direct.ln());
    }
    let (x, y) = (c.x, c.y);
    let scale = tail_scale(x, y);
    let ln_tail = if in_the_money {
        quad::ln_integral(
            |z| (y - z).ln() + ln_pdf(z, 0.0, x),
            y,
            scale,
            quad::Direction::Down,
        )?
    } else {
        quad::ln_integral(
            |z| (z - y).ln() + ln_pdf(z, 0.0, x),
            y,
            scale,
            quad::Direction::Up,
        )?
    };
    if ln_tail == f64::NEG_INFINITY {
        return Err(Error::NonPositiveExcess);
    }
    Ok(c.phi.ln() + ln_tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{ncx2_ccdf, ncx2_cdf, ChiSquareArgs};

    const P: ModelParams = ModelParams::SP500_2009_01_27;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn params_are_validated() {
        assert!(ModelParams::new(0.0, 0.01, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, -0.01, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 0.01, 0.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 0.01, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 1.0, 0.1).is_ok());
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(&P, 0.0).unwrap().phi, 0.0);
        assert!((phi(&P, 1.0).unwrap().phi - 11.329).abs() < 1e-3);
        // phi_T / phi - eta = eta / (e^{eta T} - 1): 1.5e-8 relative at T = 200.
        let far = phi(&P, 200.0).unwrap();
        let excess = 1.0 / (P.eta * 200.0).exp_m1();
        assert!(rel(far.phi_t / far.phi, P.eta * (1.0 + excess)) < 1e-14);
        assert!(rel(far.phi_t / far.phi, P.eta) < 2e-8);
        let farther = phi(&P, 300.0).unwrap();
        assert!(rel(farther.phi_t / farther.phi, P.eta) < 1e-10);
    }

    #[test]
    fn expiry_cap() {
        let cap = P.max_expiry();
        assert!(phi(&P, cap).is_ok());
        assert!(matches!(
            phi(&P, cap * 1.01),
            Err(Error::ExpiryTooLarge { .. })
        ));
        assert!(matches!(
            call_price(&P, 1000.0, cap * 1.01),
            Err(Error::ExpiryTooLarge { .. })
        ));
    }

    #[test]
    fn coordinate_identities() {
        for &(k, t) in &[(1000.0, 0.5), (1362.18, 3.0), (2500.0, 40.0)] {
            let c = coordinates(&P, k, t).unwrap();
            let disc = (-P.rate * t).exp();
            assert!(rel(c.x * c.y, P.spot * k * disc / (c.phi * c.phi)) < 1e-14);
            assert!(rel(c.y / c.x, k / P.spot * disc) < 1e-14);
            let growth = (P.eta * t).exp();
            assert!(rel(c.x_t / c.x, -P.eta * growth / (growth - 1.0)) < 1e-12);
            // Literal forms of the analytic derivatives.
            assert!(rel(c.x_t, -P.spot * c.phi_t / (c.phi * c.phi)) < 1e-12);
            let y_t = -P.rate * k * disc / c.phi - k * disc * c.phi_t / (c.phi * c.phi);
            assert!(rel(c.y_t, y_t) < 1e-12);
            let x_tt =
                2.0 * P.spot * c.phi_t.powi(2) / c.phi.powi(3) - P.spot * c.phi_tt / c.phi.powi(2);
            assert!(rel(c.x_tt, x_tt) < 1e-12);
        }
    }

    #[test]
    fn degenerate_expiry_pays_intrinsic() {
        assert_eq!(call_price(&P, 1300.0, 1e-15).unwrap(), P.spot - 1300.0);
        assert_eq!(call_price(&P, 1400.0, 0.0).unwrap(), 0.0);
        assert_eq!(put_price(&P, 1400.0, 1e-13).unwrap(), 1400.0 - P.spot);
        assert_eq!(zcb_price(&P, 0.0).unwrap(), 1.0);
        assert!(matches!(
            coordinates(&P, 1.0, 1e-13),
            Err(Error::DegenerateExpiry { .. })
        ));
    }

    #[test]
    fn call_converges_to_payoff() {
        for k in [1200.0, 1500.0] {
            let c = call_price(&P, k, 1e-8).unwrap();
            assert!(
                (c - (P.spot - k).max(0.0)).abs() <= 1e-6 * P.spot,
                "K={k}: {c}"
            );
        }
        // At the money the time value shrinks like sqrt(T), about 0.07 S sqrt(T).
        let atm = call_price(&P, P.spot, 1e-8).unwrap();
        assert!(atm > 0.0 && atm <= 1e-5 * P.spot);
        assert!(call_price(&P, P.spot, 1e-11).unwrap() <= 1e-6 * P.spot);
        assert!(put_price(&P, 1200.0, 1e-8).unwrap() <= 1e-8 * P.spot);
    }

    #[test]
    fn tiny_strike_call_is_the_index() {
        let c = call_price(&P, 1e-12, 1.0).unwrap();
        assert!((c - P.spot).abs() < 1e-9);
        assert!(put_price(&P, 1e-12, 1.0).unwrap() < 1e-20);
    }

    #[test]
    fn prices_match_chi_square_tails() {
        for &(k, t) in &[
            (900.0, 0.25),
            (1362.18, 1.0),
            (1800.0, 5.0),
            (3000.0, 60.0),
            (700.0, 0.02),
        ] {
            let c = coordinates(&P, k, t).unwrap();
            let disc = k * (-P.rate * t).exp();
            let tail4 = ncx2_ccdf(ChiSquareArgs::new(c.y, 4.0, c.x).unwrap()).unwrap();
            let tail0 = ncx2_ccdf(ChiSquareArgs::new(c.y, 0.0, c.x).unwrap()).unwrap();
            let call = P.spot * tail4 - disc * tail0;
            assert!(
                (call_price(&P, k, t).unwrap() - call).abs() < 1e-10 * P.spot,
                "K={k} T={t}"
            );
            let cdf4 = ncx2_cdf(ChiSquareArgs::new(c.y, 4.0, c.x).unwrap()).unwrap();
            let cdf0 = ncx2_cdf(ChiSquareArgs::new(c.y, 0.0, c.x).unwrap()).unwrap();
            let put = disc * (cdf0 - (-0.5 * c.x).exp()) - P.spot * cdf4;
            assert!(
                (put_price(&P, k, t).unwrap() - put).abs() < 1e-10 * P.spot,
                "K={k} T={t}"
            );
        }
    }

    #[test]
    fn bond_properties() {
        let z = zcb_price(&P, 1e-10).unwrap();
        assert!(z <= 1.0 && 1.0 - z <= 1e-8);
        let mut prev = 1.0;
        for i in 1..200 {
            let t = 0.05 * f64::from(i) * f64::from(i);
            let z = zcb_price(&P, t).unwrap();
            assert!(z <= prev && z > 0.0);
            prev = z;
            let x = P.spot / phi(&P, t).unwrap().phi;
            assert!(rel(z * (P.rate * t).exp(), -(-0.5 * x).exp_m1()) < 1e-14);
        }
    }

    #[test]
    fn yield_to_maturity_identities() {
        for t in [0.1, 1.0, 10.0, 100.0] {
            let ytm = yield_to_maturity(&P, t).unwrap();
            let z = zcb_price(&P, t).unwrap();
            assert!(rel((-ytm * t).exp(), z) < 1e-15);
            // ln Z is ill-conditioned while Z is close to one.
            if t >= 1.0 {
                assert!(rel(ytm, -z.ln() / t) < 1e-13);
            }
        }
        let long = yield_to_maturity(&P, 500.0).unwrap();
        let limit = P.rate + P.eta;
        // The gap is ln(2 eta S / alpha) / T: 3.8% of the limit at T = 500,
        // inside 1% from T ~ 1900 on.
        assert!((long - limit).abs() <= 4e-2 * limit);
        let longer = yield_to_maturity(&P, 2000.0).unwrap();
        assert!((longer - limit).abs() <= 1e-2 * limit);
        let scaled = (long - limit) * 500.0;
        let target = -(2.0 * P.eta * P.spot / P.alpha).ln();
        assert!(rel(scaled, target) < 0.01);
    }

    #[test]
    fn theta_matches_finite_differences() {
        for &(k, t) in &[(1100.0, 0.3), (1362.18, 1.0), (1600.0, 4.0), (2000.0, 30.0)] {
            let h = 1e-4 * t;
            let f = |s: f64| call_price(&P, k, s).unwrap();
            let fd1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let fd2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            let theta = call_theta(&P, k, t).unwrap();
            assert!(theta >= 0.0);
            assert!(rel(theta, fd1) < 1e-5, "K={k} T={t}: {theta} vs {fd1}");
            let theta2 = call_theta2(&P, k, t).unwrap();
            assert!(rel(theta2, fd2) < 1e-4, "K={k} T={t}: {theta2} vs {fd2}");
        }
        assert!(call_theta2(&P, 1000.0, 1e-9).is_err());
    }

    #[test]
    fn bond_theta_matches_finite_difference() {
        for t in [0.5, 2.0, 25.0] {
            let h = 1e-5 * t;
            let fd = (zcb_price(&P, t + h).unwrap() - zcb_price(&P, t - h).unwrap()) / (2.0 * h);
            assert!(rel(zcb_theta(&P, t).unwrap(), fd) < 1e-5);
        }
    }

    #[test]
    fn excess_identity_and_parity_branch() {
        for &(k, t) in &[(1200.0, 0.1), (1500.0, 0.1), (1000.0, 2.0), (1362.5, 0.5)] {
            let ln_excess = log_call_excess(&P, k, t).unwrap();
            let call = call_price(&P, k, t).unwrap();
            let intrinsic = (P.spot - k * zcb_price(&P, t).unwrap()).max(0.0);
            assert!(
                rel(ln_excess.exp(), call - intrinsic) < 1e-10,
                "K={k} T={t}"
            );
            if k < P.spot {
                assert!((ln_excess - put_price(&P, k, t).unwrap().ln()).abs() < 1e-12);
            }
        }
        assert_eq!(log_call_excess(&P, P.spot, 0.1), Err(Error::AtTheMoney));
    }

    #[test]
    fn log_excess_quadrature_path_matches_series() {
        // T where the excess is ~1e-100: both paths are usable.
        for &(k, t) in &[(1.2 * P.spot, 2e-3), (0.8 * P.spot, 2e-3)] {
            let c = coordinates(&P, k, t).unwrap();
            let (x, y) = (c.x, c.y);
            let scale = tail_scale(x, y);
            let direct = log_call_excess(&P, k, t).unwrap();
            assert!(direct < -100.0 && direct > -600.0, "{direct}");
            let ln_tail = if k < P.spot {
                quad::ln_integral(
                    |z| (y - z).ln() + ln_pdf(z, 0.0, x),
                    y,
                    scale,
                    quad::Direction::Down,
                )
            } else {
                quad::ln_integral(
                    |z| (z - y).ln() + ln_pdf(z, 0.0, x),
                    y,
                    scale,
                    quad::Direction::Up,
                )
            }
            .unwrap();
            let via_quad = c.phi.ln() + ln_tail;
            assert!(
                (via_quad - direct).abs() < 1e-9 * direct.abs(),
                "K={k}: {via_quad} vs {direct}"
            );
        }
    }

    #[test]
    fn log_excess_is_monotone_in_small_expiries() {
        for k in [0.9 * P.spot, 1.1 * P.spot] {
            let mut prev = f64::NEG_INFINITY;
            for t in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
                let v = log_call_excess(&P, k, t).unwrap();
                assert!(v > prev, "K={k} T={t}");
                prev = v;
            }
        }
    }

    #[test]
    fn quote_bounds() {
        let z = zcb_price(&P, 1.0).unwrap();
        let ok = OptionQuote::new(
            1000.0,
            1.0,
            Some(P.spot - 1000.0 * z + 1.0),
            OptionKind::Call,
        )
        .unwrap();
        assert!(ok.check_bounds(&P).is_ok());
        let low = OptionQuote::new(1000.0, 1.0, Some(1.0), OptionKind::Call).unwrap();
        assert!(matches!(
            low.check_bounds(&P),
            Err(Error::OutOfBounds {
                bound: Bound::Lower,
                ..
            })
        ));
        let high = OptionQuote::new(1000.0, 1.0, Some(2000.0), OptionKind::Put).unwrap();
        assert!(matches!(
            high.check_bounds(&P),
            Err(Error::OutOfBounds {
                bound: Bound::Upper,
                ..
            })
        ));
        let model = OptionQuote::new(1000.0, 1.0, None, OptionKind::Put).unwrap();
        let p = model.model_price(&P).unwrap();
        assert!(OptionQuote {
            price: Some(p),
            ..model
        }
        .check_bounds(&P)
        .is_ok());
    }
}
