//! Black–Scholes prices with a dividend yield and an arbitrary bond price.
//!
//! With forward `F = S e^{-kappa T}`, discounted strike `D = K Z` and total
//! volatility `sigma = v sqrt(T)`, everything reduces to the normalized time
//! value of the out-of-the-money side,
//! `g(xi, sigma) = e^xi N(xi/sigma + sigma/2) - N(xi/sigma - sigma/2)` for
//! `xi = ln(F/D) <= 0`. It is evaluated through Mills ratios in log space, so
//! prices far below the floating-point range still have a usable logarithm.

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::mmm::{zcb_price, ModelParams};
use crate::specfun::{norm_cdf, norm_pdf};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsContext {
    pub spot: f64,
    pub strike: f64,
    pub expiry: f64,
    /// Volatility per square-root year.
    pub vol: f64,
    pub dividend_yield: f64,
    /// Zero-coupon bond price for the expiry, in `(0, 1]`.
    pub bond: f64,
}

impl BsContext {
    pub fn new(
        spot: f64,
        strike: f64,
        expiry: f64,
        vol: f64,
        dividend_yield: f64,
        bond: f64,
    ) -> Result<Self> {
        let ctx = Self {
            spot,
            strike,
            expiry,
            vol,
            dividend_yield,
            bond,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    /// The MMM specialization: no dividend yield and the model's bond.
    pub fn mmm(params: &ModelParams, strike: f64, expiry: f64, vol: f64) -> Result<Self> {
        Self::new(
            params.spot,
            strike,
            expiry,
            vol,
            0.0,
            zcb_price(params, expiry)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(invalid("S", "must be positive and finite"));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(invalid("K", "must be positive and finite"));
        }
        if !(self.expiry > 0.0 && self.expiry.is_finite()) {
            return Err(invalid("T", "must be positive and finite"));
        }
        if !(self.vol >= 0.0) {
            return Err(invalid("v", "volatility must be nonnegative"));
        }
        if !self.dividend_yield.is_finite() {
            return Err(invalid("kappa", "must be finite"));
        }
        if !(self.bond > 0.0 && self.bond <= 1.0) {
            return Err(invalid("bond", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub(crate) fn forward(&self) -> f64 {
        self.spot * (-self.dividend_yield * self.expiry).exp()
    }

    pub(crate) fn discounted_strike(&self) -> f64 {
        self.strike * self.bond
    }

    /// `xi = ln(S/K) - ln(Z) - kappa T`, the log forward moneyness.
    pub(crate) fn log_moneyness(&self) -> f64 {
        (self.spot / self.strike).ln() - self.bond.ln() - self.dividend_yield * self.expiry
    }

    pub(crate) fn total_vol(&self) -> f64 {
        self.vol * self.expiry.sqrt()
    }

    fn with_vol(&self, vol: f64) -> Self {
        Self { vol, ..*self }
    }
}

pub fn bs_d1_d2(ctx: &BsContext) -> Result<(f64, f64)> {
    if ctx.vol == 0.0 {
        return Err(Error::ZeroVolatility);
    }
    let sigma = ctx.total_vol();
    let d1 = ctx.log_moneyness() / sigma + 0.5 * sigma;
    Ok((d1, d1 - sigma))
}

/// Mills ratio `N(-t) / n(t)` for `t >= 0`.
fn mills(t: f64) -> f64 {
    if t < 30.0 {
        norm_cdf(-t) / norm_pdf(t)
    } else {
        // Laplace continued fraction, evaluated backward.
        let mut tail = t;
        for k in (1..=40).rev() {
            tail = t + f64::from(k) / tail;
        }
        1.0 / tail
    }
}

/// `ln g(xi, sigma)` for `xi <= 0`, `sigma > 0`.
pub(crate) fn ln_time_value(xi: f64, sigma: f64) -> f64 {
    debug_assert!(xi <= 0.0);
    if sigma == f64::INFINITY {
        return xi;
    }
    let d1 = xi / sigma + 0.5 * sigma;
    let d2 = d1 - sigma;
    if d1 < 0.0 {
        // e^xi n(d1) = n(d2), so g = n(d2) (R(-d1) - R(-d2)).
        -0.5 * d2 * d2 - LN_SQRT_2PI + (mills(-d1) - mills(-d2)).ln()
    } else {
        (xi.exp() * norm_cdf(d1) - norm_cdf(d2)).ln()
    }
}

/// Price of whichever of the call and the put is out of the money forward,
/// as `(ln price, call_is_otm)`. `vol` must be positive.
pub(crate) fn ln_otm_price(ctx: &BsContext) -> (f64, bool) {
    let xi = ctx.log_moneyness();
    let sigma = ctx.total_vol();
    if xi <= 0.0 {
        (
            ctx.discounted_strike().ln() + ln_time_value(xi, sigma),
            true,
        )
    } else {
        (ctx.forward().ln() + ln_time_value(-xi, sigma), false)
    }
}

/// `S e^{-kappa T} N(d1) - K Z N(d2)`, with the `v = 0` and `v = inf` limits.
pub fn bs_call(ctx: &BsContext) -> f64 {
    let gap = ctx.forward() - ctx.discounted_strike();
    if ctx.vol == 0.0 {
        return gap.max(0.0);
    }
    let (ln_otm, call_is_otm) = ln_otm_price(ctx);
    if call_is_otm {
        ln_otm.exp()
    } else {
        gap + ln_otm.exp()
    }
}

/// European put by the same construction; parity `C - P = S e^{-kappa T} - K Z`.
pub fn bs_put(ctx: &BsContext) -> f64 {
    let gap = ctx.discounted_strike() - ctx.forward();
    if ctx.vol == 0.0 {
        return gap.max(0.0);
    }
    let (ln_otm, call_is_otm) = ln_otm_price(ctx);
    if call_is_otm {
        gap + ln_otm.exp()
    } else {
        ln_otm.exp()
    }
}

/// `dC/dv = S e^{-kappa T} n(d1) sqrt(T)`.
pub fn bs_vega(ctx: &BsContext) -> Result<f64> {
    let (d1, _) = bs_d1_d2(ctx)?;
    Ok(ctx.forward() * norm_pdf(d1) * ctx.expiry.sqrt())
}

/// `ln(vega)`, finite where the vega itself underflows.
pub(crate) fn ln_vega(ctx: &BsContext) -> Result<f64> {
    let (d1, _) = bs_d1_d2(ctx)?;
    Ok(ctx.forward().ln() - 0.5 * d1 * d1 - LN_SQRT_2PI + 0.5 * ctx.expiry.ln())
}

/// Black–Scholes call with the MMM bond: `S N(d1) - K e^{-r_hat T} N(d2)`.
pub fn bs_call_mmm(params: &ModelParams, strike: f64, expiry: f64, vol: f64) -> Result<f64> {
    Ok(bs_call(&BsContext::mmm(params, strike, expiry, vol)?))
}

pub fn bs_put_mmm(params: &ModelParams, strike: f64, expiry: f64, vol: f64) -> Result<f64> {
    Ok(bs_put(&BsContext::mmm(params, strike, expiry, vol)?))
}

impl BsContext {
    pub fn call(&self) -> f64 {
        bs_call(self)
    }

    pub fn call_at(&self, vol: f64) -> f64 {
        bs_call(&self.with_vol(vol))
    }
}
