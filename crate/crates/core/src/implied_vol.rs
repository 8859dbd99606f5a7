//! Black–Scholes implied volatility under the MMM bond.
//!
//! The solver works on the out-of-the-money side of the forward (the call
//! when `S <= K Z`, otherwise the put obtained by parity) and on the
//! logarithm of its price. That side keeps relative accuracy when the call
//! is within rounding of its bounds, and the log turns the exponentially
//! small vega of extreme expiries into a well-scaled derivative
//! `vega / price`. Newton steps are safeguarded by a bracket that always
//! contains the root; any step that leaves it is replaced by bisection.

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

use crate::blackscholes::{bs_call, ln_otm_price, ln_vega, BsContext};
use crate::error::{Bound, Error, Result};
use crate::mmm::{call_price, log_call_excess, put_price, zcb_price, ModelParams};

pub const INITIAL_BRACKET: (f64, f64) = (1e-9, 5.0);
pub const MAX_VOL: f64 = 5e3;
pub const VOL_TOL: f64 = 1e-12;
pub const PRICE_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvResult {
    pub vol: f64,
    pub iterations: usize,
    /// `|price(vol) - target|` at the solution.
    pub residual: f64,
    /// Final bracket; the price residual changes sign across it.
    pub bracket: (f64, f64),
}

/// Implied volatility of a call price `target` for strike `K` and expiry `T`.
pub fn implied_vol(
    params: &ModelParams,
    strike: f64,
    expiry: f64,
    target: f64,
) -> Result<IvResult> {
    let ctx = BsContext::mmm(params, strike, expiry, 0.0)?;
    let gap = ctx.forward() - ctx.discounted_strike();
    let lower = gap.max(0.0);
    let upper = params.spot;
    if !(target >= lower) {
        return Err(Error::OutOfBounds {
            bound: Bound::Lower,
            price: target,
            limit: lower,
        });
    }
    if target > upper {
        return Err(Error::OutOfBounds {
            bound: Bound::Upper,
            price: target,
            limit: upper,
        });
    }
    if target == upper {
        return Err(Error::AtBound {
            bound: Bound::Upper,
        });
    }
    let call_side = ctx.log_moneyness() <= 0.0;
    let otm = if call_side { target } else { target - gap };
    solve(&ctx, otm.ln(), otm, call_side)
}

/// Implied volatility of the MMM call price itself.
pub fn implied_vol_mmm(params: &ModelParams, strike: f64, expiry: f64) -> Result<IvResult> {
    let ctx = BsContext::mmm(params, strike, expiry, 0.0)?;
    let call_side = ctx.log_moneyness() <= 0.0;
    let otm = if call_side {
        call_price(params, strike, expiry)?
    } else {
        put_price(params, strike, expiry)?
    };
    // Agree with the model's own choice of side; they differ only within
    // rounding of the forward, where both prices are far from underflow.
    let model_call_side = params.spot - strike * zcb_price(params, expiry)? <= 0.0;
    let ln_otm = if otm > 1e-280 || call_side != model_call_side {
        otm.ln()
    } else {
        log_call_excess(params, strike, expiry)?
    };
    solve(&ctx, ln_otm, otm, call_side)
}

fn solve(ctx: &BsContext, ln_target: f64, target: f64, call_side: bool) -> Result<IvResult> {
    if ln_target == f64::NEG_INFINITY || !(target >= 0.0) {
        return Err(Error::AtBound {
            bound: Bound::Lower,
        });
    }
    let upper = if call_side {
        ctx.spot
    } else {
        ctx.discounted_strike()
    };
    if target >= upper {
        return Err(Error::AtBound {
            bound: Bound::Upper,
        });
    }
    let at = |v: f64| BsContext { vol: v, ..*ctx };
    let gap_of = |v: f64| ln_otm_price(&at(v)).0 - ln_target;
    let price_of = |v: f64| {
        let c = at(v);
        let (ln_p, _) = ln_otm_price(&c);
        ln_p.exp()
    };

    let (mut lo, mut hi) = INITIAL_BRACKET;
    if gap_of(lo) > 0.0 {
        hi = lo;
        lo = 0.0;
    } else {
        while gap_of(hi) < 0.0 {
            if hi >= MAX_VOL {
                return Err(Error::NonConvergence { evaluations: 0 });
            }
            lo = hi;
            hi = (hi * 4.0).min(MAX_VOL);
        }
    }

    // Start at the inflection point of the price in sigma, where Newton on
    // the price is globally convergent, clipped into the bracket.
    let xi = ctx.log_moneyness().abs();
    let inflection = (2.0 * xi / ctx.expiry).sqrt();
    let mut v = if inflection > lo && inflection < hi {
        inflection
    } else {
        bisect(lo, hi)
    };
    let tol = PRICE_TOL * ctx.spot;
    for iteration in 1..=MAX_ITERATIONS {
        let g = gap_of(v);
        if g == 0.0 {
            return Ok(finish(
                ctx,
                v,
                iteration,
                (lo.min(v), hi.max(v)),
                price_of(v),
                target,
                call_side,
            ));
        }
        if g < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let c = at(v);
        let slope = match ln_vega(&c) {
            Ok(ln_vega) => (ln_vega - ln_otm_price(&c).0).exp(),
            Err(_) => 0.0,
        };
        let newton = v - g / slope;
        let next = if slope > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            bisect(lo, hi)
        };
        let step = (next - v).abs();
        v = next;
        if step <= VOL_TOL || hi - lo <= VOL_TOL {
            let price = price_of(v);
            if (price - target).abs() <= tol || hi - lo <= VOL_TOL {
                return Ok(finish(
                    ctx,
                    v,
                    iteration,
                    (lo, hi),
                    price,
                    target,
                    call_side,
                ));
            }
        }
    }
    Err(Error::NonConvergence {
        evaluations: MAX_ITERATIONS,
    })
}

/// Bisection point: geometric while the bracket spans decades.
fn bisect(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 4.0 * lo {
        (lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    }
}

fn finish(
    ctx: &BsContext,
    vol: f64,
    iterations: usize,
    bracket: (f64, f64),
    price: f64,
    target: f64,
    call_side: bool,
) -> IvResult {
    // The call residual equals the out-of-the-money residual by parity.
    let residual = if call_side {
        (bs_call(&BsContext { vol, ..*ctx }) - target).abs()
    } else {
        (price - target).abs()
    };
    IvResult {
        vol,
        iterations,
        residual,
        bracket,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackscholes::{bs_call_mmm, bs_vega};

    const P: ModelParams = ModelParams::SP500_2009_01_27;

    #[test]
    fn round_trips() {
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for &v in &[0.01, 0.05, 0.2, 0.5, 1.0, 3.0] {
            for _ in 0..40 {
                let k = P.spot * (0.5 + 1.5 * next());
                let t = 0.1 + 20.0 * next();
                let ctx = BsContext::mmm(&P, k, t, v).unwrap();
                let target = bs_call(&ctx);
                // Skip draws where a 1e-9 vol change moves the call by less
                // than its own rounding: the vol is not identifiable there.
                if bs_vega(&ctx).unwrap() * 1e-9 <= 64.0 * f64::EPSILON * target {
                    continue;
                }
                let iv = implied_vol(&P, k, t, target).unwrap();
                assert!((iv.vol - v).abs() < 1e-9, "v={v} K={k} T={t}: {iv:?}");
                assert!(iv.residual <= 1e-12 * P.spot);
                assert!(iv.bracket.0 <= iv.vol && iv.vol <= iv.bracket.1);
            }
        }
    }

    #[test]
    fn bracket_contains_the_root() {
        for &(k, t) in &[(1000.0, 1.0), (1362.18, 0.01), (2500.0, 30.0)] {
            let target = call_price(&P, k, t).unwrap();
            let iv = implied_vol(&P, k, t, target).unwrap();
            let (lo, hi) = iv.bracket;
            let below = bs_call_mmm(&P, k, t, lo).unwrap() - target;
            let above = bs_call_mmm(&P, k, t, hi).unwrap() - target;
            assert!(
                below <= 1e-12 * P.spot && above >= -1e-12 * P.spot,
                "{iv:?}"
            );
        }
    }

    #[test]
    fn bounds_are_diagnosed() {
        let z = zcb_price(&P, 1.0).unwrap();
        let lower = P.spot - 1000.0 * z;
        assert!(matches!(
            implied_vol(&P, 1000.0, 1.0, lower - 1.0),
            Err(Error::OutOfBounds {
                bound: Bound::Lower,
                ..
            })
        ));
        assert!(matches!(
            implied_vol(&P, 1000.0, 1.0, P.spot + 1.0),
            Err(Error::OutOfBounds {
                bound: Bound::Upper,
                ..
            })
        ));
        assert_eq!(
            implied_vol(&P, 1000.0, 1.0, P.spot),
            Err(Error::AtBound {
                bound: Bound::Upper
            })
        );
        assert_eq!(
            implied_vol(&P, 1000.0, 1.0, lower),
            Err(Error::AtBound {
                bound: Bound::Lower
            })
        );
        assert_eq!(
            implied_vol(&P, 2000.0, 1.0, 0.0),
            Err(Error::AtBound {
                bound: Bound::Lower
            })
        );
    }

    #[test]
    fn near_upper_bound() {
        // S - 1e-20 rounds to S; the largest double below S is the closest
        // representable stress case.
        let target = f64::from_bits(P.spot.to_bits() - 1);
        let iv = implied_vol(&P, 1362.18, 1.0, target).unwrap();
        assert!(iv.vol.is_finite() && iv.vol > 5.0);
        assert!(iv.residual <= 1e-12 * P.spot);
    }

    #[test]
    fn near_intrinsic() {
        let k = 1000.0;
        let z = zcb_price(&P, 1.0).unwrap();
        let target = P.spot - k * z + 1e-10;
        let iv = implied_vol(&P, k, 1.0, target).unwrap();
        assert!(iv.vol > 0.0 && iv.vol < 0.1, "{iv:?}");
        assert!(iv.residual <= 1e-12 * P.spot);
        let tiny = implied_vol(&P, 2000.0, 1.0, 1e-200).unwrap();
        assert!(tiny.vol > 0.0 && tiny.vol < 0.05);
    }

    #[test]
    fn larger_price_larger_vol() {
        for &(k, t) in &[(1100.0, 0.5), (1600.0, 2.0)] {
            let base = call_price(&P, k, t).unwrap();
            let a = implied_vol(&P, k, t, base).unwrap().vol;
            let b = implied_vol(&P, k, t, base * 1.01).unwrap().vol;
            assert!(b > a);
        }
    }

    #[test]
    fn model_prices_invert() {
        for &(k, t) in &[
            (681.09, 1.0),
            (1362.18, 0.001),
            (2724.36, 10.0),
            (1362.18, 400.0),
        ] {
            let iv = implied_vol_mmm(&P, k, t).unwrap();
            assert!(iv.vol > 0.0 && iv.vol < 1.0, "K={k} T={t}: {iv:?}");
            assert!(iv.residual <= 1e-12 * P.spot);
        }
    }
}
