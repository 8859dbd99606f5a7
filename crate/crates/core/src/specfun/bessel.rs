//! Modified Bessel functions `I_n` of small integer order.
//!
//! Ascending series up to `z = 30`, Hankel's large-argument expansion of
//! `e^{-z} I_n(z)` beyond. Both branches agree to ~1e-14 at the crossover.

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};

const SERIES_LIMIT: f64 = 30.0;
const MAX_ORDER: i32 = 3;

fn check(nu: i32, z: f64) -> Result<u32> {
    if !(-MAX_ORDER..=MAX_ORDER).contains(&nu) {
        return Err(invalid("nu", "order must lie in -3..=3"));
    }
    if !(z >= 0.0) {
        return Err(invalid("z", "argument must be nonnegative"));
    }
    // I_{-n} = I_n for integer n.
    Ok(nu.unsigned_abs())
}

/// `e^{-z} I_nu(z)`; finite for every representable `z >= 0`.
pub fn bessel_i_scaled(nu: i32, z: f64) -> Result<f64> {
    let n = check(nu, z)?;
    if z == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(if z <= SERIES_LIMIT {
        series(n, z) * (-z).exp()
    } else {
        hankel_scaled(n, z)
    })
}

/// `I_nu(z)`; fails with [`Error::Overflow`] once `e^z` leaves the range.
pub fn bessel_i(nu: i32, z: f64) -> Result<f64> {
    let n = check(nu, z)?;
    let value = if z <= SERIES_LIMIT {
        series(n, z)
    } else {
        // Split e^z so values just below the overflow threshold survive.
        let half = (0.5 * z).exp();
        hankel_scaled(n, z) * half * half
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow)
    }
}

/// Sum of `(z/2)^{2k+n} / (k! (k+n)!)`.
pub(crate) fn series(n: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * z;
    let quarter_sq = half * half;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / f64::from(k);
    }
    let mut sum = term;
    let nf = f64::from(n);
    let mut k = 1.0;
    loop {
        term *= quarter_sq / (k * (k + nf));
        sum += term;
        if term <= sum * f64::EPSILON * 0.25 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn hankel_scaled(n: u32, z: f64) -> f64 {
    let mu = 4.0 * f64::from(n * n);
    let inv8z = 1.0 / (8.0 * z);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = f64::from(2 * k - 1);
        term *= -(mu - odd * odd) * inv8z / f64::from(k);
        let size = term.abs();
        if size >= prev || size <= f64::EPSILON * 0.25 * sum.abs() {
            if size < prev {
                sum += term;
            }
            break;
        }
        sum += term;
        prev = size;
    }
    sum / (core::f64::consts::TAU * z).sqrt()
}
