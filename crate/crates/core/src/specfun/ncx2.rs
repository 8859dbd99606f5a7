//! Noncentral chi-square law with `delta >= 0` degrees of freedom and
//! noncentrality `x`, including Siegel's `delta = 0` case whose distribution
//! carries a point mass `e^{-x/2}` at the origin.
//!
//! Distribution functions are Poisson mixtures of central chi-square laws,
//! summed outward from the dominant term with recurrences that only ever
//! add nonnegative quantities. The density goes through the exponentially
//! scaled Bessel function so `e^{-(x+y)/2} I(sqrt(xy))` never underflows on
//! its own.

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

use super::bessel::bessel_i_scaled;
use super::gamma::{dpois, gamma_pq};
use crate::error::{invalid, Result};
use crate::quad;

const SUM_EPS: f64 = 1e-17;
/// Recompute recurrence state from closed forms this often.
const REFRESH: u64 = 16;

/// Evaluation point `y`, degrees of freedom `delta` and noncentrality `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareArgs {
    pub y: f64,
    pub delta: f64,
    pub x: f64,
}

impl ChiSquareArgs {
    pub fn new(y: f64, delta: f64, x: f64) -> Result<Self> {
        let args = Self { y, delta, x };
        args.validate()?;
        Ok(args)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y >= 0.0) {
            return Err(invalid("y", "must be nonnegative"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be finite and nonnegative"));
        }
        if !(self.x >= 0.0 && self.x.is_finite()) {
            return Err(invalid("x", "must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Bessel order `(delta - 2) / 2` when it is one of the supported integers.
    fn bessel_order(&self) -> Option<i32> {
        let nu = 0.5 * self.delta - 1.0;
        if nu == nu.round() && (-1.0..=3.0).contains(&nu) {
            Some(nu as i32)
        } else {
            None
        }
    }
}

/// Density `p(y; delta, x)`. For `delta = 0` this is the improper
/// continuous part; it integrates to `1 - e^{-x/2}`.
pub fn ncx2_pdf(args: ChiSquareArgs) -> Result<f64> {
    args.validate()?;
    Ok(pdf(args.y, args.delta, args.x))
}

/// `chi^2(y; delta, x)`, point mass included when `delta = 0`.
pub fn ncx2_cdf(args: ChiSquareArgs) -> Result<f64> {
    args.validate()?;
    Ok(lower_tail(
        0.5 * args.delta,
        0.5 * args.x,
        0.5 * args.y,
        true,
    ))
}

/// `1 - chi^2(y; delta, x)`, summed directly so tiny tails keep their
/// relative accuracy.
pub fn ncx2_ccdf(args: ChiSquareArgs) -> Result<f64> {
    args.validate()?;
    Ok(upper_tail(0.5 * args.delta, 0.5 * args.x, 0.5 * args.y))
}

/// Natural log of [`ncx2_ccdf`]. Beyond the floating-point range of the
/// mixture sum the tail integral is evaluated in log space.
pub fn ncx2_ln_ccdf(args: ChiSquareArgs) -> Result<f64> {
    let direct = ncx2_ccdf(args)?;
    if direct > 1e-280 || args.bessel_order().is_none() || args.y <= args.x {
        return Ok(direct.ln());
    }
    let (y, delta, x) = (args.y, args.delta, args.x);
    let scale = tail_scale(x, y);
    quad::ln_integral(|z| ln_pdf(z, delta, x), y, scale, quad::Direction::Up)
}

/// Adaptive quadrature of the density on `[0, y]` plus the `delta = 0`
/// point mass. Independent of the mixture sums used by [`ncx2_cdf`].
pub fn ncx2_cdf_oracle(args: ChiSquareArgs, tol: f64) -> Result<f64> {
    args.validate()?;
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let (y, delta, x) = (args.y, args.delta, args.x);
    let mass = if delta == 0.0 { (-0.5 * x).exp() } else { 0.0 };
    if y == 0.0 {
        return Ok(mass);
    }
    let integral = quad::integrate(|z| pdf(z, delta, x), 0.0, y, tol, quad::DEFAULT_BUDGET)?;
    Ok(mass + integral.value)
}

/// Decay length of the density just beyond `y` in the upper tail.
pub(crate) fn tail_scale(x: f64, y: f64) -> f64 {
    let sx = x.sqrt();
    let sy = y.sqrt();
    let slope = ((sy - sx) / (2.0 * sy)).abs();
    1.0 / slope.max(1.0 / (8.0 * y).sqrt().max(1e-300))
}

pub(crate) fn pdf(y: f64, delta: f64, x: f64) -> f64 {
    let args = ChiSquareArgs { y, delta, x };
    match args.bessel_order() {
        Some(nu) => pdf_bessel(y, nu, x),
        None => pdf_mixture(y, delta, x),
    }
}

/// `ln p(y; delta, x)` for the Bessel-supported degrees of freedom.
pub(crate) fn ln_pdf(y: f64, delta: f64, x: f64) -> f64 {
    let args = ChiSquareArgs { y, delta, x };
    let nu = match args.bessel_order() {
        Some(nu) if y > 0.0 && x > 0.0 => nu,
        _ => return pdf(y, delta, x).ln(),
    };
    let z = (x * y).sqrt();
    let power = 0.5 * f64::from(nu);
    (0.5f64).ln()
        + power * (y / x).ln()
        + gauss_exponent(x, y)
        + bessel_i_scaled(nu, z).unwrap_or(0.0).ln()
}

/// `-(sqrt(x) - sqrt(y))^2 / 2` without cancellation near `x = y`.
fn gauss_exponent(x: f64, y: f64) -> f64 {
    let d = (x - y) / (x.sqrt() + y.sqrt());
    -0.5 * d * d
}

fn pdf_bessel(y: f64, nu: i32, x: f64) -> f64 {
    let delta = 2.0 * f64::from(nu) + 2.0;
    if y == 0.0 {
        return match nu {
            -1 => 0.25 * x * (-0.5 * x).exp(),
            0 => 0.5 * (-0.5 * x).exp(),
            _ => 0.0,
        };
    }
    if x == 0.0 {
        return central_pdf(y, delta);
    }
    let z = (x * y).sqrt();
    let power = 0.5 * f64::from(nu);
    let scaled = bessel_i_scaled(nu, z).unwrap_or(0.0);
    let value = 0.5 * (y / x).powf(power) * gauss_exponent(x, y).exp() * scaled;
    if value.is_finite() && value > 0.0 {
        value
    } else {
        ln_pdf(y, delta, x).exp()
    }
}

/// Central chi-square density; `delta = 0` has no continuous part.
fn central_pdf(y: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let h = 0.5 * delta;
    if y == 0.0 {
        return if h < 1.0 {
            f64::INFINITY
        } else if h == 1.0 {
            0.5
        } else {
            0.0
        };
    }
    0.5 * gamma_density(h - 1.0, 0.5 * y)
}

/// `e^{-b} b^m / Gamma(m + 1)` for `m > -1`.
fn gamma_density(m: f64, b: f64) -> f64 {
    if m >= 0.0 {
        dpois(m, b)
    } else {
        (m * b.ln() - b - libm::lgamma(m + 1.0)).exp()
    }
}

/// Poisson mixture of central densities; covers non-integer `delta`.
fn pdf_mixture(y: f64, delta: f64, x: f64) -> f64 {
    let (h, a, b) = (0.5 * delta, 0.5 * x, 0.5 * y);
    if a == 0.0 {
        return central_pdf(y, delta);
    }
    if y == 0.0 {
        return if h < 1.0 {
            f64::INFINITY
        } else if h == 1.0 {
            0.5 * (-a).exp()
        } else {
            0.0
        };
    }
    let (lo, hi) = window(a);
    let mut sum = Compensated::default();
    for j in lo..=hi {
        let n = h + j as f64;
        if n > 0.0 {
            sum.add(dpois(j as f64, a) * 0.5 * gamma_density(n - 1.0, b));
        }
    }
    sum.value()
}

/// Mode of the Poisson(a) weights and a generous half-width around it.
fn window(a: f64) -> (u64, u64) {
    let k0 = a.floor();
    let half = (12.0 * a.sqrt() + 50.0).ceil();
    let lo = (k0 - half).max(0.0) as u64;
    (lo, (k0 + half) as u64)
}

/// `sum_j w_j Q(h + j, b)` with Poisson(a) weights: the upper tail.
pub(crate) fn upper_tail(h: f64, a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return if h == 0.0 { -(-a).exp_m1() } else { 1.0 };
    }
    if b == f64::INFINITY {
        return 0.0;
    }
    if a == 0.0 {
        return if h == 0.0 { 0.0 } else { gamma_pq(h, b).1 };
    }
    let (lo, _) = window(a);
    let mut j = lo;
    let mut n = h + j as f64;
    let mut q = if n == 0.0 { 0.0 } else { gamma_pq(n, b).1 };
    let mut t = dpois(n, b);
    let mut w = dpois(j as f64, a);
    let mut sum = Compensated::default();
    loop {
        sum.add(w * q);
        q += t;
        t *= b / (n + 1.0);
        w *= a / (j as f64 + 1.0);
        j += 1;
        n = h + j as f64;
        if (j - lo) % REFRESH == 0 || (t == 0.0 && n < b) {
            t = dpois(n, b);
            w = dpois(j as f64, a);
        }
        if (j as f64) > a {
            let rest = w / (1.0 - a / (j as f64 + 1.0));
            if w == 0.0 || rest <= SUM_EPS * sum.value() {
                break;
            }
        }
    }
    sum.value()
}

/// `sum_j w_j P(h + j, b)`: the lower tail. With `point_mass = false` the
/// `delta = 0` atom at the origin is left out.
pub(crate) fn lower_tail(h: f64, a: f64, b: f64, point_mass: bool) -> f64 {
    let atom = if h == 0.0 && point_mass {
        (-a).exp()
    } else {
        0.0
    };
    if b == 0.0 {
        return atom;
    }
    if b == f64::INFINITY {
        return if h == 0.0 && !point_mass {
            -(-a).exp_m1()
        } else {
            1.0
        };
    }
    if a == 0.0 {
        return if h == 0.0 { atom } else { gamma_pq(h, b).0 };
    }
    let (_, hi) = window(a);
    let mut j = hi;
    let mut n = h + j as f64;
    let mut p = gamma_pq(n, b).0;
    let mut t = dpois(n - 1.0, b);
    let mut w = dpois(j as f64, a);
    let mut sum = Compensated::default();
    loop {
        if n > 0.0 || point_mass {
            sum.add(w * p);
        }
        if j == 0 {
            break;
        }
        p += t;
        t *= (n - 1.0) / b;
        w *= j as f64 / a;
        j -= 1;
        n = h + j as f64;
        if (hi - j) % REFRESH == 0 || (t == 0.0 && n - 1.0 > b) {
            t = if n >= 1.0 { dpois(n - 1.0, b) } else { 0.0 };
            w = dpois(j as f64, a);
        }
        if j == 0 {
            // The last term carries the point mass; take it exactly.
            w = (-a).exp();
            p = if n > 0.0 { gamma_pq(n, b).0 } else { 1.0 };
        }
        if (j as f64) < a.floor() {
            // Terms j, j-1, ... are bounded by a geometric series in w_j.
            let rest = w / (1.0 - j as f64 / a);
            if w == 0.0 || rest <= SUM_EPS * sum.value() {
                break;
            }
        }
    }
    sum.value()
}

/// `S^{-1}` times the MMM call price: `tilde chi^2(y;4,x) - (y/x) tilde chi^2(y;0,x)`
/// written as `sum_i w_i E[(G_{i+1} - b)_+] / (i + 1)` with `G_n ~ Gamma(n)`.
/// Every term is nonnegative.
pub(crate) fn call_fraction(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 1.0;
    }
    let (lo, _) = window(a);
    let mut i = lo;
    // State at index i: excess = E[(G_{i+1} - b)+], q = Q(i+2, b), t = t(i+2).
    let mut excess = gamma_excess(i as f64 + 1.0, b);
    let mut q = gamma_pq(i as f64 + 2.0, b).1;
    let mut t = dpois(i as f64 + 2.0, b);
    let mut w = dpois(i as f64, a);
    let mut sum = Compensated::default();
    loop {
        sum.add(w * excess / (i as f64 + 1.0));
        excess += q;
        q += t;
        t *= b / (i as f64 + 3.0);
        w *= a / (i as f64 + 1.0);
        i += 1;
        if (i - lo) % REFRESH == 0 || (t == 0.0 && (i as f64 + 2.0) < b) {
            t = dpois(i as f64 + 2.0, b);
            w = dpois(i as f64, a);
        }
        if (i as f64) > a {
            let rest = w / (1.0 - a / (i as f64 + 1.0));
            if w == 0.0 || rest <= SUM_EPS * sum.value() {
                break;
            }
        }
    }
    sum.value()
}

/// `S^{-1}` times the MMM put price: `(y/x)(chi^2(y;0,x) - e^{-x/2}) - chi^2(y;4,x)`
/// written as `sum_i w_i E[(b - G_{i+1})_+] / (i + 1)`.
pub(crate) fn put_fraction(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        // Only the i = 0 term survives.
        return shortfall(1.0, b);
    }
    let (_, hi) = window(a);
    let mut i = hi;
    // State at index i: short = E[(b - G_{i+1})+], p = P(i+1, b), t = t(i).
    let mut short = shortfall(i as f64 + 1.0, b);
    let mut p = gamma_pq(i as f64 + 1.0, b).0;
    let mut t = dpois(i as f64, b);
    let mut w = dpois(i as f64, a);
    let mut sum = Compensated::default();
    loop {
        sum.add(w * short / (i as f64 + 1.0));
        if i == 0 {
            break;
        }
        short += p;
        p += t;
        t *= i as f64 / b;
        w *= i as f64 / a;
        i -= 1;
        if (hi - i) % REFRESH == 0 || (t == 0.0 && (i as f64) > b) {
            t = dpois(i as f64, b);
            w = dpois(i as f64, a);
        }
        if (i as f64) < a.floor() {
            // The shortfall never exceeds b.
            let rest = b * w / (1.0 - i as f64 / a);
            if w == 0.0 || rest <= SUM_EPS * sum.value() {
                break;
            }
        }
    }
    sum.value()
}

/// `E[(G_n - b)_+]` for integer `n >= 1`, `G_n ~ Gamma(n, 1)`.
fn gamma_excess(n: f64, b: f64) -> f64 {
    if n >= b {
        // (n - b) Q(n + 1, b) + b t(n, b); both terms nonnegative.
        (n - b) * gamma_pq(n + 1.0, b).1 + b * dpois(n, b)
    } else {
        // sum_{i<n} (n - i) t(i, b), expanded downward from i = n - 1.
        let mut v = 1.0;
        let mut sum = 1.0;
        let mut s = 1.0;
        while s < n {
            v *= (n - s) / b;
            sum += (s + 1.0) * v;
            if (s + 1.0) * v <= sum * f64::EPSILON * 0.25 {
                break;
            }
            s += 1.0;
        }
        dpois(n - 1.0, b) * sum
    }
}

/// `E[(b - G_n)_+]` for `n > 0`.
fn shortfall(n: f64, b: f64) -> f64 {
    if b >= n {
        // (b - n) P(n + 1, b) + b t(n, b)
        (b - n) * gamma_pq(n + 1.0, b).0 + b * dpois(n, b)
    } else {
        // t(n, b) sum_{s>=1} s b^s / ((n+1)...(n+s))
        let mut u = 1.0;
        let mut sum = 0.0;
        let mut s = 1.0;
        loop {
            u *= b / (n + s);
            let term = s * u;
            sum += term;
            if term <= sum * f64::EPSILON * 0.25 || s > 1e9 {
                break;
            }
            s += 1.0;
        }
        dpois(n, b) * sum
    }
}

/// Neumaier compensated summation.
#[derive(Default, Clone, Copy)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
