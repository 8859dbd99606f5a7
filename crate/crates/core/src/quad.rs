//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used as the independent oracle for the chi-square distribution functions
//! and, in log-scaled form, for option prices far below the floating-point
//! range.

use alloc::vec::Vec;

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// Default integrand-evaluation budget.
pub const DEFAULT_BUDGET: usize = 1_000_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for (i, &node) in XGK.iter().take(7).enumerate() {
        let dx = half * node;
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrate `f` over `[a, b]` until the summed error estimate is below
/// `abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_evals: usize,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("interval", "endpoints must be finite"));
    }
    if !(abs_tol > 0.0) {
        return Err(invalid("abs_tol", "must be positive"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let mut segments: Vec<Segment> = Vec::with_capacity(64);
    segments.push(kronrod(&mut f, a, b));
    let mut evaluations = 15;
    loop {
        let (value, error) = segments
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() {
            return Err(invalid("integrand", "produced a non-finite value"));
        }
        if error <= abs_tol {
            return Ok(Integral {
                value,
                abs_error: error,
                evaluations,
            });
        }
        if evaluations + 30 > max_evals {
            return Err(Error::NonConvergence { evaluations });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|l, r| l.1.error.total_cmp(&r.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval exhausted at double precision; keep its estimate.
            segments.push(Segment { error: 0.0, ..seg });
            continue;
        }
        segments.push(kronrod(&mut f, seg.a, mid));
        segments.push(kronrod(&mut f, mid, seg.b));
        evaluations += 30;
    }
}

/// Integrate `f` over `[a, inf)` through `z = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    max_evals: usize,
) -> Result<Integral> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            let v = f(a + t / u) / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        max_evals,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `[start, inf)`
    Up,
    /// `[0, start]`
    Down,
}

/// `ln ∫ exp(g(z)) dz` over `[start, inf)` or `[0, start]`, for integrands
/// whose mass sits within a few multiples of `scale` from `start`. The
/// integrand is normalised by its largest sampled value so the quadrature
/// never sees numbers outside the floating-point range.
pub fn ln_integral<G: FnMut(f64) -> f64>(
    mut g: G,
    start: f64,
    scale: f64,
    direction: Direction,
) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite() && start >= 0.0) {
        return Err(invalid("scale", "must be positive and finite"));
    }
    const REACH: f64 = 200.0;
    let (sign, reach) = match direction {
        Direction::Up => (1.0, REACH),
        Direction::Down => (-1.0, REACH.min(start / scale)),
    };
    let mut at = |s: f64| g(start + sign * scale * s);
    let peak = [1e-3, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .filter(|&&s| s < reach)
        .map(|&s| at(s))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut normalised = |s: f64| {
        let v = (at(s) - peak).exp();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // The exponent carries rounding noise of order eps * |peak|, so the
    // tolerance is relative to a coarse first pass and never below that noise.
    let coarse = integrate(&mut normalised, 0.0, reach, 1e-6, DEFAULT_BUDGET)?.value;
    if coarse <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let rel_tol = 1e-12f64.max(32.0 * f64::EPSILON * peak.abs());
    let fine = integrate(
        &mut normalised,
        0.0,
        reach,
        rel_tol * coarse,
        DEFAULT_BUDGET,
    )?;
    Ok(peak + scale.ln() + fine.value.ln())
}
