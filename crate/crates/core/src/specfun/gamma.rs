//! Poisson probabilities and regularized incomplete gamma functions.
//!
//! The Poisson mass uses Loader's saddle-point form, which keeps full
//! relative accuracy for means in the billions; the naive
//! `exp(n ln z - z - lgamma(n+1))` loses most of its digits there.

#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const TINY: f64 = 1e-300;

/// `stirlerr(k / 2)` for `k = 0..=30`.
const STIRLERR_HALVES: [f64; 31] = [
    0.0,
    1.5342640972002735e-1,
    8.1061466795327258e-2,
    5.4814121051917654e-2,
    4.1340695955409294e-2,
    3.3162873519936287e-2,
    2.7677925684998339e-2,
    2.3746163656297496e-2,
    2.0790672103765093e-2,
    1.8488450532673185e-2,
    1.6644691189821192e-2,
    1.5134973221917379e-2,
    1.3876128823070748e-2,
    1.2810465242920227e-2,
    1.189670994589177e-2,
    1.1104559758206917e-2,
    1.0411265261972096e-2,
    9.7994161261588033e-3,
    9.2554621827127329e-3,
    8.7687001341393855e-3,
    8.3305634333628713e-3,
    7.9341145643140205e-3,
    7.5736754879518408e-3,
    7.2445543013203832e-3,
    6.9428401072095299e-3,
    6.6652470327076824e-3,
    6.4089941880042071e-3,
    6.1717122630394576e-3,
    5.9513701127588477e-3,
    5.7462165130101157e-3,
    5.5547335519628014e-3,
];

/// Error of Stirling's approximation: `ln n! - (n + 1/2) ln n + n - ln sqrt(2 pi)`.
pub(crate) fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let twice = 2.0 * n;
        if twice == twice.round() {
            return STIRLERR_HALVES[twice as usize];
        }
        return libm::lgamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m - x`, accurate when `x ~ m`.
pub(crate) fn bd0(x: f64, m: f64) -> f64 {
    let diff = x - m;
    if diff.abs() < 0.1 * (x + m) {
        let v = diff / (x + m);
        let v2 = v * v;
        let mut s = diff * v;
        let mut ej = 2.0 * x * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s || j > 1000.0 {
                return next;
            }
            s = next;
            j += 1.0;
        }
    }
    x * (x / m).ln() + m - x
}

/// `e^{-m} m^n / Gamma(n + 1)` for real `n >= 0`.
pub(crate) fn dpois(n: f64, m: f64) -> f64 {
    if m == 0.0 {
        return if n == 0.0 { 1.0 } else { 0.0 };
    }
    if n == 0.0 {
        return (-m).exp();
    }
    if n < 0.0 || m == f64::INFINITY {
        return 0.0;
    }
    (-stirlerr(n) - bd0(n, m)).exp() / (core::f64::consts::TAU * n).sqrt()
}

/// Regularized incomplete gamma pair `(P(n, z), Q(n, z))` for `n > 0`,
/// `z >= 0`. Whichever of the two is smaller is computed directly, so both
/// keep relative accuracy in their tails.
pub(crate) fn gamma_pq(n: f64, z: f64) -> (f64, f64) {
    debug_assert!(n > 0.0 && z >= 0.0);
    if z == 0.0 {
        return (0.0, 1.0);
    }
    if z == f64::INFINITY {
        return (1.0, 0.0);
    }
    if z < n + 1.0 {
        let p = lower_series(n, z);
        (p, 1.0 - p)
    } else {
        let q = upper_fraction(n, z);
        (1.0 - q, q)
    }
}

fn iteration_cap(n: f64) -> usize {
    // Both expansions need O(sqrt(n)) terms near the transition z ~ n.
    2_000 + (200.0 * n.sqrt()) as usize
}

fn lower_series(n: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    for _ in 0..iteration_cap(n) {
        term *= z / (n + k);
        sum += term;
        if term <= sum * f64::EPSILON * 0.25 {
            break;
        }
        k += 1.0;
    }
    dpois(n, z) * sum
}

fn upper_fraction(n: f64, z: f64) -> f64 {
    // Modified Lentz evaluation of the Legendre continued fraction.
    let mut b = z + 1.0 - n;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    let mut i = 1.0;
    for _ in 0..iteration_cap(n) {
        let an = -i * (i - n);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
        i += 1.0;
    }
    n * dpois(n, z) * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn poisson_mass_matches_direct_formula() {
        for &(n, m) in &[
            (0.0, 2.5),
            (3.0, 2.5),
            (10.0, 7.0),
            (40.0, 55.0),
            (2.5, 1.0),
        ] {
            let direct = (n * f64::ln(m) - m - libm::lgamma(n + 1.0)).exp();
            assert!(rel(dpois(n, m), direct) < 1e-13, "n={n} m={m}");
        }
    }

    #[test]
    fn poisson_mass_large_mean_normal_limit() {
        // At the mode of a huge-mean Poisson the mass is ~ 1/sqrt(2 pi m).
        let m = 6.0e9;
        let p = dpois(m, m);
        let approx = 1.0 / (core::f64::consts::TAU * m).sqrt();
        assert!(rel(p, approx) < 1e-10);
    }

    #[test]
    fn incomplete_gamma_exponential_case() {
        for &z in &[0.1, 1.0, 2.0, 7.5, 40.0] {
            let (p, q) = gamma_pq(1.0, z);
            assert!(rel(q, (-z).exp()) < 1e-14);
            assert!((p + q - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn incomplete_gamma_integer_order_is_poisson_tail() {
        // Q(n, z) = sum_{k<n} e^{-z} z^k / k!
        for &(n, z) in &[(3u32, 1.0), (5, 9.0), (12, 4.0), (30, 45.0)] {
            let mut term = (-z).exp();
            let mut tail = term;
            for k in 1..n {
                term *= z / f64::from(k);
                tail += term;
            }
            let (_, q) = gamma_pq(f64::from(n), z);
            assert!(rel(q, tail) < 1e-13, "n={n} z={z}");
        }
    }
}
