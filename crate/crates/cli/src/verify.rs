//! The `verify` command: a fast invariant suite over the whole stack.
//!
//! The checks are sized to finish in seconds. The slow convergence studies
//! live in the acceptance tests.

use mmm_core::oracle::{
    batch_rng, ks_statistic, standard_normal, TerminalSampler, KS_CRITICAL_1PCT,
};
use mmm_core::specfun::{ncx2_cdf, ncx2_cdf_oracle, ncx2_pdf, ChiSquareArgs};
use mmm_core::surface::SurfaceGrid;
use mmm_core::{
    bs_call_mmm, call_price, call_theta, implied_vol, implied_vol_mmm, large_time_limit, put_price,
    rr_estimate_mmm, small_time_limit, zcb_price, ModelParams,
};

use crate::export::{self, Format};
use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Deterministic uniforms for the randomized checks.
struct Uniform(u64);

impl Uniform {
    fn next(&mut self) -> f64 {
        // splitmix64
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.next()
    }
}

fn list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn failure(name: &'static str, e: impl std::fmt::Display) -> Check {
    check(name, false, format!("error: {e}"))
}

macro_rules! attempt {
    ($name:expr, $body:expr) => {
        match (|| -> Result<Check, Box<dyn std::error::Error>> { Ok($body) })() {
            Ok(c) => c,
            Err(e) => failure($name, e),
        }
    };
}

fn parity(p: &ModelParams) -> Check {
    const NAME: &str = "put-call parity";
    attempt!(NAME, {
        let mut u = Uniform(1);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let k = p.spot * u.range(0.2, 5.0);
            let t = u.range(0.01, 100.0);
            let gap = call_price(p, k, t)? + k * zcb_price(p, t)? - put_price(p, k, t)? - p.spot;
            worst = worst.max((gap / p.spot).abs());
        }
        check(
            NAME,
            worst <= 1e-12,
            format!("max relative gap {worst:.3e}"),
        )
    })
}

fn arbitrage_bounds(p: &ModelParams) -> Check {
    const NAME: &str = "arbitrage bounds and C_T >= 0";
    attempt!(NAME, {
        let mut violations = 0;
        for i in 0..20 {
            for j in 0..20 {
                let k = p.spot * (0.3 + 0.15 * i as f64);
                let t = 0.05 * 1.5f64.powi(j);
                let c = call_price(p, k, t)?;
                let lower = (p.spot - k * zcb_price(p, t)?).max(0.0);
                if !(c >= lower && c <= p.spot && call_theta(p, k, t)? >= 0.0) {
                    violations += 1;
                }
            }
        }
        check(
            NAME,
            violations == 0,
            format!("{violations} violations on a 20x20 grid"),
        )
    })
}

fn small_time_atm(p: &ModelParams) -> Check {
    const NAME: &str = "small-time ATM limit";
    attempt!(NAME, {
        let limit = small_time_limit(p, p.spot)?;
        let mut errors = Vec::new();
        for t in [1e-2, 1e-3, 1e-4] {
            errors.push((implied_vol_mmm(p, p.spot, t)?.vol - limit).abs() / limit);
        }
        let ok = errors.windows(2).all(|w| w[1] < w[0]) && errors[2] <= 0.01;
        check(NAME, ok, format!("relative errors {}", list(&errors)))
    })
}

fn small_time_rr(p: &ModelParams) -> Check {
    const NAME: &str = "small-time Roper-Rutkowski trend";
    attempt!(NAME, {
        let mut ok = true;
        let mut detail = Vec::new();
        for k in [0.8 * p.spot, 1.25 * p.spot] {
            let limit = small_time_limit(p, k)?;
            let mut errors = Vec::new();
            for t in [1e-3, 1e-4, 1e-5] {
                errors.push((rr_estimate_mmm(p, k, t)? - limit).abs());
            }
            ok &= errors.windows(2).all(|w| w[1] < w[0]);
            detail.push(format!("K={:.2}: {}", k, list(&errors)));
        }
        check(NAME, ok, detail.join("; "))
    })
}

fn invariance(p: &ModelParams) -> Check {
    const NAME: &str = "rate invariance of the small-time limit";
    attempt!(NAME, {
        let shifted = ModelParams {
            rate: p.rate + 0.05,
            ..*p
        };
        let mut same = true;
        for k in [0.5, 0.8, 1.0, 1.25, 2.0] {
            same &= small_time_limit(p, k * p.spot)?.to_bits()
                == small_time_limit(&shifted, k * p.spot)?.to_bits();
        }
        let large = large_time_limit(p);
        let expected = (2.0 * (3.0 - 2.0 * std::f64::consts::SQRT_2) * (p.rate + p.eta)).sqrt();
        check(
            NAME,
            same && large == expected,
            format!("large-time limit {large}"),
        )
    })
}

fn chi_square(p: &ModelParams, threads: usize) -> Check {
    const NAME: &str = "noncentral chi-square";
    attempt!(NAME, {
        let mut u = Uniform(2);
        let mut worst: f64 = 0.0;
        for i in 0..24 {
            let delta = [0.0, 2.0, 4.0, 6.0][i % 4];
            let args = ChiSquareArgs::new(u.range(0.0, 60.0), delta, u.range(0.0, 40.0))?;
            worst = worst.max((ncx2_cdf(args)? - ncx2_cdf_oracle(args, 1e-12)?).abs());
        }
        let sampler = TerminalSampler::new(p, 1.0)?;
        let n = 20_000;
        let mut draws: Vec<f64> = parallel::map_indexed(4, threads, |b| {
            let mut rng = batch_rng(17, b as u64);
            (0..n / 4)
                .map(|_| sampler.sample_chi2(&mut rng))
                .collect::<Vec<_>>()
        })
        .concat();
        let cdf = |y: f64| {
            ncx2_cdf(ChiSquareArgs {
                y,
                delta: 4.0,
                x: sampler.x,
            })
            .unwrap_or(f64::NAN)
        };
        let d = ks_statistic(&mut draws, cdf);
        let critical = KS_CRITICAL_1PCT / (n as f64).sqrt();
        check(
            NAME,
            worst <= 1e-9 && d < critical,
            format!("max |cdf - quadrature| {worst:.2e}; KS D = {d:.4} < {critical:.4}"),
        )
    })
}

fn density_identities() -> Check {
    const NAME: &str = "density identities";
    attempt!(NAME, {
        let mut u = Uniform(3);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let (x, y) = (u.range(1e-3, 50.0), u.range(1e-3, 50.0));
            let p = |d: f64| ncx2_pdf(ChiSquareArgs { y, delta: d, x });
            let (p0, p2, p4, p6) = (p(0.0)?, p(2.0)?, p(4.0)?, p(6.0)?);
            if p4 > 1e-290 {
                worst = worst.max((p4 - y / x * p0).abs() / p4);
                worst = worst.max((p6 - y / x * p2 + 2.0 / x * p4).abs() / (2.0 / x * p4));
            }
        }
        check(
            NAME,
            worst <= 1e-11,
            format!("max relative error {worst:.2e}"),
        )
    })
}

fn monte_carlo(p: &ModelParams, threads: usize) -> Check {
    const NAME: &str = "Monte Carlo call price";
    attempt!(NAME, {
        let exact = call_price(p, p.spot, 1.0)?;
        let mc = parallel::mc_call_price(p, p.spot, 1.0, 200_000, 2009, threads)?;
        let z = (mc.mean - exact) / mc.stderr;
        check(
            NAME,
            z.abs() <= 3.0,
            format!(
                "analytic {exact:.6}, MC {:.6} +- {:.6}, z = {z:.2}",
                mc.mean, mc.stderr
            ),
        )
    })
}

fn inversion(p: &ModelParams) -> Check {
    const NAME: &str = "implied volatility round trip";
    attempt!(NAME, {
        let mut worst: f64 = 0.0;
        for (k, t, v) in [
            (0.8, 0.5, 0.15),
            (1.0, 2.0, 0.3),
            (1.5, 10.0, 0.2),
            (0.6, 0.1, 0.5),
        ] {
            let k = k * p.spot;
            let target = bs_call_mmm(p, k, t, v)?;
            worst = worst.max((implied_vol(p, k, t, target)?.vol - v).abs());
        }
        check(NAME, worst <= 1e-9, format!("max vol error {worst:.2e}"))
    })
}

fn export_round_trip(p: &ModelParams, threads: usize) -> Check {
    const NAME: &str = "surface export round trip";
    attempt!(NAME, {
        let strikes = [0.7 * p.spot, p.spot, 1.4 * p.spot];
        let grid = parallel::generate_surface(p, &strikes, &[0.25, 4.0], threads)?;
        let serial = SurfaceGrid::generate(p, &strikes, &[0.25, 4.0])?;
        let mut ok = grid == serial;
        for format in [Format::Csv, Format::Json] {
            let mut buffer = Vec::new();
            export::write(&grid, format, &mut buffer)?;
            let back = export::read(format, buffer.as_slice())?;
            ok &= back
                .iv
                .concat()
                .iter()
                .zip(grid.iv.concat())
                .all(|(a, b)| a.to_bits() == b.to_bits());
        }
        check(
            NAME,
            ok,
            format!("{} cells, parallel == serial", strikes.len() * 2),
        )
    })
}

/// Runs every check in a fixed order.
pub fn run_checks(params: &ModelParams, threads: usize) -> Vec<Check> {
    // Keep the sampler honest: a standard normal mean over a short stream.
    let mut rng = batch_rng(0, 0);
    let mean = (0..10_000).map(|_| standard_normal(&mut rng)).sum::<f64>() / 1e4;
    let normal = check(
        "normal generator",
        mean.abs() < 0.04,
        format!("mean of 1e4 draws {mean:.4}"),
    );
    vec![
        parity(params),
        arbitrage_bounds(params),
        small_time_atm(params),
        small_time_rr(params),
        invariance(params),
        chi_square(params, threads),
        density_identities(),
        normal,
        monte_carlo(params, threads),
        inversion(params),
        export_round_trip(params, threads),
    ]
}
