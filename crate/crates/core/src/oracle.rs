//! Independent verification oracles.
//!
//! The terminal index is sampled exactly: `S_T e^{-rT} / phi(T)` is
//! noncentral chi-square with four degrees of freedom and noncentrality
//! `x = S / phi(T)`, realised as `(sqrt(x) + Z1)^2 + Z2^2 + Z3^2 + Z4^2`.
//! An Euler scheme for the index SDE is provided only to certify that law.
//!
//! Paths are generated in fixed-size batches. Batch `i` of seed `s` draws
//! from ChaCha20 keyed by `s` on stream `i`, so any scheduling of batches
//! over threads reproduces the same numbers, and batch statistics are merged
//! in batch order.

use alloc::vec::Vec;
#[allow(unused_imports)] // the inherent methods win when std is linked
use num_traits::Float;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{invalid, Result};
use crate::mmm::{phi, ModelParams};
use crate::specfun::norm_inv;

/// Paths per reproducible batch.
pub const BATCH_SIZE: u64 = 1 << 16;

/// Kolmogorov–Smirnov asymptotic critical value at the 1% level, to be
/// divided by `sqrt(n)`.
pub const KS_CRITICAL_1PCT: f64 = 1.627_6;

/// Running mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Pairwise combination of two disjoint samples.
    pub fn merge(self, other: Moments) -> Moments {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * (nb / n),
            m2: self.m2 + other.m2 + delta * delta * (na * nb / n),
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Monte Carlo estimate of an expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_moments(moments: Moments, seed: u64) -> Self {
        Self {
            mean: moments.mean,
            stderr: moments.stderr(),
            n_paths: moments.count,
            seed,
        }
    }
}

/// Random stream for batch `batch` of `seed`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Standard normal by inversion of a uniform on the open unit interval.
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    norm_inv(u)
}

/// Exact sampler of the terminal index for one expiry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalSampler {
    /// `phi(T) e^{rT}`, the factor mapping the chi-square draw to `S_T`.
    pub scale: f64,
    /// Noncentrality `x = S / phi(T)`.
    pub x: f64,
    sqrt_x: f64,
}

impl TerminalSampler {
    pub fn new(params: &ModelParams, expiry: f64) -> Result<Self> {
        params.validate()?;
        if !(expiry > 0.0) {
            return Err(invalid("T", "expiry must be positive"));
        }
        let p = phi(params, expiry)?.phi;
        let x = params.spot / p;
        Ok(Self {
            scale: p * (params.rate * expiry).exp(),
            x,
            sqrt_x: x.sqrt(),
        })
    }

    /// One draw of `S_T e^{-rT} / phi(T)`.
    pub fn sample_chi2<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let z1 = self.sqrt_x + standard_normal(rng);
        let z2 = standard_normal(rng);
        let z3 = standard_normal(rng);
        let z4 = standard_normal(rng);
        z1 * z1 + z2 * z2 + z3 * z3 + z4 * z4
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.sample_chi2(rng)
    }
}

/// One exact draw of `S_T`.
pub fn sample_terminal<R: RngCore + ?Sized>(
    params: &ModelParams,
    expiry: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(TerminalSampler::new(params, expiry)?.sample(rng))
}

/// Number of batches covering `n_paths`, and the length of batch `index`.
pub fn batch_count(n_paths: u64) -> u64 {
    n_paths.div_ceil(BATCH_SIZE)
}

pub fn batch_len(n_paths: u64, index: u64) -> u64 {
    (n_paths - index * BATCH_SIZE).min(BATCH_SIZE)
}

/// Benchmarked call payoff `S (S_T - K)_+ / S_T` over one batch.
pub fn call_batch(
    sampler: &TerminalSampler,
    spot: f64,
    strike: f64,
    seed: u64,
    index: u64,
    len: u64,
) -> Moments {
    let mut rng = batch_rng(seed, index);
    let mut m = Moments::default();
    for _ in 0..len {
        let s_t = sampler.sample(&mut rng);
        let payoff = if s_t > strike {
            spot * (1.0 - strike / s_t)
        } else {
            0.0
        };
        m.push(payoff);
    }
    m
}

/// Exact Monte Carlo price of the call, computed serially.
pub fn mc_call_price(
    params: &ModelParams,
    strike: f64,
    expiry: f64,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_paths(n_paths)?;
    if !(strike >= 0.0 && strike.is_finite()) {
        return Err(invalid("K", "strike must be nonnegative and finite"));
    }
    let sampler = TerminalSampler::new(params, expiry)?;
    let moments = (0..batch_count(n_paths))
        .map(|i| {
            call_batch(
                &sampler,
                params.spot,
                strike,
                seed,
                i,
                batch_len(n_paths, i),
            )
        })
        .fold(Moments::default(), Moments::merge);
    Ok(McEstimate::from_moments(moments, seed))
}

/// Moments of the exact `S_T e^{-rT} / phi(T)` over one batch.
pub fn chi2_batch(sampler: &TerminalSampler, seed: u64, index: u64, len: u64) -> Moments {
    let mut rng = batch_rng(seed, index);
    let mut m = Moments::default();
    for _ in 0..len {
        m.push(sampler.sample_chi2(&mut rng));
    }
    m
}

/// Euler–Maruyama with full truncation for
/// `dS = (r S + a(t)) dt + sqrt(a(t) S) dW`, `a(t) = alpha e^{(r+eta)t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerScheme {
    pub params: ModelParams,
    pub expiry: f64,
    /// `(a(t_i) dt, sqrt(a(t_i) dt))` for each step.
    coefficients: Vec<(f64, f64)>,
}

impl EulerScheme {
    pub fn new(params: &ModelParams, expiry: f64, steps: u32) -> Result<Self> {
        TerminalSampler::new(params, expiry)?;
        if steps == 0 {
            return Err(invalid("steps", "must be positive"));
        }
        let dt = expiry / steps as f64;
        let coefficients = (0..steps)
            .map(|i| {
                let a_dt = params.alpha * ((params.rate + params.eta) * (i as f64 * dt)).exp() * dt;
                (a_dt, a_dt.sqrt())
            })
            .collect();
        Ok(Self {
            params: *params,
            expiry,
            coefficients,
        })
    }

    pub fn steps(&self) -> usize {
        self.coefficients.len()
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let r_dt = self.params.rate * self.expiry / self.steps() as f64;
        let mut s = self.params.spot;
        for &(a_dt, root) in &self.coefficients {
            let positive = s.max(0.0);
            s += r_dt * positive + a_dt + root * positive.sqrt() * standard_normal(rng);
        }
        s.max(0.0)
    }

    /// Moments of `S_T` over one batch.
    pub fn batch(&self, seed: u64, index: u64, len: u64) -> Moments {
        let mut rng = batch_rng(seed, index);
        let mut m = Moments::default();
        for _ in 0..len {
            m.push(self.sample(&mut rng));
        }
        m
    }
}

/// Exact mean of `S_T`: `e^{rT} (S + 4 phi(T))`.
pub fn terminal_mean(params: &ModelParams, expiry: f64) -> Result<f64> {
    Ok((params.rate * expiry).exp() * (params.spot + 4.0 * phi(params, expiry)?.phi))
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`. Sorts in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let f = cdf(v);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

fn check_paths(n_paths: u64) -> Result<()> {
    if n_paths < 1000 {
        return Err(invalid("n_paths", "at least 1000 paths are required"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    First,
    Second,
}

/// Central difference of `f` at `t`.
pub fn finite_diff(f: impl Fn(f64) -> f64, t: f64, order: DiffOrder, step: f64) -> Result<f64> {
    if !(step > 0.0) || !(t - step > 0.0) {
        return Err(invalid("step", "need step > 0 and T - step > 0"));
    }
    let (up, down) = (f(t + step), f(t - step));
    Ok(match order {
        DiffOrder::First => (up - down) / (2.0 * step),
        DiffOrder::Second => (up - 2.0 * f(t) + down) / (step * step),
    })
}
