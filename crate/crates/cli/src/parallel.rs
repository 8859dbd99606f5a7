//! Thread fan-out for the surface and the Monte Carlo oracles.
//!
//! Work items are indexed; each worker takes a strided subset and results
//! are put back in index order, so the output never depends on the number
//! of threads.

use std::thread;

use mmm_core::oracle::{
    batch_count, batch_len, call_batch, chi2_batch, EulerScheme, McEstimate, Moments,
    TerminalSampler,
};
use mmm_core::surface::{self, SurfaceGrid};
use mmm_core::{ModelParams, Result};

/// Evaluates `f(0..n)` on up to `threads` workers, returning results in
/// index order.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let f = &f;
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|w| {
                scope.spawn(move || {
                    (w..n)
                        .step_by(threads)
                        .map(|i| (i, f(i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for worker in workers {
            for (i, value) in worker.join().expect("worker panicked") {
                slots[i] = Some(value);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every index evaluated"))
        .collect()
}

/// [`SurfaceGrid::generate`] with cells spread over `threads` workers.
pub fn generate_surface(
    params: &ModelParams,
    strikes: &[f64],
    expiries: &[f64],
    threads: usize,
) -> Result<SurfaceGrid> {
    SurfaceGrid::check(params, strikes, expiries)?;
    let width = strikes.len();
    let cells = map_indexed(width * expiries.len(), threads, |i| {
        surface::cell(params, strikes[i % width], expiries[i / width])
    });
    SurfaceGrid::assemble(params, strikes, expiries, cells)
}

fn merge_batches(
    n_paths: u64,
    threads: usize,
    batch: impl Fn(u64, u64) -> Moments + Sync,
) -> Moments {
    map_indexed(batch_count(n_paths) as usize, threads, |i| {
        let i = i as u64;
        batch(i, batch_len(n_paths, i))
    })
    .into_iter()
    .fold(Moments::default(), Moments::merge)
}

/// [`mmm_core::mc_call_price`] over `threads` workers; bit-identical to the
/// serial version.
pub fn mc_call_price(
    params: &ModelParams,
    strike: f64,
    expiry: f64,
    n_paths: u64,
    seed: u64,
    threads: usize,
) -> Result<McEstimate> {
    // The serial routine validates the arguments on a minimal run.
    mmm_core::mc_call_price(params, strike, expiry, n_paths.min(1000), seed)?;
    let sampler = TerminalSampler::new(params, expiry)?;
    let moments = merge_batches(n_paths, threads, |i, len| {
        call_batch(&sampler, params.spot, strike, seed, i, len)
    });
    Ok(McEstimate::from_moments(moments, seed))
}

/// Moments of the exact draws of `S_T e^{-rT} / phi(T)`.
pub fn chi2_moments(sampler: &TerminalSampler, n_paths: u64, seed: u64, threads: usize) -> Moments {
    merge_batches(n_paths, threads, |i, len| chi2_batch(sampler, seed, i, len))
}

/// Moments of the Euler terminal values `S_T`.
pub fn euler_moments(scheme: &EulerScheme, n_paths: u64, seed: u64, threads: usize) -> Moments {
    merge_batches(n_paths, threads, |i, len| scheme.batch(seed, i, len))
}

/// Moments of the exact draws of `S_T`.
pub fn terminal_moments(
    sampler: &TerminalSampler,
    n_paths: u64,
    seed: u64,
    threads: usize,
) -> Moments {
    let scaled = chi2_moments(sampler, n_paths, seed, threads);
    Moments {
        count: scaled.count,
        mean: scaled.mean * sampler.scale,
        m2: scaled.m2 * sampler.scale * sampler.scale,
    }
}

/// Worker count from `--threads`, defaulting to the available parallelism.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    requested
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: ModelParams = ModelParams::SP500_2009_01_27;

    #[test]
    fn order_is_independent_of_threads() {
        let serial = map_indexed(37, 1, |i| i * i);
        assert_eq!(map_indexed(37, 4, |i| i * i), serial);
        assert_eq!(map_indexed(37, 64, |i| i * i), serial);
        assert!(map_indexed(0, 3, |i| i).is_empty());
    }

    #[test]
    fn parallel_surface_equals_serial() {
        let strikes = [900.0, 1362.18, 2000.0];
        let expiries = [0.5, 2.0];
        let serial = SurfaceGrid::generate(&P, &strikes, &expiries).unwrap();
        for threads in [1, 2, 5] {
            let parallel = generate_surface(&P, &strikes, &expiries, threads).unwrap();
            assert_eq!(
                parallel
                    .iv
                    .concat()
                    .iter()
                    .map(|v| v.to_bits())
                    .collect::<Vec<_>>(),
                serial
                    .iv
                    .concat()
                    .iter()
                    .map(|v| v.to_bits())
                    .collect::<Vec<_>>()
            );
            assert_eq!(parallel, serial);
        }
    }

    #[test]
    fn parallel_mc_equals_serial() {
        let n = 3 * (1 << 16) + 17;
        let serial = mmm_core::mc_call_price(&P, 1400.0, 1.0, n, 5).unwrap();
        for threads in [1, 3, 8] {
            assert_eq!(
                mc_call_price(&P, 1400.0, 1.0, n, 5, threads).unwrap(),
                serial
            );
        }
        assert!(mc_call_price(&P, 1400.0, 1.0, 10, 5, 2).is_err());
    }
}
