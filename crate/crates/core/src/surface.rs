//! Implied-volatility surface over a strike × expiry grid, with the
//! closed-form small-time and large-time limits as overlays.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::asymptotics::{large_time_limit, small_time_limit};
use crate::error::{invalid, Error, Result};
use crate::implied_vol::implied_vol_mmm;
use crate::mmm::ModelParams;

/// Cell status for a successful inversion.
pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub strikes: Vec<f64>,
    pub expiries: Vec<f64>,
    /// Row-major, one row per expiry. Failed cells hold NaN.
    pub iv: Vec<Vec<f64>>,
    /// Small-time limit per strike; NaN where it is undefined.
    pub small_limits: Vec<f64>,
    pub large_limit: f64,
    /// `(row, col, error code)` of every failed cell.
    pub failures: Vec<(usize, usize, String)>,
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * (i as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

/// Default strikes, 21 points over `[S/2, 2S]`.
pub fn default_strikes(spot: f64) -> Vec<f64> {
    linspace(0.5 * spot, 2.0 * spot, 21)
}

/// Default expiries, 20 points over `[0.1, 10]`.
pub fn default_expiries() -> Vec<f64> {
    linspace(0.1, 10.0, 20)
}

/// Checks that a grid is nonempty, finite, positive and strictly increasing.
pub fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    if !grid.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return Err(invalid(name, "grid values must be positive and finite"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}

/// Implied volatility of one cell.
pub fn cell(params: &ModelParams, strike: f64, expiry: f64) -> Result<f64> {
    let vol = implied_vol_mmm(params, strike, expiry)?.vol;
    if vol > 0.0 {
        Ok(vol)
    } else {
        Err(Error::AtBound {
            bound: crate::error::Bound::Lower,
        })
    }
}

impl SurfaceGrid {
    /// Serial generation. Any evaluation order of [`cell`] gives the same
    /// grid through [`SurfaceGrid::assemble`].
    pub fn generate(params: &ModelParams, strikes: &[f64], expiries: &[f64]) -> Result<Self> {
        Self::check(params, strikes, expiries)?;
        let cells = expiries
            .iter()
            .flat_map(|&t| strikes.iter().map(move |&k| cell(params, k, t)))
            .collect();
        Self::assemble(params, strikes, expiries, cells)
    }

    pub fn check(params: &ModelParams, strikes: &[f64], expiries: &[f64]) -> Result<()> {
        params.validate()?;
        check_grid("strikes", strikes)?;
        check_grid("expiries", expiries)
    }

    /// Builds the grid from row-major cell results.
    pub fn assemble(
        params: &ModelParams,
        strikes: &[f64],
        expiries: &[f64],
        cells: Vec<Result<f64>>,
    ) -> Result<Self> {
        Self::check(params, strikes, expiries)?;
        if cells.len() != strikes.len() * expiries.len() {
            return Err(invalid("cells", "count must equal |strikes| x |expiries|"));
        }
        let width = strikes.len();
        let mut iv = Vec::with_capacity(expiries.len());
        let mut failures = Vec::new();
        let mut row = Vec::with_capacity(width);
        for (index, result) in cells.into_iter().enumerate() {
            match result {
                Ok(v) => row.push(v),
                Err(e) => {
                    failures.push((index / width, index % width, e.code().to_string()));
                    row.push(f64::NAN);
                }
            }
            if row.len() == width {
                iv.push(core::mem::replace(&mut row, Vec::with_capacity(width)));
            }
        }
        let small_limits = strikes
            .iter()
            .map(|&k| small_time_limit(params, k).unwrap_or(f64::NAN))
            .collect();
        Ok(Self {
            strikes: strikes.to_vec(),
            expiries: expiries.to_vec(),
            iv,
            small_limits,
            large_limit: large_time_limit(params),
            failures,
        })
    }

    /// Status of a cell: [`STATUS_OK`] or the error code.
    pub fn status(&self, row: usize, col: usize) -> &str {
        self.failures
            .iter()
            .find(|(r, c, _)| *r == row && *c == col)
            .map_or(STATUS_OK, |(_, _, code)| code.as_str())
    }

    /// Spread `max - min` of the successful cells in one expiry row.
    pub fn skew_range(&self, row: usize) -> f64 {
        let finite = self.iv[row].iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        hi - lo
    }
}
