//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use mmm_core::asymptotics::LimitRow;
use mmm_core::surface::{default_expiries, default_strikes};
use mmm_core::{
    call_price, convergence_report, implied_vol_mmm, large_time_limit, put_price, rr_estimate_mmm,
    small_time_limit, zcb_price, ModelParams,
};

use crate::config::Config;
use crate::error::CliError;
use crate::export::{self, Format};
use crate::grid::GridSpec;
use crate::parallel;
use crate::verify;

const DEFAULT_PATHS: u64 = 1_000_000;
const DEFAULT_SEED: u64 = 20_090_127;

#[derive(Debug, Parser)]
#[command(
    name = "mmm",
    version,
    about = "Minimal market model option prices and implied volatility"
)]
pub struct Cli {
    /// JSON config with keys S, r, alpha, eta (default: built-in reference calibration).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub spot: Option<f64>,
    #[arg(long, global = true)]
    pub rate: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Worker threads for surface, mc-check and verify (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Call,
    Put,
    Zcb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MMM call, put or zero-coupon bond price.
    Price {
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long)]
        expiry: f64,
        #[arg(long, value_enum, default_value_t = Kind::Call)]
        kind: Kind,
    },
    /// Black-Scholes implied volatility of the MMM call.
    Iv {
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        expiry: f64,
    },
    /// Closed-form small-time and large-time limits.
    Limits {
        #[arg(long)]
        strike: f64,
    },
    /// Roper-Rutkowski estimate at a finite expiry.
    Rr {
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        expiry: f64,
    },
    /// Implied-volatility surface export.
    Surface {
        /// Strike grid a:b:n (default 0.5S:2S:21).
        #[arg(long)]
        strikes: Option<GridSpec>,
        /// Expiry grid a:b:n (default 0.1:10:20).
        #[arg(long)]
        expiries: Option<GridSpec>,
        /// Space expiries evenly in ln T.
        #[arg(long)]
        log_expiries: bool,
        /// Output file; standard output when absent or `-`.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Convergence of the implied volatility towards both limits.
    Converge {
        #[arg(long)]
        strike: f64,
        /// Small-time expiries, log-spaced, tabulated from the largest down.
        #[arg(long, default_value = "1e-5:1e-2:4")]
        small: GridSpec,
        /// Large-time expiries, log-spaced.
        #[arg(long, default_value = "50:400:4")]
        large: GridSpec,
    },
    /// Analytic call price against the exact Monte Carlo estimate.
    McCheck {
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        expiry: f64,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the invariant suite; exits nonzero if any check fails.
    Verify,
}

/// Runs the command line with the process streams. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            let _ = writeln!(err, "ERROR usage: {first}");
            return 2;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) if e.is_broken_pipe() => 0,
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "ERROR {}: {}", e.code(), single_line(&e.to_string()));
            e.exit_code()
        }
    }
}

/// Shortest round-trip decimal, in exponent form when very small or large.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn io(e: std::io::Error) -> CliError {
    CliError::io(std::path::Path::new("<stdout>"), e)
}

macro_rules! emit {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(io)?
    };
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let base = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::reference(),
    };
    base.with_overrides(cli.spot, cli.rate, cli.alpha, cli.eta)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(cli)?;
    if cli.dump_config {
        emit!(out, "{}", config.to_json());
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Usage(
            "a subcommand is required (see --help)".into(),
        ));
    };
    let params = config.params()?;
    let threads = parallel::resolve_threads(cli.threads);
    match command {
        Command::Price {
            strike,
            expiry,
            kind,
        } => price(out, &params, *strike, *expiry, *kind),
        Command::Iv { strike, expiry } => iv(out, &params, *strike, *expiry),
        Command::Limits { strike } => {
            emit!(
                out,
                "small_time_limit {}",
                num(small_time_limit(&params, *strike)?)
            );
            emit!(out, "large_time_limit {}", num(large_time_limit(&params)));
            Ok(())
        }
        Command::Rr { strike, expiry } => {
            emit!(
                out,
                "rr_estimate {}",
                num(rr_estimate_mmm(&params, *strike, *expiry)?)
            );
            emit!(
                out,
                "small_time_limit {}",
                num(small_time_limit(&params, *strike)?)
            );
            Ok(())
        }
        Command::Surface {
            strikes,
            expiries,
            log_expiries,
            out: path,
            format,
        } => {
            let strikes = strikes
                .or(config.defaults.strikes)
                .map_or_else(|| default_strikes(params.spot), |g| g.linear());
            let expiries = match expiries.or(config.defaults.expiries) {
                Some(g) if *log_expiries => g.logarithmic(),
                Some(g) => g.linear(),
                None => default_expiries(),
            };
            let grid = parallel::generate_surface(&params, &strikes, &expiries, threads)?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            match path.as_deref().filter(|p| p.as_os_str() != "-") {
                Some(p) => {
                    let file = File::create(p).map_err(|e| CliError::io(p, e))?;
                    let mut writer = BufWriter::new(file);
                    export::write(&grid, format, &mut writer)?;
                    writer.flush().map_err(|e| CliError::io(p, e))?;
                    emit!(
                        out,
                        "wrote {} cells ({} failed) to {}",
                        strikes.len() * expiries.len(),
                        grid.failures.len(),
                        p.display()
                    );
                }
                None => export::write(&grid, format, &mut *out)?,
            }
            Ok(())
        }
        Command::Converge {
            strike,
            small,
            large,
        } => {
            let mut small_grid = small.logarithmic();
            small_grid.reverse();
            converge(out, &params, *strike, &small_grid, &large.logarithmic())
        }
        Command::McCheck {
            strike,
            expiry,
            paths,
            seed,
        } => {
            let paths = paths.or(config.defaults.paths).unwrap_or(DEFAULT_PATHS);
            let seed = seed.or(config.defaults.seed).unwrap_or(DEFAULT_SEED);
            let analytic = call_price(&params, *strike, *expiry)?;
            let mc = parallel::mc_call_price(&params, *strike, *expiry, paths, seed, threads)?;
            emit!(out, "analytic {}", num(analytic));
            emit!(out, "monte_carlo {}", num(mc.mean));
            emit!(out, "stderr {}", num(mc.stderr));
            emit!(out, "z_score {}", num((mc.mean - analytic) / mc.stderr));
            emit!(out, "paths {}", mc.n_paths);
            emit!(out, "seed {}", mc.seed);
            Ok(())
        }
        Command::Verify => {
            let checks = verify::run_checks(&params, threads);
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                emit!(
                    out,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            emit!(
                out,
                "verify: {} of {} checks passed",
                checks.len() - failed,
                checks.len()
            );
            if failed > 0 {
                return Err(CliError::Verification {
                    failed,
                    total: checks.len(),
                });
            }
            Ok(())
        }
    }
}

fn price(
    out: &mut dyn Write,
    params: &ModelParams,
    strike: Option<f64>,
    expiry: f64,
    kind: Kind,
) -> Result<(), CliError> {
    let need_strike =
        || strike.ok_or_else(|| CliError::Usage("--strike is required for call and put".into()));
    let (label, value) = match kind {
        Kind::Call => ("call", call_price(params, need_strike()?, expiry)?),
        Kind::Put => ("put", put_price(params, need_strike()?, expiry)?),
        Kind::Zcb => ("zcb", zcb_price(params, expiry)?),
    };
    emit!(out, "{label} {}", num(value));
    Ok(())
}

fn iv(out: &mut dyn Write, params: &ModelParams, strike: f64, expiry: f64) -> Result<(), CliError> {
    let r = implied_vol_mmm(params, strike, expiry)?;
    emit!(out, "implied_vol {}", num(r.vol));
    emit!(out, "iterations {}", r.iterations);
    emit!(out, "residual {}", num(r.residual));
    emit!(out, "bracket {} {}", num(r.bracket.0), num(r.bracket.1));
    emit!(out, "call {}", num(call_price(params, strike, expiry)?));
    emit!(
        out,
        "small_time_limit {}",
        num(small_time_limit(params, strike)?)
    );
    emit!(out, "large_time_limit {}", num(large_time_limit(params)));
    Ok(())
}

fn cell(v: &mmm_core::Result<f64>, limit: f64) -> (String, String) {
    match v {
        Ok(v) => (num(*v), num(v - limit)),
        Err(e) => (format!("error:{}", e.code()), String::from("-")),
    }
}

fn converge(
    out: &mut dyn Write,
    params: &ModelParams,
    strike: f64,
    small: &[f64],
    large: &[f64],
) -> Result<(), CliError> {
    let report = convergence_report(params, strike, small, large)?;
    emit!(out, "strike {}", num(report.strike));
    emit!(out, "small_time_limit {}", num(report.limit_small));
    emit!(out, "large_time_limit {}", num(report.limit_large));
    emit!(out, "regime,expiry,iv,iv_error,rr,rr_error");
    let rows = |regime: &str,
                rows: &[LimitRow],
                limit: f64,
                out: &mut dyn Write|
     -> Result<(), CliError> {
        for row in rows {
            let (iv, iv_err) = cell(&row.iv, limit);
            let (rr, rr_err) = cell(&row.rr, limit);
            emit!(
                out,
                "{regime},{},{iv},{iv_err},{rr},{rr_err}",
                num(row.expiry)
            );
        }
        Ok(())
    };
    rows("small", &report.small, report.limit_small, out)?;
    rows("large", &report.large, report.limit_large, out)?;
    emit!(out, "small_iv_converges {}", report.small_iv_converges());
    emit!(out, "small_rr_converges {}", report.small_rr_converges());
    emit!(out, "large_iv_converges {}", report.large_iv_converges());
    Ok(())
}
