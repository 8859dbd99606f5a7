//! Long-format surface export and the matching parsers.
//!
//! CSV has one row per cell under the header
//! `expiry,strike,iv,small_limit,large_limit,status`, numbers written with
//! 17 significant digits so every value parses back to the same double.
//! JSON holds the same columns as arrays, with `null` for missing values.

use std::io::{Read, Write};
use std::str::FromStr;

use mmm_core::surface::{SurfaceGrid, STATUS_OK};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CSV_HEADER: [&str; 6] = [
    "expiry",
    "strike",
    "iv",
    "small_limit",
    "large_limit",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Columns of the long table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    pub expiry: Vec<f64>,
    pub strike: Vec<f64>,
    pub iv: Vec<Option<f64>>,
    pub small_limit: Vec<Option<f64>>,
    pub large_limit: Vec<f64>,
    pub status: Vec<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Columns {
    pub fn from_grid(grid: &SurfaceGrid) -> Self {
        let mut c = Columns::default();
        for (i, &t) in grid.expiries.iter().enumerate() {
            for (j, &k) in grid.strikes.iter().enumerate() {
                c.expiry.push(t);
                c.strike.push(k);
                c.iv.push(finite(grid.iv[i][j]));
                c.small_limit.push(finite(grid.small_limits[j]));
                c.large_limit.push(grid.large_limit);
                c.status.push(grid.status(i, j).to_string());
            }
        }
        c
    }

    /// Rebuilds the grid. Rows must be in export order: expiry-major, with
    /// the strikes of the first expiry repeated for every expiry.
    pub fn into_grid(self) -> Result<SurfaceGrid, CliError> {
        let bad = |m: &str| CliError::Format(m.to_string());
        let n = self.expiry.len();
        if [
            self.strike.len(),
            self.iv.len(),
            self.small_limit.len(),
            self.large_limit.len(),
            self.status.len(),
        ]
        .iter()
        .any(|&len| len != n)
        {
            return Err(bad("columns have different lengths"));
        }
        if n == 0 {
            return Err(bad("surface has no cells"));
        }
        let width = self
            .expiry
            .iter()
            .take_while(|&&t| t == self.expiry[0])
            .count();
        if n % width != 0 {
            return Err(bad("cell count is not a multiple of the strike count"));
        }
        let strikes = self.strike[..width].to_vec();
        let expiries: Vec<f64> = self.expiry.iter().step_by(width).copied().collect();
        let mut iv = Vec::with_capacity(expiries.len());
        let mut failures = Vec::new();
        for (row, &t) in expiries.iter().enumerate() {
            let mut values = Vec::with_capacity(width);
            for col in 0..width {
                let cell = row * width + col;
                if self.expiry[cell] != t || self.strike[cell] != strikes[col] {
                    return Err(bad("rows are not a complete expiry-major grid"));
                }
                if self.status[cell] != STATUS_OK {
                    failures.push((row, col, self.status[cell].clone()));
                }
                values.push(self.iv[cell].unwrap_or(f64::NAN));
            }
            iv.push(values);
        }
        Ok(SurfaceGrid {
            small_limits: self.small_limit[..width]
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect(),
            large_limit: self.large_limit[0],
            strikes,
            expiries,
            iv,
            failures,
        })
    }
}

fn output_error(e: std::io::Error) -> CliError {
    CliError::io(std::path::Path::new("<output>"), e)
}

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(String::new, number)
}

pub fn write_csv<W: Write>(grid: &SurfaceGrid, out: W) -> Result<(), CliError> {
    let c = Columns::from_grid(grid);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for i in 0..c.expiry.len() {
        w.write_record([
            number(c.expiry[i]),
            number(c.strike[i]),
            optional(c.iv[i]),
            optional(c.small_limit[i]),
            number(c.large_limit[i]),
            c.status[i].clone(),
        ])?;
    }
    w.flush().map_err(output_error)?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<SurfaceGrid, CliError> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(CliError::Format("unexpected CSV header".into()));
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Format(format!("`{s}` is not a number")))
    };
    let parse_opt = |s: &str| {
        if s.is_empty() {
            Ok(None)
        } else {
            parse(s).map(Some)
        }
    };
    let mut c = Columns::default();
    for record in r.records() {
        let record = record?;
        if record.len() != CSV_HEADER.len() {
            return Err(CliError::Format("wrong number of fields".into()));
        }
        c.expiry.push(parse(&record[0])?);
        c.strike.push(parse(&record[1])?);
        c.iv.push(parse_opt(&record[2])?);
        c.small_limit.push(parse_opt(&record[3])?);
        c.large_limit.push(parse(&record[4])?);
        c.status.push(record[5].to_string());
    }
    c.into_grid()
}

pub fn write_json<W: Write>(grid: &SurfaceGrid, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, &Columns::from_grid(grid))?;
    writeln!(out).map_err(output_error)
}

pub fn read_json<R: Read>(input: R) -> Result<SurfaceGrid, CliError> {
    let columns: Columns = serde_json::from_reader(input)?;
    columns.into_grid()
}

pub fn write<W: Write>(grid: &SurfaceGrid, format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(grid, out),
        Format::Json => write_json(grid, out),
    }
}

pub fn read<R: Read>(format: Format, input: R) -> Result<SurfaceGrid, CliError> {
    match format {
        Format::Csv => read_csv(input),
        Format::Json => read_json(input),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmm_core::{Error, ModelParams};

    const P: ModelParams = ModelParams::SP500_2009_01_27;

    fn bits(grid: &SurfaceGrid) -> Vec<u64> {
        grid.iv.concat().iter().map(|v| v.to_bits()).collect()
    }

    fn sample() -> SurfaceGrid {
        let cells = vec![
            Ok(0.2),
            Ok(0.123_456_789_012_345_68),
            Err(Error::NonConvergence { evaluations: 200 }),
            Ok(0.1 + 0.2),
        ];
        SurfaceGrid::assemble(&P, &[1000.0, 1362.18], &[0.1, 1.0 / 3.0], cells).unwrap()
    }

    #[test]
    fn single_cell_csv_has_two_lines() {
        let grid = SurfaceGrid::generate(&P, &[P.spot], &[1.0]).unwrap();
        let mut out = Vec::new();
        write_csv(&grid, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "expiry,strike,iv,small_limit,large_limit,status");
        assert!(lines[1].ends_with(",ok"));
        assert!(lines[1].starts_with("1.0000000000000000e0,1.3621800000000001e3,"));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let grid = sample();
        let mut out = Vec::new();
        write_csv(&grid, &mut out).unwrap();
        let back = read_csv(out.as_slice()).unwrap();
        assert_eq!(bits(&back), bits(&grid));
        assert_eq!(back.failures, grid.failures);
        assert_eq!(back.strikes, grid.strikes);
        assert_eq!(back.expiries, grid.expiries);
        assert_eq!(back.large_limit.to_bits(), grid.large_limit.to_bits());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let grid = sample();
        let mut out = Vec::new();
        write_json(&grid, &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.contains("null"));
        let back = read_json(out.as_slice()).unwrap();
        assert_eq!(bits(&back), bits(&grid));
        assert_eq!(back.failures, grid.failures);
        assert_eq!(back.small_limits, grid.small_limits);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let header = CSV_HEADER.join(",");
        assert!(read_csv(format!("{header}\n1,2,x,,3,ok\n").as_bytes()).is_err());
        assert!(read_csv(format!("{header}\n").as_bytes()).is_err());
        assert!(read_json(r#"{"expiry": [1]}"#.as_bytes()).is_err());
        assert!("xml".parse::<Format>().is_err());
    }
}
