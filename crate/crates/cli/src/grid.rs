//! `a:b:n` grid specifications, inclusive of both ends.

use std::fmt;
use std::str::FromStr;

use mmm_core::surface::linspace;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn linear(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.count)
    }

    /// Evenly spaced in `ln` between the endpoints. Interior points are
    /// rounded to 15 significant digits so decade grids land on round
    /// numbers (`1e-5:1e-2:4` gives exactly 1e-4 and 1e-3).
    pub fn logarithmic(&self) -> Vec<f64> {
        let n = self.count;
        let step = (self.end / self.start).ln() / (n.max(2) - 1) as f64;
        (0..n)
            .map(|i| match i {
                0 => self.start,
                _ if i == n - 1 => self.end,
                _ => {
                    let v = self.start * (step * i as f64).exp();
                    format!("{v:.14e}").parse().expect("formatted float parses")
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("grid `{s}` is not of the form a:b:n"));
        };
        let number = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| format!("grid bound `{t}` is not a positive number"))
        };
        let (start, end) = (number(a)?, number(b)?);
        let count: usize = n
            .trim()
            .parse()
            .map_err(|_| format!("grid count `{n}` is not a positive integer"))?;
        if count == 0 {
            return Err("grid count must be positive".into());
        }
        if count > 1 && !(start < end) {
            return Err(format!("grid `{s}` must have a < b"));
        }
        if count == 1 && start != end {
            return Err(format!("grid `{s}` with one point needs a = b"));
        }
        Ok(Self { start, end, count })
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_expands() {
        let g: GridSpec = "0.1:10:20".parse().unwrap();
        let v = g.linear();
        assert_eq!((v.len(), v[0], v[19]), (20, 0.1, 10.0));
        let l: GridSpec = "1e-5:1e-2:4".parse().unwrap();
        let v = l.logarithmic();
        assert_eq!((v[0], v[3]), (1e-5, 1e-2));
        assert_eq!((v[1], v[2]), (1e-4, 1e-3));
        assert_eq!(
            "50:400:4".parse::<GridSpec>().unwrap().logarithmic(),
            vec![50.0, 100.0, 200.0, 400.0]
        );
        assert_eq!("5:5:1".parse::<GridSpec>().unwrap().linear(), vec![5.0]);
    }

    #[test]
    fn rejects_malformed_specs() {
        for bad in [
            "1:2", "1:2:0", "2:1:3", "a:2:3", "-1:2:3", "1:2:x", "1:2:3:4", "1:2:1",
        ] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        let g: GridSpec = "681.09:2724.36:21".parse().unwrap();
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
    }
}
