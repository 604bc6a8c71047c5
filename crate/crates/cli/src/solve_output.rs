//! `key=value` layout printed by `beamfair solve`, and its parser.
//!
//! One key per line in a fixed order. Lists are comma separated; floats use
//! the shortest representation that parses back to the same value.

use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub method: String,
    /// Common rate fraction `c`.
    pub fraction: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Transmit powers in watts, in scenario row order.
    pub powers_w: Vec<f64>,
    /// Serving AP of each UE, 0-based.
    pub assignment: Vec<usize>,
    pub width_indices: Vec<usize>,
    pub direction_indices: Vec<usize>,
    pub beamwidths_deg: Vec<f64>,
    pub directions_deg: Vec<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

const KEYS: [&str; 10] = [
    "method",
    "fraction",
    "residual",
    "iterations",
    "powers_w",
    "assignment",
    "width_indices",
    "direction_indices",
    "beamwidths_deg",
    "directions_deg",
];

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn split<T: FromStr>(s: &str, line: usize) -> Result<Vec<T>, ParseError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.parse().map_err(|_| ParseError {
                line,
                msg: format!("cannot parse list element {t:?}"),
            })
        })
        .collect()
}

fn scalar<T: FromStr>(s: &str, line: usize) -> Result<T, ParseError> {
    s.parse().map_err(|_| ParseError {
        line,
        msg: format!("cannot parse value {s:?}"),
    })
}

impl SolveOutput {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let values = [
            self.method.clone(),
            self.fraction.to_string(),
            self.residual.to_string(),
            self.iterations.to_string(),
            join(&self.powers_w),
            join(&self.assignment),
            join(&self.width_indices),
            join(&self.direction_indices),
            join(&self.beamwidths_deg),
            join(&self.directions_deg),
        ];
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != KEYS.len() {
            return Err(ParseError {
                line: lines.len().min(KEYS.len()) + 1,
                msg: format!("expected {} lines, found {}", KEYS.len(), lines.len()),
            });
        }
        let mut vals = Vec::with_capacity(KEYS.len());
        for (i, (l, key)) in lines.iter().zip(KEYS).enumerate() {
            match l.split_once('=') {
                Some((k, v)) if k == key => vals.push((v, i + 1)),
                _ => {
                    return Err(ParseError {
                        line: i + 1,
                        msg: format!("expected key {key}"),
                    })
                }
            }
        }
        Ok(Self {
            method: vals[0].0.to_string(),
            fraction: scalar(vals[1].0, vals[1].1)?,
            residual: scalar(vals[2].0, vals[2].1)?,
            iterations: scalar(vals[3].0, vals[3].1)?,
            powers_w: split(vals[4].0, vals[4].1)?,
            assignment: split(vals[5].0, vals[5].1)?,
            width_indices: split(vals[6].0, vals[6].1)?,
            direction_indices: split(vals[7].0, vals[7].1)?,
            beamwidths_deg: split(vals[8].0, vals[8].1)?,
            directions_deg: split(vals[9].0, vals[9].1)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_every_bit() {
        let out = SolveOutput {
            method: "given".into(),
            fraction: 0.1 + 0.2,
            residual: 3.2e-17,
            iterations: 100,
            powers_w: vec![0.251_188_643_150_958, 1e-300, 0.0],
            assignment: vec![2, 0, 1],
            width_indices: vec![0, 1, 2],
            direction_indices: vec![2, 2, 0],
            beamwidths_deg: vec![30.0, 45.0, 60.0],
            directions_deg: vec![100.0, 100.0, 80.0],
        };
        assert_eq!(SolveOutput::parse(&out.render()).unwrap(), out);
    }

    #[test]
    fn wrong_key_reports_line() {
        let text = "method=x\nfrac=1\n";
        assert!(SolveOutput::parse(text).is_err());
        let mut good = SolveOutput {
            method: "x".into(),
            fraction: 1.0,
            residual: 0.0,
            iterations: 1,
            powers_w: vec![],
            assignment: vec![],
            width_indices: vec![],
            direction_indices: vec![],
            beamwidths_deg: vec![],
            directions_deg: vec![],
        }
        .render();
        good = good.replace("residual=", "resid=");
        assert_eq!(SolveOutput::parse(&good).unwrap_err().line, 3);
    }
}
