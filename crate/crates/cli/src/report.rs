//! Run reports and full-precision CSV output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;

/// One reported statistic: named estimator, seed, value, interval.
#[derive(Debug, Clone, Serialize)]
pub struct StatRow {
    pub name: String,
    pub estimator: String,
    /// "exact" for enumeration identities, "statistical" for Monte Carlo.
    pub kind: String,
    pub value: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub n_samples: u64,
    pub seed: u64,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

impl StatRow {
    pub fn exact(name: &str, estimator: &str, value: f64) -> StatRow {
        StatRow {
            name: name.into(),
            estimator: estimator.into(),
            kind: "exact".into(),
            value,
            ci_lo: None,
            ci_hi: None,
            n_samples: 0,
            seed: 0,
            threshold: None,
            pass: None,
        }
    }

    pub fn statistical(name: &str, estimator: &str, value: f64, n: u64, seed: u64) -> StatRow {
        StatRow {
            name: name.into(),
            estimator: estimator.into(),
            kind: "statistical".into(),
            value,
            ci_lo: None,
            ci_hi: None,
            n_samples: n,
            seed,
            threshold: None,
            pass: None,
        }
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> StatRow {
        self.ci_lo = Some(lo);
        self.ci_hi = Some(hi);
        self
    }

    pub fn checked(mut self, threshold: f64, pass: bool) -> StatRow {
        self.threshold = Some(threshold);
        self.pass = Some(pass);
        self
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub build: String,
    pub wall_ms: u128,
    pub config: ExperimentConfig,
    pub rows: Vec<StatRow>,
    /// Command-specific structured artifacts (e.g. arc decompositions).
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
    pub pass: bool,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig) -> RunReport {
        RunReport {
            command: config.command.clone(),
            build: format!(
                "{} {} ({})",
                env!("CARGO_PKG_NAME"),
                env!("CARGO_PKG_VERSION"),
                if cfg!(debug_assertions) { "debug" } else { "release" }
            ),
            wall_ms: 0,
            config: config.clone(),
            rows: Vec::new(),
            extra: serde_json::Value::Null,
            pass: true,
        }
    }

    pub fn push(&mut self, row: StatRow) {
        if let Some(false) = row.pass {
            self.pass = false;
        }
        self.rows.push(row);
    }

    pub fn print(&self) {
        println!(
            "{}",
            serde_json::to_string_pretty(self).expect("report serialization cannot fail")
        );
    }
}

/// Lossless decimal rendering: 17 significant digits round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Minimal CSV writer; fields are either raw strings or full-precision
/// floats.
pub struct Csv {
    out: Box<dyn Write>,
}

impl Csv {
    pub fn create(path: Option<&Path>, header: &str) -> std::io::Result<Csv> {
        let mut out: Box<dyn Write> = match path {
            Some(p) => Box::new(std::fs::File::create(p)?),
            None => Box::new(std::io::stdout()),
        };
        writeln!(out, "{header}")?;
        Ok(Csv { out })
    }

    pub fn row(&mut self, fields: &[CsvField]) -> std::io::Result<()> {
        let rendered: Vec<String> = fields
            .iter()
            .map(|f| match f {
                CsvField::Int(v) => v.to_string(),
                CsvField::Float(v) => fmt_f64(*v),
                CsvField::Bool(b) => b.to_string(),
                CsvField::Raw(s) => s.clone(),
            })
            .collect();
        writeln!(self.out, "{}", rendered.join(","))
    }
}

pub enum CsvField {
    Int(i64),
    Float(f64),
    Bool(bool),
    /// Preformatted field (must not contain commas).
    Raw(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rendering_round_trips() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::FRAC_1_SQRT_2, 1e-300] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s}");
        }
    }
}
