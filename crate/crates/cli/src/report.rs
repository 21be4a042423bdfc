//! Report and CSV serialization.
//!
//! `report.json` is a pure function of the configuration so repeated runs are
//! byte-identical. Wall times go to the `timings.json` side file it references.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::{RunConfig, SCHEMA_VERSION};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Ok,
    Partial,
    Refused,
    VerificationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Partial => 2,
            Outcome::Refused => 3,
            Outcome::VerificationFailed => 4,
        }
    }
}

/// A bulk table destined for a CSV side file.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting, so CSV values parse back to the same `f64`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// What a subcommand produced, before anything touches the disk.
pub struct Run {
    pub outcome: Outcome,
    pub outputs: Value,
    /// `(file stem, table)`, written as `<stem>.csv`.
    pub tables: Vec<(&'static str, CsvTable)>,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    artifact_version: &'static str,
    command: &'a str,
    status: Outcome,
    exit_code: i32,
    inputs: Inputs<'a>,
    outputs: &'a Value,
    files: BTreeMap<&'static str, String>,
}

#[derive(Serialize)]
struct Inputs<'a> {
    config: &'a RunConfig,
    overrides: &'a Value,
}

#[derive(Serialize)]
struct Timings {
    schema_version: u32,
    command: String,
    wall_time_s: BTreeMap<&'static str, f64>,
}

pub fn write_run(
    out: &Path,
    command: &str,
    config: &RunConfig,
    overrides: &Value,
    run: &Run,
    compute_s: f64,
    total_s: f64,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = BTreeMap::new();
    for (stem, table) in &run.tables {
        let name = format!("{stem}.csv");
        table.write(&out.join(&name))?;
        files.insert(*stem, name);
    }
    files.insert("timings", "timings.json".to_string());
    let report = Report {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION,
        command,
        status: run.outcome,
        exit_code: run.outcome.exit_code(),
        inputs: Inputs { config, overrides },
        outputs: &run.outputs,
        files,
    };
    write_json(&out.join("report.json"), &report)?;
    let timings = Timings {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        wall_time_s: BTreeMap::from([("compute", compute_s), ("total", total_s)]),
    };
    write_json(&out.join("timings.json"), &timings)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.25, 1e-300, -3.5e12, 0.7027326194] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Outcome::Ok.exit_code(), 0);
        assert_eq!(Outcome::Partial.exit_code(), 2);
        assert_eq!(Outcome::Refused.exit_code(), 3);
        assert_eq!(Outcome::VerificationFailed.exit_code(), 4);
    }
}
