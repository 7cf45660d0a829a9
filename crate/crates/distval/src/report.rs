//! Report emission: deterministic JSON (identical scenario + seed + version
//! gives identical bytes), a plot-ready CSV series, and a timing sidecar
//! that keeps wall-clock out of the reproducible artifact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scenario::{series, Outcome, Scenario};

pub const TOOL: &str = concat!("distval ", env!("CARGO_PKG_VERSION"));

/// One threshold comparison from a canned reproduction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub seed: u64,
    /// Scenario echo, so a report is self-describing.
    pub scenario: Scenario,
    pub outcome: Outcome,
    /// Pass/fail lines against canned thresholds; empty for plain runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(scenario: Scenario, outcome: Outcome) -> Report {
        Report { tool: TOOL.to_string(), seed: scenario.seed, scenario, outcome, checks: vec![] }
    }
}

/// Writes report.json, series.csv, and timing.json under `dir`. Timing
/// lives in the sidecar only; the report bytes depend on nothing but
/// (scenario, seed, version).
pub fn write_report(dir: &Path, report: &Report, wall_ms: u128) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(dir.join("report.json"), json + "\n")?;

    let mut w = csv::Writer::from_path(dir.join("series.csv"))?;
    w.write_record(["param", "value", "error"])?;
    for (p, v, e) in series(&report.outcome) {
        w.write_record([fmt(p), fmt(v), fmt(e)])?;
    }
    w.flush()?;

    let mut t = fs::File::create(dir.join("timing.json"))?;
    writeln!(t, "{{\"wall_ms\": {wall_ms}}}")?;
    Ok(())
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
