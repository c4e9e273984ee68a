//! The single writer for everything a run or sweep produces.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::report::{RunReport, SweepReport};
use crate::run::Table;

/// Environment variable that overrides the scenario's output directory.
pub const OUT_ENV: &str = "HIDSYM_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `--out` beats the environment, which beats the scenario file.
pub fn output_dir(flag: Option<&Path>, scenario_dir: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(scenario_dir),
    }
}

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

pub struct Writer {
    dir: PathBuf,
    format: Format,
}

impl Writer {
    pub fn new(dir: PathBuf, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| out_err(&dir, e))?;
        Ok(Self { dir, format })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Trajectories are always CSV.
    pub fn table(&self, t: &Table) -> Result<String, CliError> {
        let file = format!("{}.csv", t.stem);
        let path = self.dir.join(&file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| out_err(&path, e))?;
        w.write_record(&t.header).map_err(|e| out_err(&path, e))?;
        for row in &t.rows {
            w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(|e| out_err(&path, e))?;
        }
        w.flush().map_err(|e| out_err(&path, e))?;
        Ok(file)
    }

    pub fn run_report(&self, stem: &str, r: &RunReport) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.report.{}", self.format.ext()));
        match self.format {
            Format::Json => write_json(&path, r)?,
            Format::Csv => write_check_rows(&path, std::slice::from_ref(r))?,
        }
        Ok(path)
    }

    pub fn sweep_report(&self, stem: &str, r: &SweepReport) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.sweep.{}", self.format.ext()));
        match self.format {
            Format::Json => write_json(&path, r)?,
            Format::Csv => write_check_rows(&path, &r.runs)?,
        }
        Ok(path)
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| out_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| out_err(path, e))
}

/// One row per check; the header is written even when there are no runs.
fn write_check_rows(path: &Path, runs: &[RunReport]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| out_err(path, e))?;
    w.write_record([
        "scenario",
        "scenario_hash",
        "seed",
        "point",
        "run_status",
        "check",
        "status",
        "value",
        "threshold",
        "expect",
        "wall_time_s",
        "detail",
    ])
    .map_err(|e| out_err(path, e))?;
    for r in runs {
        let point = r.point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        for c in &r.checks {
            w.write_record([
                r.scenario.clone(),
                r.scenario_hash.clone(),
                r.seed.to_string(),
                point.clone(),
                r.status.label().to_string(),
                c.name.clone(),
                c.status.label().to_string(),
                c.value.map(fmt_f64).unwrap_or_default(),
                fmt_f64(c.threshold),
                format!("{:?}", c.expect).to_lowercase(),
                format!("{:.6}", c.wall_time_s),
                c.detail.clone().unwrap_or_default(),
            ])
            .map_err(|e| out_err(path, e))?;
        }
    }
    w.flush().map_err(|e| out_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt_f64(x);
            assert_eq!(s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count(), 17);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn flag_beats_scenario_dir() {
        assert_eq!(output_dir(Some(Path::new("/tmp/x")), "out"), PathBuf::from("/tmp/x"));
    }
}
