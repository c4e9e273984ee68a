//! Scenario runner: TOML scenarios in, trajectories and check reports out.

pub mod error;
pub mod output;
pub mod report;
pub mod run;
pub mod scenario;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use error::CliError;
use output::{Format, Writer};
use report::{overall, RunReport, Status, SweepReport};
use run::{run_point, RunSettings};
use scenario::{grid_points, parse_grid, Loaded, Scenario};

#[derive(Clone, Debug)]
pub struct Options<'a> {
    pub seed: Option<u64>,
    pub tol_scale: f64,
    pub out: Option<&'a Path>,
    pub format: Format,
}

impl Options<'_> {
    fn settings(&self, loaded: &Loaded) -> Result<RunSettings, CliError> {
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return Err(CliError::Config(format!("--tol-scale must be positive, got {}", self.tol_scale)));
        }
        Ok(RunSettings { seed: self.seed.unwrap_or(loaded.scenario.seed), tol_scale: self.tol_scale })
    }
}

fn stem_of(loaded: &Loaded) -> String {
    loaded.scenario.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Run a scenario once and write its outputs.
pub fn run_scenario(path: &Path, opts: &Options) -> Result<RunReport, CliError> {
    let loaded = Scenario::load(path)?;
    let settings = opts.settings(&loaded)?;
    let stem = stem_of(&loaded);
    let writer = Writer::new(output::output_dir(opts.out, &loaded.scenario.output.dir), opts.format)?;
    let mut out = run_point(&loaded, &BTreeMap::new(), settings, &stem)?;
    for t in &out.tables {
        out.report.files.push(writer.table(t)?);
    }
    writer.run_report(&stem, &out.report)?;
    Ok(out.report)
}

/// Run a scenario over a parameter grid; points run in parallel, one writer collects.
pub fn sweep_scenario(path: &Path, grid: Option<&str>, opts: &Options) -> Result<SweepReport, CliError> {
    let loaded = Scenario::load(path)?;
    let settings = opts.settings(&loaded)?;
    let grid = match grid {
        Some(g) => parse_grid(g)?,
        None => loaded
            .scenario
            .sweep
            .as_ref()
            .map(|s| s.grid.clone())
            .ok_or_else(|| CliError::Config("sweep needs --grid or a [sweep] table".into()))?,
    };
    let points = grid_points(&grid);
    let stem = stem_of(&loaded);
    let results: Vec<_> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_point(&loaded, p, settings, &format!("{stem}-{i}")))
        .collect();
    let writer = Writer::new(output::output_dir(opts.out, &loaded.scenario.output.dir), opts.format)?;
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        let mut r = r?;
        for t in &r.tables {
            r.report.files.push(writer.table(t)?);
        }
        runs.push(r.report);
    }
    let status = if runs.is_empty() { Status::Pass } else { overall(runs.iter().map(|r| &r.status)) };
    let report = SweepReport {
        scenario: loaded.scenario.name.clone(),
        scenario_hash: loaded.hash.clone(),
        seed: settings.seed,
        grid,
        status,
        runs,
    };
    writer.sweep_report(&stem, &report)?;
    Ok(report)
}
