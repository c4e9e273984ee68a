use std::collections::BTreeMap;

use serde::Serialize;

use crate::scenario::Expect;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// not applicable at this sweep point
    Skip,
    /// the computation itself failed
    Error,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
            Status::Error => "ERROR",
        }
    }

    pub fn ok(self) -> bool {
        matches!(self, Status::Pass | Status::Skip)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub value: Option<f64>,
    pub threshold: f64,
    pub expect: Expect,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub point: BTreeMap<String, f64>,
    pub status: Status,
    pub checks: Vec<CheckResult>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.status.ok()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub grid: BTreeMap<String, Vec<f64>>,
    pub status: Status,
    pub runs: Vec<RunReport>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.status.ok()
    }
}

pub fn overall<'a>(statuses: impl IntoIterator<Item = &'a Status>) -> Status {
    if statuses.into_iter().all(|s| s.ok()) {
        Status::Pass
    } else {
        Status::Fail
    }
}
