//! Scenario files: strict TOML, every table rejects unknown keys.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hidsym::dynamics::{IntegratorConfig, Method, Sampling};
use hidsym::eisenhart::LiftKind;
use hidsym::systems::{self, SystemConfig};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSection,
    #[serde(default)]
    pub initial: Option<Initial>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub lift: Option<LiftSection>,
    #[serde(default, rename = "check")]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub preset: String,
    /// Field overrides merged into the preset; a scalar broadcasts over a list field.
    #[serde(default)]
    pub overrides: BTreeMap<String, toml::Value>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub q: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub random: Option<RandomInitial>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInitial {
    pub count: usize,
    #[serde(rename = "box")]
    pub bx: PhaseBox,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseBox {
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
    pub p_lo: Vec<f64>,
    pub p_hi: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Dop853,
    Verlet,
    Gauss,
}

fn default_rtol() -> f64 {
    1e-10
}
fn default_atol() -> f64 {
    1e-12
}
fn default_step() -> f64 {
    1e-3
}
fn default_t_final() -> f64 {
    10.0
}
fn default_samples() -> usize {
    200
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// Equal output intervals.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_method() -> MethodName {
    MethodName::Dop853
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            rtol: default_rtol(),
            atol: default_atol(),
            step: default_step(),
            t_final: default_t_final(),
            samples: default_samples(),
        }
    }
}

impl IntegratorSection {
    pub fn config(&self) -> Result<IntegratorConfig, CliError> {
        let method = match self.method {
            MethodName::Dop853 => Method::Dop853 { rtol: self.rtol, atol: self.atol },
            MethodName::Verlet => Method::Verlet { step: self.step },
            MethodName::Gauss => Method::Gauss { step: self.step },
        };
        let mut cfg = IntegratorConfig::default().sampled(Sampling::Uniform(self.samples));
        if self.method != MethodName::Dop853 {
            cfg.max_steps = usize::MAX;
        }
        cfg.method = method;
        cfg.validate().map_err(|e| CliError::Config(format!("integrator: {e}")))?;
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(CliError::Config(format!("integrator: t_final must be positive, got {}", self.t_final)));
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSection {
    pub kind: LiftKind,
    /// Extra momenta for the scalar and generalised lifts; a single value broadcasts.
    #[serde(default)]
    pub p_y: Option<toml::Value>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    /// value must stay below the threshold
    #[default]
    Below,
    /// value must exceed the threshold, e.g. the drift of a broken invariant
    Above,
}

/// One verification; `only_at` restricts it to matching sweep points.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawCheck", into = "RawCheck")]
pub struct Check {
    pub kind: CheckKind,
    pub threshold: f64,
    pub expect: Expect,
    pub name: Option<String>,
    pub only_at: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Debug)]
pub enum CheckKind {
    /// Conservation drift of named invariants (all when empty) along every trajectory.
    Drift { invariants: Vec<String> },
    /// Pairwise brackets of named invariants at random points of a box.
    Involution { invariants: Vec<String>, points: usize, bx: PhaseBox },
    /// `{L, B}` closure on `O(4)` / `O(1,3)` at random bound and unbound points.
    KeplerAlgebra { points: usize },
    /// Gradient rank of `{H, L, A}` at the initial states; passes when it equals `rank`.
    KeplerRank { rank: usize },
    /// `dL/dt − [L, M]` along every trajectory.
    LaxEquation,
    /// Eigenvalue drift of `L` along every trajectory.
    Isospectral,
    /// `|tr L²/2 − H|` at random points of a box.
    TraceIdentity { points: usize, bx: PhaseBox },
    /// Lifted run against a direct integration of the base it should reproduce.
    RoundTrip,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Drift,
    Involution,
    KeplerAlgebra,
    KeplerRank,
    LaxEquation,
    Isospectral,
    TraceIdentity,
    RoundTrip,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawCheck {
    pub kind: CheckName,
    pub threshold: f64,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub only_at: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariants: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bx: Option<PhaseBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

impl TryFrom<RawCheck> for Check {
    type Error = String;

    fn try_from(r: RawCheck) -> Result<Self, String> {
        let name = toml::Value::try_from(r.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let need = |v: Option<usize>, what: &str| v.ok_or_else(|| format!("check {name} needs '{what}'"));
        let no_extra = |ok: [bool; 4]| -> Result<(), String> {
            let given = [!r.invariants.is_empty(), r.points.is_some(), r.bx.is_some(), r.rank.is_some()];
            let keys = ["invariants", "points", "box", "rank"];
            for i in 0..4 {
                if given[i] && !ok[i] {
                    return Err(format!("check {name} does not take '{}'", keys[i]));
                }
            }
            Ok(())
        };
        let kind = match r.kind {
            CheckName::Drift => {
                no_extra([true, false, false, false])?;
                CheckKind::Drift { invariants: r.invariants.clone() }
            }
            CheckName::Involution => {
                no_extra([true, true, true, false])?;
                if r.invariants.len() < 2 {
                    return Err("check involution needs at least two invariants".into());
                }
                CheckKind::Involution {
                    invariants: r.invariants.clone(),
                    points: need(r.points, "points")?,
                    bx: r.bx.clone().ok_or("check involution needs a box")?,
                }
            }
            CheckName::KeplerAlgebra => {
                no_extra([false, true, false, false])?;
                CheckKind::KeplerAlgebra { points: need(r.points, "points")? }
            }
            CheckName::KeplerRank => {
                no_extra([false, false, false, true])?;
                CheckKind::KeplerRank { rank: need(r.rank, "rank")? }
            }
            CheckName::LaxEquation => {
                no_extra([false; 4])?;
                CheckKind::LaxEquation
            }
            CheckName::Isospectral => {
                no_extra([false; 4])?;
                CheckKind::Isospectral
            }
            CheckName::TraceIdentity => {
                no_extra([false, true, true, false])?;
                CheckKind::TraceIdentity {
                    points: need(r.points, "points")?,
                    bx: r.bx.clone().ok_or("check trace-identity needs a box")?,
                }
            }
            CheckName::RoundTrip => {
                no_extra([false; 4])?;
                CheckKind::RoundTrip
            }
        };
        Ok(Check { kind, threshold: r.threshold, expect: r.expect, name: r.name, only_at: r.only_at })
    }
}

impl From<Check> for RawCheck {
    fn from(c: Check) -> Self {
        let mut r = RawCheck {
            kind: CheckName::Drift,
            threshold: c.threshold,
            expect: c.expect,
            name: c.name,
            only_at: c.only_at,
            invariants: vec![],
            points: None,
            bx: None,
            rank: None,
        };
        match c.kind {
            CheckKind::Drift { invariants } => r.invariants = invariants,
            CheckKind::Involution { invariants, points, bx } => {
                r.kind = CheckName::Involution;
                r.invariants = invariants;
                r.points = Some(points);
                r.bx = Some(bx);
            }
            CheckKind::KeplerAlgebra { points } => {
                r.kind = CheckName::KeplerAlgebra;
                r.points = Some(points);
            }
            CheckKind::KeplerRank { rank } => {
                r.kind = CheckName::KeplerRank;
                r.rank = Some(rank);
            }
            CheckKind::LaxEquation => r.kind = CheckName::LaxEquation,
            CheckKind::Isospectral => r.kind = CheckName::Isospectral,
            CheckKind::TraceIdentity { points, bx } => {
                r.kind = CheckName::TraceIdentity;
                r.points = Some(points);
                r.bx = Some(bx);
            }
            CheckKind::RoundTrip => r.kind = CheckName::RoundTrip,
        }
        r
    }
}

fn default_dir() -> String {
    "out".into()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_true")]
    pub trajectories: bool,
}

fn default_true() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), trajectories: true }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub grid: BTreeMap<String, Vec<f64>>,
}

/// A parsed scenario together with the hash of its source text.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub scenario: Scenario,
    pub hash: String,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Loaded, CliError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        scenario.validate()?;
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Loaded { scenario, hash })
    }

    pub fn load(path: &Path) -> Result<Loaded, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.system_config(&BTreeMap::new())?;
        if let Some(init) = &self.initial {
            match (&init.q, &init.p, &init.random) {
                (Some(_), Some(_), None) | (None, None, Some(_)) => {}
                _ => {
                    return Err(CliError::Config(
                        "initial: give either both q and p or a random table, not a mixture".into(),
                    ))
                }
            }
        }
        for c in &self.checks {
            if !(c.threshold > 0.0) || !c.threshold.is_finite() {
                return Err(CliError::Config(format!("check {}: threshold must be positive", c.label())));
            }
        }
        Ok(())
    }

    /// Preset configuration with scenario overrides and then sweep-point values applied.
    pub fn system_config(&self, point: &BTreeMap<String, f64>) -> Result<SystemConfig, CliError> {
        let base = systems::preset(&self.system.preset).map_err(|e| CliError::Config(e.to_string()))?;
        let mut table = match toml::Value::try_from(&base) {
            Ok(toml::Value::Table(t)) => t,
            _ => return Err(CliError::Config("preset does not serialise to a table".into())),
        };
        let tag = table.get("kind").and_then(|v| v.as_str()).unwrap_or_default().to_string();
        let mut apply = |key: &str, value: toml::Value| -> Result<(), CliError> {
            if key == "kind" {
                return Err(CliError::Config("overrides cannot change the system kind".into()));
            }
            if key == "tau" && tag == "quantum-dot" {
                let tau = value.as_float().or_else(|| value.as_integer().map(|i| i as f64));
                let tau = tau.ok_or_else(|| CliError::Config("tau must be a number".into()))?;
                let w0 = table.get("omega0").and_then(as_f64).unwrap_or(1.0);
                let wl = table.get("omega_l").and_then(as_f64).unwrap_or(0.0);
                table.insert("omega_z".into(), toml::Value::Float(tau * w0.hypot(wl)));
                return Ok(());
            }
            let value = match (table.get(key), value) {
                (Some(toml::Value::Array(a)), v @ (toml::Value::Float(_) | toml::Value::Integer(_))) => {
                    toml::Value::Array(vec![v; a.len()])
                }
                (_, v) => v,
            };
            table.insert(key.to_string(), value);
            Ok(())
        };
        for (k, v) in &self.system.overrides {
            apply(k, v.clone())?;
        }
        for (k, v) in point {
            if k != "p_y" {
                apply(k, toml::Value::Float(*v))?;
            }
        }
        let cfg: SystemConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Config(format!("system overrides for '{}': {e}", self.system.preset)))?;
        Ok(cfg)
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

impl Check {
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.kind {
            CheckKind::Drift { invariants } if invariants.is_empty() => "drift".into(),
            CheckKind::Drift { invariants } => format!("drift[{}]", invariants.join(",")),
            CheckKind::Involution { invariants, .. } => format!("involution[{}]", invariants.join(",")),
            CheckKind::KeplerAlgebra { .. } => "kepler-algebra".into(),
            CheckKind::KeplerRank { .. } => "kepler-rank".into(),
            CheckKind::LaxEquation => "lax-equation".into(),
            CheckKind::Isospectral => "isospectral".into(),
            CheckKind::TraceIdentity { .. } => "trace-identity".into(),
            CheckKind::RoundTrip => "round-trip".into(),
        }
    }

    /// Whether this check applies at a sweep point.
    pub fn applies_at(&self, point: &BTreeMap<String, f64>) -> bool {
        self.only_at.iter().all(|(k, vals)| point.get(k).is_some_and(|v| vals.iter().any(|w| (w - v).abs() <= 1e-12 * w.abs().max(1.0))))
    }
}

/// Parse `--grid "tau=0.5,1,2;g=1,2"` into a sorted map; an empty string is an empty grid.
pub fn parse_grid(spec: &str) -> Result<BTreeMap<String, Vec<f64>>, CliError> {
    let mut out = BTreeMap::new();
    for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, vals) = part.split_once('=').ok_or_else(|| CliError::Config(format!("grid entry '{part}' lacks '='")))?;
        let vals: Vec<f64> = vals
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| CliError::Config(format!("grid value '{s}' for '{k}' is not a number"))))
            .collect::<Result<_, _>>()?;
        if out.insert(k.trim().to_string(), vals).is_some() {
            return Err(CliError::Config(format!("grid parameter '{}' given twice", k.trim())));
        }
    }
    Ok(out)
}

/// Cartesian product of a grid in key order; any empty axis gives no points.
pub fn grid_points(grid: &BTreeMap<String, Vec<f64>>) -> Vec<BTreeMap<String, f64>> {
    if grid.is_empty() {
        return vec![];
    }
    let mut points = vec![BTreeMap::new()];
    for (k, vals) in grid {
        let mut next = Vec::with_capacity(points.len() * vals.len());
        for p in &points {
            for v in vals {
                let mut q = p.clone();
                q.insert(k.clone(), *v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[system]
preset = "toda-4"
"#;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::parse(MINIMAL).is_ok());
        let typo = format!("{MINIMAL}\n[integrator]\nrtoll = 1e-9\n");
        assert!(matches!(Scenario::parse(&typo), Err(CliError::Config(_))));
        let bad_check = format!("{MINIMAL}\n[[check]]\nkind = \"drift\"\nthreshold = 1e-7\ninvariant = [\"I1\"]\n");
        assert!(Scenario::parse(&bad_check).is_err());
    }

    #[test]
    fn unknown_preset_is_named() {
        let e = Scenario::parse("name = \"x\"\n[system]\npreset = \"kepler-7d\"\n").unwrap_err();
        assert!(e.to_string().contains("kepler-7d"));
    }

    #[test]
    fn overrides_broadcast_and_reject_typos() {
        let s = Scenario::parse(&format!("{MINIMAL}[system.overrides]\ng = 2.0\n")).unwrap().scenario;
        assert_eq!(s.system_config(&BTreeMap::new()).unwrap(), SystemConfig::Toda { g: vec![2.0; 3] });
        let s = Scenario::parse(&format!("{MINIMAL}[system.overrides]\ngg = 2.0\n"));
        assert!(s.is_err());
    }

    #[test]
    fn tau_sets_the_axial_frequency() {
        let s = Scenario::parse("name = \"q\"\n[system]\npreset = \"quantum-dot-tau1\"\n").unwrap().scenario;
        let point = BTreeMap::from([("tau".to_string(), 2.0)]);
        match s.system_config(&point).unwrap() {
            SystemConfig::QuantumDot { omega_z, .. } => assert_eq!(omega_z, 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grids() {
        assert!(parse_grid("").unwrap().is_empty());
        assert!(grid_points(&parse_grid("").unwrap()).is_empty());
        let g = parse_grid("tau=0.5,1,2; g=1,2").unwrap();
        let pts = grid_points(&g);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0]["g"], 1.0);
        assert_eq!(pts[0]["tau"], 0.5);
        assert!(parse_grid("tau").is_err());
        assert!(parse_grid("tau=a").is_err());
    }

    #[test]
    fn hash_tracks_the_text() {
        let a = Scenario::parse(MINIMAL).unwrap().hash;
        let b = Scenario::parse(&format!("{MINIMAL}\n")).unwrap().hash;
        assert_eq!(a.len(), 64);
        assert_ne!(a, b);
    }
}
