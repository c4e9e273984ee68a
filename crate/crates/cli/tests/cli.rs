use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hidsym"));
    c.env_remove("HIDSYM_OUT");
    c
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).to_string_lossy().into_owned()
}

fn tmp(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hidsym-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn kepler_scenario_passes_and_reports_the_bracket_residual() {
    let out = tmp("kepler");
    let o = run(&["run", &scenario("kepler-o4-algebra.toml"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("kepler-o4-algebra.report.json"));
    assert_eq!(r["status"], "pass");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["scenario_hash"].as_str().unwrap().len(), 64);
    let alg = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "kepler-algebra").unwrap();
    assert!(alg["value"].as_f64().unwrap() < 1e-7);
    assert!(alg["wall_time_s"].as_f64().is_some() && alg["threshold"].as_f64() == Some(1e-7));
}

#[test]
fn toda_report_carries_the_drift_and_csv_columns() {
    let out = tmp("toda");
    let o = run(&["run", &scenario("toda-isospectral-n4.toml"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&out.join("toda-isospectral-n4.report.json"));
    let iso = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "isospectral").unwrap();
    assert!(iso["value"].as_f64().unwrap() < 1e-8);
    let csv = fs::read_to_string(out.join("toda-isospectral-n4.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,q1,q2,q3,q4,p1,p2,p3,p4,I1,I2,I3,I4");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 13);
    // 17 significant digits
    assert_eq!(first[1].split('e').next().unwrap().chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn unknown_preset_is_a_config_error_naming_it() {
    let dir = tmp("preset");
    let f = write(&dir, "bad.toml", "name = \"bad\"\n[system]\npreset = \"toda-17\"\n");
    let o = run(&["run", &f, "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("toda-17"));
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = tmp("keys");
    let f = write(&dir, "bad.toml", "name = \"bad\"\ncolour = 3\n[system]\npreset = \"toda-4\"\n");
    assert_eq!(run(&["run", &f]).status.code(), Some(2));
    let f = write(&dir, "bad2.toml", "name = \"bad\"\n[system]\npreset = \"toda-4\"\n[[check]]\nkind = \"drift\"\nthreshold = 1e-8\npoints = 3\n");
    assert_eq!(run(&["run", &f]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    let out = tmp("fail");
    let o = run(&["run", &scenario("toda-isospectral-n4.toml"), "--tol-scale", "1e-30", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&out.join("toda-isospectral-n4.report.json"));
    assert_eq!(r["status"], "fail");
}

#[test]
fn quantum_dot_sweep_passes_at_every_ratio() {
    let out = tmp("dot");
    let o = run(&["sweep", &scenario("quantum-dot-tau-sweep.toml"), "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = fs::read_to_string(out.join("quantum-dot-tau-sweep.sweep.csv")).unwrap();
    assert!(rows.lines().next().unwrap().starts_with("scenario,scenario_hash,seed,point"));
    assert_eq!(rows.lines().filter(|l| l.contains(",K conserved,PASS,")).count(), 1);
    assert_eq!(rows.lines().filter(|l| l.contains(",C broken,PASS,")).count(), 1);
    assert_eq!(rows.lines().filter(|l| l.contains(",SKIP,")).count(), 8);
}

#[test]
fn empty_grid_gives_an_empty_report() {
    let out = tmp("empty");
    let o = run(&["sweep", &scenario("toda-coupling-sweep.toml"), "--grid", "", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&out.join("toda-coupling-sweep.sweep.json"));
    assert_eq!(r["runs"].as_array().unwrap().len(), 0);
    assert_eq!(r["status"], "pass");
}

#[test]
fn sweep_without_grid_is_a_config_error() {
    let o = run(&["sweep", &scenario("toda-isospectral-n4.toml")]);
    assert_eq!(o.status.code(), Some(2));
}

fn phase_columns(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(9).map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn coupling_sweep_matches_lifted_momentum_sweep() {
    let a = tmp("gsweep");
    let b = tmp("pysweep");
    assert_eq!(run(&["sweep", &scenario("toda-coupling-sweep.toml"), "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["sweep", &scenario("toda-lift-momentum-sweep.toml"), "--out", b.to_str().unwrap()]).status.code(), Some(0));
    for i in 0..3 {
        let x = phase_columns(&a.join(format!("toda-coupling-sweep-{i}.csv")));
        let y = phase_columns(&b.join(format!("toda-lift-momentum-sweep-{i}.csv")));
        assert_eq!(x.len(), y.len());
        let gap = x.iter().flatten().zip(y.iter().flatten()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "point {i}: {gap}");
    }
}

#[test]
fn env_var_sets_the_output_dir_and_flag_beats_it() {
    let env_dir = tmp("env");
    let flag_dir = tmp("flag");
    let s = scenario("kepler-null-lift.toml");
    let o = bin().args(["run", &s]).env("HIDSYM_OUT", &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("kepler-null-lift.report.json").exists());
    let o = bin().args(["run", &s, "--out", flag_dir.to_str().unwrap()]).env("HIDSYM_OUT", &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("kepler-null-lift.csv").exists());
}

#[test]
fn seed_changes_random_initial_data_deterministically() {
    let dir = tmp("seed");
    let f = write(
        &dir,
        "rand.toml",
        "name = \"rand\"\n[system]\npreset = \"toda-4\"\n[initial.random]\ncount = 2\n\
         box = { q_lo = [-1.0, -1.0, -1.0, -1.0], q_hi = [1.0, 1.0, 1.0, 1.0], p_lo = [-1.0, -1.0, -1.0, -1.0], p_hi = [1.0, 1.0, 1.0, 1.0] }\n\
         [integrator]\nt_final = 2.0\nsamples = 20\n[[check]]\nkind = \"drift\"\nthreshold = 1e-8\n",
    );
    let read = |seed: &str, tag: &str| {
        let out = dir.join(tag);
        assert_eq!(run(&["run", &f, "--seed", seed, "--out", out.to_str().unwrap()]).status.code(), Some(0));
        fs::read(out.join("rand-ic1.csv")).unwrap()
    };
    assert_eq!(read("5", "a"), read("5", "b"));
    assert_ne!(read("5", "c"), read("6", "d"));
}

#[test]
fn lift_flag_rejects_unknown_kinds() {
    let dir = tmp("lift");
    let f = write(&dir, "l.toml", "name = \"l\"\n[system]\npreset = \"kepler\"\n[lift]\nkind = \"conformal\"\n");
    assert_eq!(run(&["run", &f]).status.code(), Some(2));
    let f = write(&dir, "g.toml", "name = \"g\"\n[system]\npreset = \"kepler\"\n[lift]\nkind = \"generalized\"\n");
    let o = run(&["run", &f, "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Toda"));
}
