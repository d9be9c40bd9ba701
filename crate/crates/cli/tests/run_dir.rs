use std::fs;
use std::path::Path;

use stochhr_cli::{parse_config, parse_summary, run, Experiment};

const CONFIG: &str = "\
[grid]
points = [10, 10]

[params]
a = 1.0
beta = 0.5
q = 0.1
r = 1.0
j = 1.0

[noise]
seed = 5
t_min = -4.0
t_max = 1.0

[solve]
t_end = 1.0
snapshot_stride = 25

[experiment]
horizons = [0.5, 1.0, 2.0, 4.0]
cloud = 4
";

fn manifest_body(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest.txt")).unwrap()
}

#[test]
fn simulate_writes_the_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(CONFIG).unwrap();
    let out = run(&cfg, Experiment::Simulate, tmp.path()).unwrap();
    for f in [
        "manifest.txt",
        "summary.txt",
        "constants.txt",
        "noise.bin",
        "energy.csv",
        "fields/index.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let index = fs::read_to_string(tmp.path().join("fields/index.csv")).unwrap();
    for line in index.lines().skip(1) {
        let name = line.split(',').next().unwrap();
        assert!(tmp.path().join("fields").join(name).is_file());
    }
    let on_disk = parse_summary(&fs::read_to_string(tmp.path().join("summary.txt")).unwrap());
    assert_eq!(on_disk.get("seed").map(String::as_str), Some("5"));
    assert!(!out.summary.is_empty());
}

#[test]
fn manifest_is_a_valid_config_for_the_same_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(CONFIG).unwrap();
    run(&cfg, Experiment::Simulate, &tmp.path().join("a")).unwrap();
    let again = parse_config(&manifest_body(&tmp.path().join("a"))).unwrap();
    let mut expected = cfg.resolved();
    expected.experiment.kind = Some("simulate".into());
    assert_eq!(again, expected);
    run(&again, Experiment::Simulate, &tmp.path().join("b")).unwrap();
    let sa = fs::read(tmp.path().join("a/summary.txt")).unwrap();
    let sb = fs::read(tmp.path().join("b/summary.txt")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn saved_noise_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config(CONFIG).unwrap();
    run(&cfg, Experiment::Diagnose, &tmp.path().join("a")).unwrap();
    let mut reuse = cfg.clone();
    reuse.noise.file = Some(tmp.path().join("a/noise.bin"));
    run(&reuse, Experiment::Diagnose, &tmp.path().join("b")).unwrap();
    let sa = fs::read(tmp.path().join("a/summary.txt")).unwrap();
    let sb = fs::read(tmp.path().join("b/summary.txt")).unwrap();
    assert_eq!(sa, sb);
    assert!(!tmp.path().join("b/noise.bin").exists());
}

#[test]
fn pullback_writes_one_table_per_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let text = CONFIG.replace("cloud = 4\n", "cloud = 4\ncloud_radius = 5.0\n");
    let cfg = parse_config(&text).unwrap();
    run(&cfg, Experiment::Pullback, tmp.path()).unwrap();
    for k in 0..4 {
        let name = format!("pullback/horizon_{k:02}.csv");
        let rows = fs::read_to_string(tmp.path().join(&name)).unwrap();
        assert_eq!(rows.lines().count(), 1 + 4, "{name}");
    }
    assert!(tmp.path().join("pullback/semidistance.csv").is_file());
}

#[test]
fn declared_experiment_must_match() {
    let tmp = tempfile::tempdir().unwrap();
    let text = CONFIG.replace("[experiment]\n", "[experiment]\nkind = \"pullback\"\n");
    let cfg = parse_config(&text).unwrap();
    assert!(run(&cfg, Experiment::Simulate, tmp.path()).is_err());
}
