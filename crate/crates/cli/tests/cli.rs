use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dualadapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualadapt")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn minimal() -> String {
    configs().join("minimal.toml").display().to_string()
}

#[test]
fn run_writes_outputs_and_strict_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = dualadapt(&["run", "--config", &minimal(), "--out", out, "--strict"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["manifest.json", "regret_uma.csv", "summary.csv", "trajectory_uma.csv"]);
    assert!(text(&o.stdout).contains("bound violations: 0"));

    let v = dualadapt(&["verify", "--config", &minimal(), "--out", out, "--strict"]);
    assert_eq!(v.status.code(), Some(0), "{}", text(&v.stderr));
    assert!(text(&v.stdout).contains("== uma =="));
}

#[test]
fn seed_flag_changes_the_trajectory() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, seed) in [(&a, "3"), (&b, "4")] {
        let o = dualadapt(&["run", "--config", &minimal(), "--out", dir.path().to_str().unwrap(), "--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("trajectory_uma.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn missing_key_exits_two_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(configs().join("minimal.toml")).unwrap().replace("radius = 1.0\n", "");
    let cfg = tmp.path().join("broken.toml");
    fs::write(&cfg, src).unwrap();
    let o = dualadapt(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("radius"), "{}", text(&o.stderr));
}

#[test]
fn unreadable_config_exits_two() {
    let o = dualadapt(&["run", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(configs().join("minimal.toml")).unwrap() + "\n[sweep]\nseed = [1, 2, 3]\n";
    let cfg = tmp.path().join("sweep.toml");
    fs::write(&cfg, src).unwrap();
    let out = tmp.path().join("out");
    let o = dualadapt(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", "3", "--strict"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn selftest_passes() {
    let o = dualadapt(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
    assert_eq!(text(&o.stdout).lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn strict_exits_one_on_violation() {
    // a stored trajectory rewritten to play a far-away point, with losses recomputed
    // there, passes the consistency check on read but breaks the interval bounds
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let src = fs::read_to_string(configs().join("minimal.toml"))
        .unwrap()
        .replace("family = \"linear\"\nscale = 1.0", "family = \"quadratic\"\nlambda = 1.0\nspread = 0.0");
    let cfg = tmp.path().join("quad.toml");
    fs::write(&cfg, src).unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(dualadapt(&["run", "--config", cfg, "--out", out]).status.code(), Some(0));
    let path = tmp.path().join("trajectory_uma.csv");
    let stored = fs::read_to_string(&path).unwrap();
    let mut lines = stored.lines();
    let mut rewritten = format!("{}\n", lines.next().unwrap());
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        // loss of (1/2)||w||^2 at w = (30, 40), centers are all at the origin
        rewritten += &format!("{},30,40,1250,{},{},{}\n", cols[0], cols[4], cols[5], cols[6]);
    }
    fs::write(&path, rewritten).unwrap();
    let lax = dualadapt(&["verify", "--config", cfg, "--out", out]);
    assert_eq!(lax.status.code(), Some(0), "{}", text(&lax.stderr));
    let strict = dualadapt(&["verify", "--config", cfg, "--out", out, "--strict"]);
    assert_eq!(strict.status.code(), Some(1), "{}", text(&strict.stderr));
}
