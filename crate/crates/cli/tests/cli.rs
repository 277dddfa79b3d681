use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK: [&str; 8] = [
    "--set",
    "episodes=1000",
    "--set",
    "similarity_steps=500",
    "--set",
    "eval_episodes=50",
    "--set",
    "checkpoints=10",
];

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_adversarl"));
    c.env_remove("ADVERSARL_OUT");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn quick_run(dir: &Path, extra: &[&str]) {
    let cfg = config("slider_lcbt.cfg");
    let mut args = vec![
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend(QUICK);
    args.extend(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn run_writes_artifacts_and_echoes_config() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("r");
    quick_run(&dir, &["--seed", "7"]);
    for f in ["metrics.csv", "summary.json", "agent.json", "config.cfg"] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    assert!(fs::read_dir(dir.join("trees")).unwrap().count() > 0);
    let cfg = fs::read_to_string(dir.join("config.cfg")).unwrap();
    assert!(cfg.contains("seed = 7"));
    assert!(cfg.contains("episodes = 1000"));
    let rows = fs::read_to_string(dir.join("metrics.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1001);
}

#[test]
fn override_switches_to_oracle() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("r");
    quick_run(&dir, &["--set", "attacker=oracle"]);
    let summary = fs::read_to_string(dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"attacker\": \"oracle\""), "{summary}");
}

#[test]
fn bad_env_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.cfg");
    fs::write(&empty, "episodes = 10\n").unwrap();
    for args in [
        vec!["run", "--config", empty.to_str().unwrap()],
        vec!["run"],
        vec!["run", "--set", "env=moon"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(
            stderr(&o).contains("slider, vehicle2, vehicle5"),
            "{}",
            stderr(&o)
        );
    }
    let o = run(&["run", "--set", "env=slider", "--set", "colour=blue"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key 'colour'"));
}

#[test]
fn invariant_violation_exits_nonzero_naming_it() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "run",
        "--set",
        "env=slider",
        "--set",
        "nu1=0.1",
        "--out",
        tmp.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tree geometry"), "{}", stderr(&o));
}

#[test]
fn eval_is_repeatable_and_bounded() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("r");
    quick_run(&dir, &["--set", "attacker=oracle"]);
    let score = || {
        let o = run(&["eval", dir.to_str().unwrap(), "--seed", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = stdout(&o);
        let v: f64 = text
            .trim()
            .strip_prefix("similarity ")
            .unwrap()
            .parse()
            .unwrap();
        assert!((0.0..=1.0).contains(&v));
        text
    };
    assert_eq!(score(), score());
    let o = run(&["eval", tmp.path().join("nothing").to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn check_accepts_fresh_run_and_rejects_tampering() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("r");
    quick_run(&dir, &[]);
    let o = run(&["check", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    // cum_alpha below cum_tau on the last row.
    let csv_path = dir.join("metrics.csv");
    let original = fs::read_to_string(&csv_path).unwrap();
    let mut lines: Vec<String> = original.lines().map(str::to_owned).collect();
    let last = lines.last_mut().unwrap();
    let mut cols: Vec<String> = last.split(',').map(str::to_owned).collect();
    let tau: u64 = cols[5].parse().unwrap();
    assert!(tau > 0);
    cols[6] = (tau - 1).to_string();
    *last = cols.join(",");
    fs::write(&csv_path, lines.join("\n") + "\n").unwrap();
    let o = run(&["check", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("cum_alpha"), "{}", stdout(&o));
    fs::write(&csv_path, original).unwrap();

    // A synthetic dump with far more nodes at step 3 than the bound allows at k = 1.
    let mut dump = String::from("# lcbt-trees k=1 M=16 H=10 nu1=2 rho=0.5 delta1=0.05\n");
    for h in 1..=10 {
        dump.push_str(&format!("{h} 0 1 -1 1\n"));
    }
    for i in 1..=5000u64 {
        dump.push_str(&format!("3 20 {i} -1 1\n"));
    }
    fs::write(dir.join("trees").join("trees-k0000001.txt"), dump).unwrap();
    let o = run(&["check", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).contains("node bound exceeded at h=3, k=1"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn jobs_write_disjoint_seed_dirs() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("multi");
    quick_run(&root, &["--jobs", "2", "--seed", "5"]);
    for s in [5, 6] {
        let cfg = fs::read_to_string(root.join(format!("seed-{s}")).join("config.cfg")).unwrap();
        assert!(cfg.contains(&format!("seed = {s}")));
    }
}

#[test]
fn out_root_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = config("slider_lcbt.cfg");
    let mut args = vec!["run", "--config", cfg.to_str().unwrap()];
    args.extend(QUICK);
    let o = bin()
        .args(&args)
        .env("ADVERSARL_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp
        .path()
        .join("slider-lcbt-0")
        .join("metrics.csv")
        .is_file());
}
