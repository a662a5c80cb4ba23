use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BASE: &str = r#"
seed = 5

[grid]
ds = 0.125
bins = 256

[initial]
kind = "monodisperse"
mass = 1.0
size = 1.0

[kernel]
eps = 0.1

[solver]
dt = 2.5e-4
t_end = 0.3

[outputs]
stride = 40

[stochastic]
replicas = 8
particles = 2000
times = [0.0, 0.15, 0.3]

[characteristics]
paths = 300
dt = 1e-3
t_end = 0.3
x_hi = 5.0
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cf-lab"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cf.toml");
    fs::write(&p, text).unwrap();
    p
}

fn cf(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn simulate_then_verify_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    let sim = bin().arg("simulate").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&sim), 0, "{}", String::from_utf8_lossy(&sim.stderr));
    let summary = String::from_utf8_lossy(&sim.stdout);
    assert!(summary.contains("mass_drift"));
    assert!(out.join("trajectory.csv").is_file());
    assert!(out.join("snapshots.csv").is_file());

    let ver = cf("verify", &cfg, &out, &[]);
    assert_eq!(code(&ver), 0, "{}", String::from_utf8_lossy(&ver.stderr));
    let report = fs::read_to_string(out.join("verify_report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), "name,status,worst_margin,t,x_or_k");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("PASS")));
    // one envelope row per output time
    let envelope = rows.iter().filter(|r| r.starts_with("second_moment_envelope,")).count();
    assert_eq!(envelope, 31);
    let field = fs::read_to_string(out.join("field.csv")).unwrap();
    assert!(field.starts_with("x,t,F,Fx,Fxx,G_eps,residual\n"));
}

#[test]
fn trajectory_header_and_precision() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    assert_eq!(code(&cf("simulate", &cfg, &out, &[])), 0);
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,m0,m1,m2,m3,m4,m5,mass_drift,top_bin_occupancy");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 9);
    // 17 significant digits
    assert_eq!(first[2], "1.0000000000000000e0");
    let snaps = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    assert!(snaps.starts_with("t,s_i,N_i\n"));
}

#[test]
fn oversized_step_aborts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("dt = 2.5e-4", "dt = 0.5").replace("t_end = 0.3\n\n[outputs]", "t_end = 0.5\n\n[outputs]"));
    let o = cf("simulate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("went negative"));
}

#[test]
fn usage_and_config_errors() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&cf("simulate", &missing, dir.path(), &[])), 64);
    assert_eq!(code(&bin().arg("simulate").output().unwrap()), 64);
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 64);
    let bad = write_config(dir.path(), "[grid]\nds = 'x'\n");
    assert_eq!(code(&cf("simulate", &bad, dir.path(), &[])), 64);
    let cfg = write_config(dir.path(), BASE);
    let o = bin()
        .env("CF_LAB_THREADS", "zero")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
}

#[test]
fn verify_artifact_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    assert_eq!(code(&cf("verify", &cfg, &out, &[])), 66);
    assert_eq!(code(&cf("simulate", &cfg, &out, &[])), 0);
    let traj = out.join("trajectory.csv");
    let text = fs::read_to_string(&traj).unwrap();
    fs::write(&traj, text.replacen("e0,", "e0,garbage,", 1)).unwrap();
    assert_eq!(code(&cf("verify", &cfg, &out, &[])), 65);
    fs::write(&traj, "t,m0\n0,1\n").unwrap();
    assert_eq!(code(&cf("verify", &cfg, &out, &[])), 65);
}

#[test]
fn verify_flags_violations() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    assert_eq!(code(&cf("simulate", &cfg, &out, &[])), 0);
    // inflate m2 at one time above the envelope
    let traj = out.join("trajectory.csv");
    let text = fs::read_to_string(&traj).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[5].split(',').map(String::from).collect();
    fields[3] = "5.0000000000000000e0".into();
    lines[5] = fields.join(",");
    fs::write(&traj, lines.join("\n") + "\n").unwrap();
    assert_eq!(code(&cf("verify", &cfg, &out, &[])), 2);
    let report = fs::read_to_string(out.join("verify_report.csv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("second_moment_envelope,FAIL")));
}

#[test]
fn runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&cf("simulate", &cfg, out, &[])), 0);
        assert_eq!(code(&cf("stochastic", &cfg, out, &["--seed", "99"])), 0);
    }
    for name in ["trajectory.csv", "snapshots.csv", "ensemble.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = dir.path().join("c");
    assert_eq!(code(&cf("stochastic", &cfg, &c, &["--seed", "100"])), 0);
    assert_ne!(fs::read(a.join("ensemble.csv")).unwrap(), fs::read(c.join("ensemble.csv")).unwrap());
    let ens = fs::read_to_string(a.join("ensemble.csv")).unwrap();
    assert!(ens.starts_with(
        "t,mean_m0,mean_m1,mean_m2,mean_m3,stderr_m0,stderr_m1,stderr_m2,stderr_m3,replicas\n"
    ));
}

#[test]
fn characteristics_export() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    let o = cf("characteristics", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fan = fs::read_to_string(out.join("fan.csv")).unwrap();
    assert!(fan.starts_with("start_x,t,X,P,Z,terminated_flag\n"));
    assert_eq!(fan.lines().count(), 1 + 300 * 301);
    let report = fs::read_to_string(out.join("characteristics_report.csv")).unwrap();
    assert!(report.lines().skip(1).all(|l| l.contains(",PASS,")));
}

#[test]
fn convergence_contract() {
    let dir = TempDir::new().unwrap();
    let one = format!("{BASE}\n[convergence]\neps = [0.1]\nx_min = 0.5\nx_max = 5.0\nt_max = 0.3\n");
    let cfg = write_config(dir.path(), &one);
    assert_eq!(code(&cf("convergence", &cfg, dir.path(), &[])), 64);

    let uncovered = format!("{BASE}\n[convergence]\neps = [0.2, 0.1, 0.05]\nx_min = 0.2\nx_max = 5.0\nt_max = 0.3\npaths = 200\n");
    let cfg = write_config(dir.path(), &uncovered);
    let o = cf("convergence", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("starts must span"));

    let ok = format!("{BASE}\n[convergence]\neps = [0.2, 0.1, 0.05]\nx_min = 0.5\nx_max = 5.0\nt_max = 0.3\npaths = 800\nfan_dt = 1e-3\n");
    let cfg = write_config(dir.path(), &ok);
    let out = dir.path().join("conv");
    let o = cf("convergence", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    // at tiny eps on a coarse grid the discretization error dominates the gap
    let coarse = BASE.replace("ds = 0.125", "ds = 0.5").replace("bins = 256", "bins = 64");
    let flat = format!("{coarse}\n[convergence]\neps = [0.003, 0.002, 0.001]\nx_min = 0.5\nx_max = 5.0\nt_max = 0.3\npaths = 400\nfan_dt = 1e-3\n");
    let cfg = write_config(dir.path(), &flat);
    let o = cf("convergence", &cfg, &dir.path().join("flat"), &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not strictly decreasing"));
}
