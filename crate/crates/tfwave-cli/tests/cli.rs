use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tfwave(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tfwave"));
    cmd.args(args).env_remove("TFWAVE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run_ok(sub: &str, config: &Path, out: &Path, envs: &[(&str, &str)]) -> String {
    let o = tfwave(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], envs);
    assert!(o.status.success(), "{sub} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const DELTA: &str = r#"
weight = "log"
[signal]
family = "delta"
[frame]
kind = "stationary"
window = "gauss:1"
alpha = 0.5
beta = 0.5
"#;

#[test]
fn wavefront_delta_has_two_singular_sectors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "delta.toml", DELTA);
    run_ok("wavefront", &cfg, dir.path(), &[]);
    let r = json(&dir.path().join("wavefront.json"));
    for key in ["weight", "K", "r0", "rho", "J", "lambdaReg", "sectors"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    let singular: Vec<u64> = r["sectors"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["status"] == "Singular")
        .map(|s| s["k"].as_u64().unwrap())
        .collect();
    assert_eq!(singular, vec![4, 12]);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "delta.toml", &DELTA.replace("delta", "chirp:1"));
    let (one, many) = (dir.path().join("one"), dir.path().join("many"));
    run_ok("analyze", &cfg, &one, &[("TFWAVE_THREADS", "1")]);
    run_ok("analyze", &cfg, &many, &[("TFWAVE_THREADS", "4")]);
    let read = |d: &Path| std::fs::read(d.join("coefficients.csv")).unwrap();
    assert_eq!(read(&one), read(&many));
}

#[test]
fn unknown_key_is_a_validation_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", &DELTA.replace("alpha = 0.5", "alpah = 0.5"));
    let o = tfwave(&["wavefront", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpah"));
}

#[test]
fn invalid_values_and_missing_files_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (DELTA.replace("alpha = 0.5", "alpha = -1.0"), "frame.alpha"),
        (DELTA.replace("\"gauss:1\"", "\"triangle:1\""), "frame.window"),
        (format!("{DELTA}\n[render]\ncoefficients = \"missing.csv\"\n"), "render.coefficients"),
        (DELTA.replace("weight = \"log\"", "weight = \"gevrey:0.5\""), "weight"),
    ];
    for (i, (body, key)) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("c{i}.toml"), body);
        let o = tfwave(&["wavefront", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(2), "case {key}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(key), "case {key}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = tfwave(&["wavefront", "--config", dir.path().join("nope.toml").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stability_against_time_side_nsgt_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "nsgt.toml",
        r#"
[signal]
family = "const"
[reference]
kind = "stationary"
[frame]
kind = "nsgt-time"
window = "bump:8,1"
alpha = 0.5
steps = "sine:0.045,0.3"
index_radius = 60
"#,
    );
    let stdout = run_ok("stability", &cfg, dir.path(), &[]);
    assert!(stdout.starts_with("PASS"), "{stdout}");
    let r = json(&dir.path().join("comparison.json"));
    assert_eq!(r["result"]["pass"], true);
}

#[test]
fn nsgt_check_reads_step_table() {
    let dir = TempDir::new().unwrap();
    let table: String = std::iter::once("n,value".to_string())
        .chain((-20..=20).map(|n| format!("{n},{}", 0.4 * (1.0 + 0.3 * (n as f64).sin()))))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.path().join("betas.csv"), table).unwrap();
    let cfg = write_config(
        &dir,
        "cert.toml",
        r#"
[frame]
kind = "nsgt-time"
window = "bump:0.9"
alpha = 0.5
steps = "csv:betas.csv"
index_radius = 20
"#,
    );
    run_ok("nsgt-check", &cfg, dir.path(), &[]);
    let r = json(&dir.path().join("certificate.json"));
    assert_eq!(r["status"], "frame");
    assert!(r["A"].as_f64().unwrap() > 0.0 && r["A"].as_f64().unwrap() <= r["B"].as_f64().unwrap());
}

#[test]
fn render_is_deterministic_and_refuses_empty_grids() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "delta.toml", DELTA);
    run_ok("analyze", &cfg, dir.path(), &[]);
    run_ok("render", &cfg, dir.path(), &[]);
    let first = std::fs::read(dir.path().join("heatmap.svg")).unwrap();
    run_ok("render", &cfg, dir.path(), &[]);
    assert_eq!(first, std::fs::read(dir.path().join("heatmap.svg")).unwrap());
    assert!(String::from_utf8(first).unwrap().starts_with("<svg"));

    std::fs::write(dir.path().join("empty.csv"), "m,n,x,xi,re,im,abs\n").unwrap();
    let cfg = write_config(&dir, "empty.toml", "[render]\ncoefficients = \"empty.csv\"\n");
    let o = tfwave(&["render", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn perturbed_frame_bounds_respect_christensen() {
    let dir = TempDir::new().unwrap();
    let a = std::f64::consts::PI.sqrt();
    let cfg = write_config(
        &dir,
        "pert.toml",
        &format!(
            "seed = 3\n[frame]\nkind = \"perturbed\"\nalpha = {a}\nbeta = {a}\nindex_radius = 40\neps0 = 0.1\ndecay = 0.5\n[probe]\nhalf_width = {}\nn = 256\n",
            8.0 * a
        ),
    );
    run_ok("frame-bounds", &cfg, dir.path(), &[]);
    let r = json(&dir.path().join("frame_bounds.json"));
    let lo = r["christensen"]["frame"][0].as_f64().unwrap();
    let hi = r["christensen"]["frame"][1].as_f64().unwrap();
    let (a_est, b_est) = (r["perturbed"]["A_est"].as_f64().unwrap(), r["perturbed"]["B_est"].as_f64().unwrap());
    assert!(lo <= a_est * (1.0 + 1e-6) && b_est <= hi * (1.0 + 1e-6), "{lo} {a_est} {b_est} {hi}");
}
