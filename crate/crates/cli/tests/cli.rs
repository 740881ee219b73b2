use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn fraclat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclat")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn payload(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o").to_string_lossy().into_owned();
    let cases = [
        ("simulate", "[simulate]\nalpha = 2.5\n", "alpha must lie in (1, 2)"),
        ("limit-study", "[limit-study]\nalpha = 1.1\np = 3\n", "continuum-limit runs need alpha"),
        ("simulate", "[simulate]\nalpah = 1.5\n", "unknown key [simulate] alpah"),
        ("simulate", "[simulate]\nh = coarse\n", "[simulate] h"),
        ("manifold-scan", "[simulate]\nh = 0.5\n", "does not apply"),
    ];
    for (i, (cmd, text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{i}.cfg"), text);
        let o = fraclat(&[cmd, "--config", &cfg, "--out", &out]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{cmd} {text:?}: {err}");
        assert!(err.contains(needle), "{err}");
    }
    assert!(!Path::new(&out).exists());
    assert_eq!(fraclat(&["simulate", "--config", "/no/such/file"]).status.code(), Some(2));
}

#[test]
fn numerical_abort_exits_with_code_3_and_keeps_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.cfg", "[simulate]\nh = 0.25\nside = 8\nt_final = 0.1\nmass_abort = 1e-30\n");
    let out = tmp.path().join("o");
    let o = fraclat(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let m = manifest(&out);
    assert_eq!(m["status"], "partial");
    assert_eq!(m["failures"][0]["item"], "simulate");
}

#[test]
fn limit_study_writes_checksummed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "l.cfg",
        "[run]\nseed = 5\n[limit-study]\nhs = 0.25, 0.125, 0.0625, 0.03125\nh_ref = 0.0625\nside = 8\nt_final = 0.1\n",
    );
    let out = tmp.path().join("o");
    let o = fraclat(&["limit-study", "--config", &cfg, "--out", out.to_str().unwrap(), "--plot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    let files = m["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["errors.csv", "fit.json", "plot.svg"]);
    for f in files {
        let bytes = fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"].as_str().unwrap(), hex);
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("seed = 5") && text.contains("h_ref = 0.0625"), "{} lacks the config echo", f["name"]);
    }
    assert_eq!(m["seed"], 5);
    let errors: Vec<f64> = payload(&out.join("errors.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errors.len(), 4);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert!(fit["order"].as_f64().unwrap() > 0.4);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.cfg",
        "[dispersion-scan]\nalphas = 1.3, 1.7\nscales = 1, 0.5, 0.0625\ntaus = 10, 20, 40\nbands = S3\nband_base = 100\nband_count = 2\n",
    );
    let run = |dir: &str| {
        let o = fraclat(&["dispersion-scan", "--config", &cfg, "--out", dir, "--threads", "3", "--seed", "11"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(a.to_str().unwrap());
    run(b.to_str().unwrap());
    for f in ["scan.csv", "constants.csv"] {
        assert_eq!(payload(&a.join(f)), payload(&b.join(f)), "{f}");
    }
    // One row per (alpha, N, tau).
    assert_eq!(payload(&a.join("scan.csv")).lines().count(), 1 + 2 * 3 * 3);
}

#[test]
fn manifold_scan_rows_and_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let o = fraclat(&["manifold-scan", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = payload(&out.join("curves.csv"));
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,branch,a,b,xi1,xi2,residual,class,sigma0,d3,abs_d0,fold_proxy,status"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 2 * 64);
    for r in &rows {
        assert_eq!(r[12], "ok");
        assert!(r[6].parse::<f64>().unwrap() <= 1e-10);
        assert_eq!(r[7], "K2");
    }
}

#[test]
fn selftest_passes_and_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.cfg", "seed = 1\nout = ignored\n");
    let out = tmp.path().join("s");
    let o = fraclat(&["selftest", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "42"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
    assert!(!tmp.path().join("ignored").exists());
    assert_eq!(manifest(&out)["seed"], 42);
}
