use std::path::Path;
use std::process::{Command, Output};

fn sape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sape"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const SMALL: [&str; 8] = ["--width", "16", "--depth", "2", "--freqs", "8", "--iters", "20"];

#[test]
fn fit_image_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec![
        "fit-image",
        "--fixture",
        "two-tone",
        "--out",
        out.to_str().unwrap(),
        "--grid-res",
        "8",
    ];
    args.extend(SMALL);
    let o = sape(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let names: Vec<&str> = r["metrics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"psnr"));
    assert_eq!(r["loss_trace"].as_array().unwrap().len(), 20);
    for file in ["config.json", "checkpoint.bin", "grid.bin", "output.png", "heatmap.png"] {
        assert!(out.join(file).exists(), "{file}");
    }

    let o = sape(&["evaluate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("matches"));
}

#[test]
fn fit_signal_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("signal.txt");
    let rows: String = (0..64)
        .map(|k| format!("{} {}\n", k as f64 / 63.0, (k as f64 / 10.0).sin()))
        .collect();
    std::fs::write(&input, rows).unwrap();
    let out = dir.path().join("run");
    let mut args = vec![
        "fit-signal",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--no-sape",
    ];
    args.extend(SMALL);
    let o = sape(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("grid.bin").exists());
    assert!(out.join("output.txt").exists());
}

#[test]
fn sweep_sigma_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let mut args = vec![
        "sweep-sigma",
        "--fixture",
        "two-tone",
        "--out",
        out.to_str().unwrap(),
        "--values",
        "1,10",
    ];
    args.extend(SMALL);
    let o = sape(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let entries = report(&out)["entries"].as_array().unwrap().clone();
    assert_eq!(entries.len(), 4);
    for method in ["sape", "static"] {
        assert_eq!(entries.iter().filter(|e| e["method"] == method).count(), 2);
    }
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(sape(&["fit-image", "--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = sape(&[
        "fit-image",
        "--fixture",
        "two-tone",
        "--out",
        out.to_str().unwrap(),
        "--epsilon",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = sape(&["fit-silhouette", "--fixture", "blob", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec![
        "fit-signal",
        "--fixture",
        "sine",
        "--out",
        out.to_str().unwrap(),
        "--lr",
        "1e200",
    ];
    args.extend(SMALL);
    let o = sape(&args);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
}

#[test]
fn evaluate_detects_tampered_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec![
        "fit-signal",
        "--fixture",
        "chirp",
        "--out",
        out.to_str().unwrap(),
        "--grid-res",
        "8",
    ];
    args.extend(SMALL);
    assert!(sape(&args).status.success());
    let mut r = report(&out);
    r["metrics"][0]["value"] = serde_json::json!(123.0);
    std::fs::write(out.join("report.json"), serde_json::to_string(&r).unwrap()).unwrap();
    let o = sape(&["evaluate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("DIFFERS"));
}
