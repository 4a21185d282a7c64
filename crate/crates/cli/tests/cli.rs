use std::path::Path;
use std::process::Command;

const CONSTANT: &str = r#"{
    "scenario": "constant",
    "graph": {"kind": "two_phase", "L": 1.0},
    "s": 0.5,
    "dx": 0.05,
    "window": [-2.0, 2.0],
    "T": 0.2,
    "snapshot_times": [0.0, 0.1],
    "datum": {"type": "constant", "value": 1.75},
    "analyses": ["weak_residual"]
}"#;

fn fstefan(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fstefan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn constant_config_keeps_every_snapshot_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONSTANT);
    let out = tmp.path().join("run");
    let res = fstefan(&["simulate", &cfg, "--out", out.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let mut seen = 0;
    for t in ["0", "0.1", "0.2"] {
        let csv = std::fs::read_to_string(out.join(format!("snap_t{t}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,h,u"));
        for line in lines {
            let h: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(h, 1.75);
            seen += 1;
        }
    }
    assert_eq!(seen, 3 * 81);
    for f in [
        "metadata.json",
        "manifest.json",
        "monitor.csv",
        "plot_h.svg",
        "plot_u.svg",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["sampling"], "cell_average");
    assert_eq!(
        meta["analyses"]["weak_residual"]["residual"]
            .as_f64()
            .map(|r| r.abs() < 1e-9),
        Some(true)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs
        .iter()
        .all(|e| e["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn identical_configs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let text = CONSTANT.replace(
        r#"{"type": "constant", "value": 1.75}"#,
        r#"{"type": "riemann", "b1": 2.0, "b2": -1.0}"#,
    );
    let cfg = write_config(tmp.path(), &text);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        assert!(fstefan(&["simulate", &cfg, "--out", d.to_str().unwrap()])
            .status
            .success());
    }
    for f in ["snap_t0.2.csv", "monitor.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap()
        );
    }
}

#[test]
fn missing_order_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &CONSTANT.replace("\"s\": 0.5,", ""));
    let res = fstefan(&[
        "simulate",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("`s`"), "{err}");
}

#[test]
fn bad_theta_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &CONSTANT.replace("\"T\": 0.2,", "\"T\": 0.2, \"theta\": 1.5,"),
    );
    let res = fstefan(&[
        "simulate",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("theta"));
}

#[test]
fn nested_type_error_reports_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &CONSTANT.replace("\"L\": 1.0", "\"L\": \"one\""),
    );
    let res = fstefan(&[
        "simulate",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("graph.L"));
}
