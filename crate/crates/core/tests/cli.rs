use std::path::Path;

use crfade::cli::{main_with, EXIT_BAD_INPUT, EXIT_EMPTY, EXIT_OK, EXIT_VALIDATION};

fn run(args: &[&str]) -> i32 {
    main_with(std::iter::once("crfade").chain(args.iter().copied()))
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
}

#[test]
fn eval_reports_rate_and_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval.txt");
    let o = out.to_str().unwrap();
    let code = run(&["--out", o, "eval", "--g", "1", "--p", "2.5", "--rho1", "0.9", "--rho2", "0", "--d", "0.9"]);
    assert_eq!(code, EXIT_OK);
    let text = read(&out);
    // 0.5 log2(0.9 * 5.4 / 2.375)
    let expected = 0.5 * (0.9f64 * 5.4 / 2.375).log2();
    assert!((field(&text, "rate_bits") - expected).abs() < 1e-11);
    assert!((field(&text, "oracle_rate_bits") - expected).abs() < 1e-11);
    assert!(text.contains("feasible true"));

    let code = run(&["--out", o, "eval", "--g", "1", "--p", "2.5", "--rho1", "0", "--rho2", "0", "--d", "1"]);
    assert_eq!(code, EXIT_OK);
    let text = read(&out);
    assert_eq!(field(&text, "rate_bits"), 0.0);
    assert!(text.contains("feasible true"));
}

#[test]
fn eval_in_nats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval.txt");
    let code = run(&[
        "--log-base", "e", "--out", out.to_str().unwrap(), "eval", "--g", "1", "--p", "2.5", "--rho1", "0.9", "--rho2",
        "0", "--d", "0.9",
    ]);
    assert_eq!(code, EXIT_OK);
    let expected = 0.5 * (0.9f64 * 5.4 / 2.375).ln();
    assert!((field(&read(&out), "rate_nats") - expected).abs() < 1e-11);
}

#[test]
fn bad_input_exits_two() {
    let args = ["eval", "--g", "1", "--p", "2.5", "--rho1", "0.9", "--rho2", "0.9", "--d", "0.9"];
    assert_eq!(run(&args), EXIT_BAD_INPUT);
    assert_eq!(run(&["eval", "--g", "1", "--p", "-1", "--rho1", "0", "--rho2", "0", "--d", "0.5"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["eval", "--g", "1", "--p", "1", "--rho1", "0", "--rho2", "0", "--d", "1.5"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["--nodes", "1000", "eval", "--g", "1", "--p", "1", "--rho1", "0", "--rho2", "0", "--d", "0.5"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["--log-base", "10", "validate"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["frobnicate"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["validate", "--samples", "10"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["--config", "/nonexistent/config.json", "validate"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["power", "--rate", "-1"]), EXIT_BAD_INPUT);
    assert_eq!(run(&["power", "--rate", "0.1", "--dgrid", "0:2:3"]), EXIT_BAD_INPUT);
}

#[test]
fn invalid_config_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"Q": -1, "sigma_z2": 1, "P_avg": 1, "fading": {"type": "rayleigh"}}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "region"]), EXIT_BAD_INPUT);
}

#[test]
fn region_writes_csv_manifest_and_static_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region.csv");
    assert_eq!(run(&["--out", out.to_str().unwrap(), "region", "--points", "20", "--compare-static"]), EXIT_OK);
    let csv = read(&out);
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("D,R_bits,d_used,mode"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert!(!rows.is_empty());
    let d: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    let r: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[0] < w[1]));
    assert!(r.windows(2).all(|w| w[0] <= w[1]));
    assert!(rows.iter().all(|row| row[3] == "fixed-rho" && row[2].parse::<f64>().unwrap() <= row[0].parse::<f64>().unwrap()));

    let stat = read(&dir.path().join("region.static.csv"));
    assert!(stat.starts_with("D,R_bits,d_used,mode\n"));

    let manifest: serde_json::Value = serde_json::from_str(&read(&dir.path().join("region.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "region");
    assert_eq!(manifest["mode"], "fixed-rho");
    assert_eq!(manifest["quadrature_nodes"], 64);
    assert_eq!(manifest["config"]["P_avg"], 2.5);
    assert_eq!(manifest["arguments"]["points"], 20);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert!(manifest["finished_unix"].as_f64().unwrap() >= manifest["started_unix"].as_f64().unwrap());
}

#[test]
fn region_without_channel_keeps_only_full_distortion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"Q": 1, "sigma_z2": 1, "P_avg": 2.5, "fading": {"type": "degenerate", "g": 0}}"#).unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "region"]), EXIT_OK);
    assert_eq!(read(&out), "D,R_bits,d_used,mode\n1,0,1,fixed-rho\n");
}

#[test]
fn power_rows_and_unreachable_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["--out", o, "power", "--rate", "0", "--dgrid", "0.5,1"]), EXIT_OK);
    let csv = read(&out);
    assert!(csv.starts_with("R_bits,D,P_min\n"));
    assert!(csv.ends_with("0,1,0\n"), "{csv}");

    assert_eq!(run(&["--out", o, "power", "--rate", "40", "--dgrid", "0.5"]), EXIT_EMPTY);
    assert_eq!(read(&out), "R_bits,D,P_min\n40,0.5,unreachable\n");
}

#[test]
fn power_split_writes_one_file_per_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let args = ["--out", out.to_str().unwrap(), "power", "--rate", "0", "--rate", "0.1", "--dgrid", "1", "--format", "split"];
    assert_eq!(run(&args), EXIT_OK);
    assert_eq!(read(&dir.path().join("p.R0.csv")), "D,P_min\n1,0\n");
    let second = read(&dir.path().join("p.R0.1.csv"));
    let p: f64 = second.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(p > 0.0 && p < 1.0, "{second}");
}

#[test]
fn validate_is_deterministic_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let common = ["validate", "--draws", "300", "--samples", "20000"];
    let with = |out: &Path, threads: &str| {
        let mut args = vec!["--threads", threads, "--seed", "9", "--out", out.to_str().unwrap()];
        args.extend(common);
        run(&args)
    };
    assert_eq!(with(&a, "1"), EXIT_OK);
    assert_eq!(with(&b, "3"), EXIT_OK);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_str(&read(&a)).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["seed"], 9);

    let c = dir.path().join("c.json");
    let mut args = vec!["--out", c.to_str().unwrap()];
    args.extend(common);
    args.extend(["--tolerance-scale", "1e-30"]);
    assert_eq!(run(&args), EXIT_VALIDATION);
    let report: serde_json::Value = serde_json::from_str(&read(&c)).unwrap();
    assert_eq!(report["passed"], false);
}
