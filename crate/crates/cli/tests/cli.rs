//! End-to-end checks of the `rtz` binary: verbs, exit codes, report files,
//! and the moment cache.

use std::path::Path;
use std::process::Command;

fn rtz() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rtz"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn version_names_schema_and_engine() {
    let out = rtz().arg("--version").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("rtz"), "{text}");
    assert!(text.contains("report schema v1"), "{text}");
}

#[test]
fn norms_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("norms.csv");
    let status = rtz()
        .args(["norms", "--domain", "polydisk(1,1)", "--alpha-max", "(3,3)"])
        .arg("--out")
        .arg(&out_csv)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert!(text.starts_with("alpha,norm,coeff\n"));
    assert_eq!(text.lines().count(), 17, "header + 16 rows");
    // 17 significant digits on every float
    let row = text.lines().nth(1).unwrap();
    let norm_field = row.split(',').nth(1).unwrap();
    assert!(norm_field.contains('e') && norm_field.len() >= 18, "{norm_field}");
    assert!(out_csv.with_extension("csv.manifest.json").exists());
}

#[test]
fn product_check_reports_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let symbols = dir.path().join("symbols.cfg");
    write(
        &symbols,
        "[symbols]\nsymbol = qh(twist=(-1), radial=\"r1\")\nsymbol = qh(twist=(1), radial=\"r1\")\n",
    );
    let report = dir.path().join("report.json");
    let matrix = dir.path().join("matrix.csv");
    let status = rtz()
        .args(["product-check", "--domain", "polydisk(1)", "--kmax", "(10)"])
        .arg("--symbols")
        .arg(&symbols)
        .arg("--export-matrix")
        .arg(&matrix)
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["zero_flag"], false);
    assert_eq!(json["k0_used"][0], 1);
    assert!(json["norm_estimate"].as_f64().unwrap() > 0.75);
    assert!(json.get("witness").is_some());
    assert!(json.get("skipped_tuples").is_some());
    assert!(json.get("slice_residual").is_some());

    let matrix_text = std::fs::read_to_string(&matrix).unwrap();
    assert!(matrix_text.starts_with("source,target,re,im\n"));
    assert!(matrix_text.lines().count() > 5);
}

#[test]
fn fiber_analyze_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fiber.json");
    let status = rtz()
        .args([
            "fiber",
            "analyze",
            "--set",
            "GEO(2) x FULL | AP(2,2) x FULL",
            "--decompose",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["condition_i"], true);
    assert!(json["witness"].is_string());
    assert!(json["layers"].as_array().unwrap().len() == 3);
    assert!(json["deleted"].as_array().unwrap().len() == 2);
}

#[test]
fn config_errors_exit_1_numeric_failures_exit_2() {
    // unknown domain kind: config error
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let status = rtz()
        .args(["norms", "--domain", "cube(1)", "--alpha-max", "(2,2)"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // bad set expression: config error with position info
    let output = rtz()
        .args(["fiber", "analyze", "--set", "AP(0,2)"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("position"));

    // twist so negative the verdict lattice empties: numeric failure
    let symbols = dir.path().join("symbols.cfg");
    write(
        &symbols,
        "[symbols]\nsymbol = qh(twist=(-5), radial=\"r1^5\")\n",
    );
    let report = dir.path().join("report.json");
    let status = rtz()
        .args(["product-check", "--domain", "polydisk(1)", "--kmax", "(3)"])
        .arg("--symbols")
        .arg(&symbols)
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn moment_cache_dir_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    std::fs::create_dir(&cache).unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let status = rtz()
            .args(["norms", "--domain", "ball(1)", "--alpha-max", "(4,4)"])
            .arg("--out")
            .arg(out)
            .env("RT_CACHE_DIR", &cache)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    // the cache directory now holds a table for this domain/tolerance
    let cached: Vec<_> = std::fs::read_dir(&cache)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(cached.len(), 1, "one cache table expected");
    // identical outputs across runs
    assert_eq!(
        std::fs::read_to_string(&out1).unwrap(),
        std::fs::read_to_string(&out2).unwrap()
    );
}

#[test]
fn experiment_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.cfg");
    write(
        &config,
        r#"
[domain]
domain = polydisk(1)

[symbols]
symbol = qh(twist=(0), radial="r1^2 - 0.666666666666666667", sup=1)
symbol = qh(twist=(0), radial="1", sup=1)

[lattice]
kmax = (10)

[experiment]
kind = proposition1
seed = 7
out = report.json
"#,
    );
    let status = rtz()
        .args(["experiment", "proposition1"])
        .arg("--config")
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["verdict"], "no zero factor");
    // the sign-changing radial vanishes at exactly k = 1
    assert_eq!(json["factors"][0]["zero_set"], serde_json::json!([[1]]));
}
