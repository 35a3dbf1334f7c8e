use std::path::PathBuf;
use std::process::{Command, Output};

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn privopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privopt"))
        .args(args)
        .output()
        .expect("launch privopt")
}

fn with_config(cmd: &str, name: &str, json: &str, extra: &[&str]) -> Output {
    let path = tmp(name);
    std::fs::write(&path, json).unwrap();
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    privopt(&args)
}

fn csv_rows(text: &str) -> (String, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let schema = lines.next().unwrap().to_string();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (schema, header, rows)
}

#[test]
fn t1b_row_matches_the_closed_form() {
    let out = with_config(
        "bounds",
        "t1b.json",
        r#"{"theorems": ["T1b"], "d_grid": [8], "n_grid": [1024], "m_over_l": [4], "lemma8": {"d_grid": []}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let (schema, header, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(schema, "# privopt-bounds/v1");
    assert_eq!(rows.len(), 1);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let row = &rows[0];
    assert_eq!(row[col("theorem")], "T1b");
    let lower: f64 = row[col("lower_bound")].parse().unwrap();
    let want = (4.0 * 16f64.ln().sqrt() / (2.0 * 32.0)).min(1.0) / 8.0;
    assert_eq!(lower, want);
    let upper: f64 = row[col("upper_bound")].parse().unwrap();
    assert!(lower <= upper);
}

#[test]
fn every_table_starts_with_its_schema() {
    let cases = [
        (
            "tradeoff",
            "# privopt-tradeoff/v1",
            r#"{"experiments": ["rate_n"], "reps": 2, "rate_n": {"d_grid": [2], "n_grid": [64, 256]}}"#,
        ),
        (
            "bias-demo",
            "# privopt-bias-demo/v1",
            r#"{"n_grid": [200], "reps": 2}"#,
        ),
        (
            "bounds",
            "# privopt-bounds/v1",
            r#"{"d_grid": [2], "n_grid": [100]}"#,
        ),
    ];
    for (cmd, schema, cfg) in cases {
        let out = with_config(cmd, &format!("{cmd}-schema.json"), cfg, &["--seed", "3"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next(), Some(schema));
    }
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let cfg = r#"{"kind": "linf_maxent", "d": 3, "L": 1.0, "M_or_eps": 2.0}"#;
    let stdout = with_config("certify", "certify-stdout.json", cfg, &[]);
    let path = tmp("certify.out");
    let file = with_config(
        "certify",
        "certify-file.json",
        cfg,
        &["--out", path.to_str().unwrap()],
    );
    assert_eq!(stdout.status.code(), Some(0));
    assert_eq!(file.status.code(), Some(0));
    assert!(file.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout.stdout);
    let report: serde_json::Value = serde_json::from_slice(&stdout.stdout).unwrap();
    let bits = report["mi_exact_bits"].as_f64().unwrap();
    let h = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
    assert!((bits - 3.0 * (1.0 - h)).abs() < 1e-10);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(privopt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(privopt(&["certify"]).status.code(), Some(1));
    assert_eq!(
        privopt(&["bounds", "--config", "/nonexistent/config.json"])
            .status
            .code(),
        Some(1)
    );
    let unknown = with_config("bounds", "unknown-field.json", r#"{"dgrid": [2]}"#, &[]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("invalid configuration"));
    let typo = with_config(
        "certify",
        "certify-typo.json",
        r#"{"kind": "linf_maxent", "d": 2, "L": 1.0, "M_or_eps": 2.0, "draw": 10}"#,
        &[],
    );
    assert_eq!(typo.status.code(), Some(1));
    let bad_channel = with_config(
        "certify",
        "bad-channel.json",
        r#"{"kind": "linf_maxent", "d": 2, "L": 1.0, "M_or_eps": 0.5}"#,
        &[],
    );
    assert_eq!(bad_channel.status.code(), Some(1));
}

#[test]
fn biased_channel_is_a_violation() {
    let out = with_config(
        "certify",
        "biased.json",
        r#"{"kind": "biased_demo", "d": 1, "L": 0.5, "M_or_eps": 2.0, "bias": [-1.0]}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missed_threshold_exits_3_only_with_check() {
    let cfg = r#"{"experiments": ["rate_eps"], "reps": 2,
                  "rate_eps": {"d_grid": [4], "n": 64, "eps_grid": [0.9, 1.0]}}"#;
    let plain = with_config("tradeoff", "missed.json", cfg, &["--seed", "1"]);
    assert_eq!(plain.status.code(), Some(0));
    let checked = with_config(
        "tradeoff",
        "missed-check.json",
        cfg,
        &["--seed", "1", "--check"],
    );
    assert_eq!(checked.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&checked.stderr).contains("rate_eps"));
}

#[test]
fn seed_flag_overrides_the_config_seed() {
    let a = with_config(
        "bias-demo",
        "seed-a.json",
        r#"{"seed": 5, "n_grid": [300], "reps": 2}"#,
        &[],
    );
    let b = with_config(
        "bias-demo",
        "seed-b.json",
        r#"{"seed": 9, "n_grid": [300], "reps": 2}"#,
        &["--seed", "5"],
    );
    let c = with_config(
        "bias-demo",
        "seed-c.json",
        r#"{"seed": 9, "n_grid": [300], "reps": 2}"#,
        &[],
    );
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
