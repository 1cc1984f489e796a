//! End-to-end tests of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use bounded_dp::experiments::{CurveRow, SweepRow};
use bounded_dp::format::{parse_f64, sig17};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bounded-dp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json_number(v: &serde_json::Value) -> f64 {
    match v {
        serde_json::Value::Number(n) => n.as_f64().unwrap(),
        serde_json::Value::String(s) => parse_f64(s).unwrap(),
        other => panic!("not a number: {other}"),
    }
}

#[test]
fn help_and_usage_errors() {
    let o = bin(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("oracle-check"));
    let o = bin(&["curves", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bogus"));
    assert!(stdout(&o).is_empty());
    assert_eq!(
        bin(&["curves", "--mechanism", "laplace"]).status.code(),
        Some(2)
    );
    assert_eq!(bin(&["curves", "--theta-step", "0"]).status.code(), Some(2));
}

#[test]
fn curves_defaults_and_gaussian_constant() {
    let o = bin(&["curves"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some(bounded_dp::experiments::CURVE_CSV_HEADER)
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4 * 61);
    for kind in ["gaussian", "rectified", "truncated", "sign"] {
        assert_eq!(rows.iter().filter(|r| r[0] == kind).count(), 61);
    }
    let gauss: Vec<_> = rows.iter().filter(|r| r[0] == "gaussian").collect();
    assert!(gauss
        .iter()
        .all(|r| r[4] == gauss[0][4] && r[5] == gauss[0][5]));
    assert_eq!(parse_f64(gauss[0][4]), Some(1.0));
    assert_eq!(parse_f64(gauss[0][5]), Some(1.0));
}

#[test]
fn curves_json_matches_csv_and_round_trips() {
    let args = [
        "curves",
        "--mechanism",
        "rectified,sign",
        "--sigma",
        "0.5,1",
        "--theta-step",
        "0.5",
    ];
    let csv = stdout(&bin(&args));
    let json = stdout(&bin(&[&args[..], &["--format", "json"]].concat()));
    let rows: Vec<CurveRow> = serde_json::from_str(&json).unwrap();
    let csv_lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), csv_lines.len());
    for (r, l) in rows.iter().zip(&csv_lines) {
        assert_eq!(&r.csv(), l);
    }
    assert_eq!(serde_json::to_string_pretty(&rows).unwrap() + "\n", json);
    // CSV fields re-serialize byte for byte.
    for l in &csv_lines {
        for f in l.split(',').skip(1).filter(|f| !f.is_empty()) {
            assert_eq!(sig17(parse_f64(f).unwrap()), *f);
        }
    }
}

#[test]
fn account_toy_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "g.txt", "d=2 n=2 C=1\n0.5 -0.5\n0.25 0.75\n");
    let run = |mech: &str| {
        let o = bin(&[
            "account",
            &file,
            "--mechanism",
            mech,
            "--sigma",
            "2",
            "--half-width",
            "1",
            "--alpha-grid",
            "2,4",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["epsilon_per_alpha"]
            .as_array()
            .unwrap()
            .iter()
            .map(json_number)
            .collect::<Vec<f64>>()
    };
    let gauss = run("gaussian");
    // d α C² / (2σ²) with d = 2, C = 1, σ = 2.
    assert_eq!(gauss, vec![2.0 * 2.0 / 8.0, 2.0 * 4.0 / 8.0]);
    let trunc = run("truncated");
    assert!(trunc.iter().zip(&gauss).all(|(t, g)| t < g), "{trunc:?}");
}

#[test]
fn account_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "g.json",
        r#"{"d": 3, "n": 2, "C": 0.5, "gradients": [[0.1, -0.2, 0.3], [0.4, 0.0, -0.5]]}"#,
    );
    let out = dir.path().join("report.json");
    let o = bin(&[
        "account",
        &file,
        "--mechanism",
        "rectified",
        "--sigma",
        "1",
        "--half-width",
        "0.5",
        "--steps",
        "3",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let report = bounded_dp::accountant::AccountingReport::from_json(&text).unwrap();
    assert_eq!(report.step_count, 3);
    assert_eq!(report.to_json(), text);
}

#[test]
fn account_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "d=2 n=2 C=1\n0.5 -0.5\n0.25 oops\n");
    let o = bin(&["account", &bad, "--mechanism", "gaussian", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("row 2"), "{msg}");

    let unclipped = write(dir.path(), "u.txt", "d=2 n=2 C=1\n0.5 -3\n0.25 0.75\n");
    let args = [
        "account",
        &unclipped,
        "--mechanism",
        "truncated",
        "--sigma",
        "1",
        "--half-width",
        "1",
    ];
    let o = bin(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("clip bound"));
    let o = bin(&[&args[..], &["--auto-clip"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = bin(&[
        "account",
        &unclipped,
        "--mechanism",
        "rectified",
        "--sigma",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--half-width"));
    let o = bin(&[
        "account",
        "/nonexistent/file",
        "--mechanism",
        "gaussian",
        "--sigma",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

fn convert(dir: &Path, csv: &str, delta: &str) -> (f64, f64) {
    let file = write(dir, "curve.csv", csv);
    let o = bin(&["convert", &file, "--delta", delta]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    (json_number(&v["epsilon"]), json_number(&v["best_alpha"]))
}

#[test]
fn convert_examples() {
    let dir = tempfile::tempdir().unwrap();
    let delta = 1e-5f64;
    // Single point: ε + ln(1/δ)/(α-1).
    let (eps, alpha) = convert(dir.path(), "alpha,epsilon\n2,0.5\n", "1e-5");
    assert_eq!(alpha, 2.0);
    assert!((eps - (0.5 + (1.0 / delta).ln())).abs() < 1e-12);
    // A dominated point does not change the answer.
    let (eps2, alpha2) = convert(dir.path(), "alpha,epsilon\n2,0.5\n3,100\n", "1e-5");
    assert_eq!((eps2, alpha2), (eps, alpha));
    // Hand enumeration: 1 + 11.513/7 = 2.645 at α = 8 beats 0.25 + 11.513 and 3 + 11.513/31.
    let (eps3, alpha3) = convert(dir.path(), "2,0.25\n8,1\n32,3\n", "1e-5");
    assert_eq!(alpha3, 8.0);
    assert!((eps3 - (1.0 + (1.0 / delta).ln() / 7.0)).abs() < 1e-12);
    let file = write(dir.path(), "bad.csv", "2,0.25\n8;1\n");
    let o = bin(&["convert", &file, "--delta", "1e-5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
    let o = bin(&["convert", &file, "--delta", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convert_accepts_account_reports() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "g.txt", "d=1 n=1 C=1\n0.5\n");
    let report = dir.path().join("r.json");
    let o = bin(&[
        "account",
        &file,
        "--mechanism",
        "gaussian",
        "--sigma",
        "1",
        "-o",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = bin(&[
        "convert",
        report.to_str().unwrap(),
        "--delta",
        "1e-5",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("delta,epsilon,best_alpha\n"));
}

#[test]
fn oracle_check_exit_codes() {
    let o = bin(&["oracle-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert!(text.contains("worst |dev|"));
    let o = bin(&["oracle-check", "--tolerance", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation "));
    let o = bin(&["oracle-check", "--alpha", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("alpha=64"));
    assert_eq!(
        bin(&["oracle-check", "--alpha", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn mean_est_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "mean-est".to_owned(),
            "--n".into(),
            "60".into(),
            "--d".into(),
            "5".into(),
            "--mu".into(),
            "0,0.5".into(),
            "--sigma".into(),
            "0.2".into(),
            "--half-width".into(),
            "0.5,1".into(),
            "--trials".into(),
            "1".into(),
            "--seed".into(),
            "42".into(),
            "-o".into(),
            out.to_owned(),
        ]
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let argv = args(p.to_str().unwrap());
        let o = bin(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    for col in [
        "mse",
        "eps_alpha2",
        "eps_ratio_vs_gaussian",
        "max_fil",
        "median_fil",
    ] {
        assert!(header.contains(&col), "missing column {col}");
    }
    // Two μ values, one Gaussian row plus 2 kinds × 2 widths each.
    assert_eq!(text.lines().count(), 1 + 2 * 5);

    let mut argv = args("-");
    argv.truncate(argv.len() - 2);
    argv.extend(["--format".into(), "json".into()]);
    let o = bin(&argv.iter().map(String::as_str).collect::<Vec<_>>());
    let json = stdout(&o);
    let rows: Vec<SweepRow> = serde_json::from_str(&json).unwrap();
    assert_eq!(serde_json::to_string_pretty(&rows).unwrap() + "\n", json);
    let csv_rows: Vec<String> = rows.iter().map(SweepRow::csv).collect();
    assert_eq!(csv_rows, text.lines().skip(1).collect::<Vec<_>>());
}
