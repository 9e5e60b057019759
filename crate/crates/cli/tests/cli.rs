use std::path::Path;
use std::process::{Command, Output};

fn lancaster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lancaster"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: [&str; 8] = ["--grid", "0,1", "--n", "80", "--reps", "3", "--bootstraps", "19"];

fn prices_csv(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("prices.csv");
    let mut text = String::from("date,eur,gbp,jpy\n");
    let (mut a, mut b, mut c) = (1.0f64, 2.0f64, 3.0f64);
    for i in 0..120u32 {
        let t = i as f64;
        a += (t * 0.7).sin();
        b += (t * 1.3).cos() * 0.5;
        c += ((t * 0.37).sin() * (t * 0.11).cos()).abs() - 0.3;
        text.push_str(&format!("d{i},{a},{b},{c}\n"));
    }
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn power_curve_csv_to_stdout() {
    let mut args = vec!["--experiment", "power_weak_pairwise"];
    args.extend(SMALL);
    let o = lancaster(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "experiment,coefficient,method,correction,rejection_rate,replications,mean_statistic,seconds"
    );
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("power_weak_pairwise,0.0,lancaster,simple,"));
}

#[test]
fn output_is_independent_of_thread_count() {
    let run = |threads: &str| {
        let mut args = vec!["--experiment", "fpr_study", "--seed", "9", "--threads", threads];
        args.extend(SMALL);
        let i = args.len() - 7;
        args[i] = "0,0.5";
        let o = lancaster(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn filters_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.json");
    let plot = dir.path().join("rows.svg");
    let mut args = vec![
        "--experiment",
        "fpr_study",
        "--correction",
        "hb",
        "--method",
        "perm",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ];
    args.extend(SMALL);
    let i = args.len() - 7;
    args[i] = "0,0.5";
    let o = lancaster(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["method"], "lancaster-permutation");
        assert_eq!(r["correction"], "holm-bonferroni");
    }
    assert!(std::fs::read_to_string(&plot).unwrap().contains("<polyline"));
}

#[test]
fn single_test_on_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = prices_csv(dir.path());
    let o = lancaster(&[
        "--experiment",
        "single_test",
        "--input",
        input.to_str().unwrap(),
        "--columns",
        "eur,gbp,jpy",
        "--rows",
        "0:50",
        "--shift",
        "jpy:60",
        "--bootstraps",
        "49",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["n"], 50);
    assert_eq!(report["pairwise_hsic"].as_array().unwrap().len(), 3);
    for sub in report["lancaster"]["sub"].as_array().unwrap() {
        let p = sub["p"].as_f64().unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }
}

#[test]
fn input_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = prices_csv(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec!["--experiment", "fpr_study", "--grid", "0.5,1.0"],
        vec!["--experiment", "power_weak_pairwise", "--reps", "0"],
        vec!["--experiment", "power_weak_pairwise", "--alpha", "1.5"],
        vec!["--experiment", "power_weak_pairwise", "--sigma-x", "-1"],
        vec!["--experiment", "nope"],
        vec!["--experiment", "single_test"],
        vec![
            "--experiment",
            "single_test",
            "--input",
            input.to_str().unwrap(),
            "--columns",
            "eur,gbp,chf",
        ],
        vec![
            "--experiment",
            "single_test",
            "--input",
            input.to_str().unwrap(),
            "--columns",
            "eur,gbp,jpy",
            "--shift",
            "jpy:500",
        ],
    ];
    for args in cases {
        let o = lancaster(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unwritable_output_exits_with_3() {
    let mut args = vec!["--experiment", "power_strong_pairwise", "--out", "/nonexistent/dir/x.csv"];
    args.extend(SMALL);
    let o = lancaster(&args);
    assert_eq!(o.status.code(), Some(3));
}
