use std::path::Path;
use std::process::{Command, Output};

use cspart::ccsp::parse_partition_report;
use cspart::geometry::Deployment;
use cspart::harness::parse_csv;

fn cspart(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cspart"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cspart(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generated_deployment_feeds_both_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate", "--n", "80", "--grid", "2", "2", "--seed", "3", "--out", "dep.txt",
        ],
    );
    let dep = Deployment::from_text(&std::fs::read_to_string(d.join("dep.txt")).unwrap()).unwrap();
    assert_eq!(dep.n(), 80);
    assert_eq!((dep.grid.rows, dep.grid.cols), (2, 2));

    let from_file = ok(d, &["ccsp", "--input", "dep.txt"]);
    let regenerated = ok(d, &["ccsp", "--n", "80", "--grid", "2", "2", "--seed", "3"]);
    assert_eq!(from_file, regenerated);
    let report = parse_partition_report(&from_file).unwrap();
    assert!(!report.partitions.is_empty());

    ok(d, &["dcsp", "--input", "dep.txt", "--lp", "0.2", "--out", "dcsp.txt"]);
    let verdict = ok(d, &["check", "--input", "dep.txt", "--report", "dcsp.txt"]);
    assert!(verdict.starts_with("ok:"), "{verdict}");
    std::fs::write(d.join("ccsp.txt"), from_file).unwrap();
    assert!(ok(d, &["check", "--input", "dep.txt", "--report", "ccsp.txt"]).starts_with("ok:"));
}

#[test]
fn check_reports_violations_with_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--n", "20", "--grid", "2", "2", "--out", "dep.txt"]);
    let mut bogus = String::from("partition 1: 0 1\nfree:");
    for u in 2..20 {
        bogus.push_str(&format!(" {u}"));
    }
    bogus.push('\n');
    std::fs::write(d.join("bad.txt"), bogus).unwrap();
    let out = cspart(d, &["check", "--input", "dep.txt", "--report", "bad.txt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("not a connected cover"));
}

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["dcsp", "--lp", "1.5"][..],
        &["ccsp", "--grid", "0", "2"],
        &["campaign", "--grid", "3by3"],
        &["campaign", "--reps", "0"],
        &["campaign", "--algorithms", "greedy"],
        &["lifetime", "--threshold", "500"],
        &["ccsp", "--no-such-flag"],
    ] {
        assert_eq!(cspart(d, args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn campaign_csv_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "campaign",
            "--n",
            "60",
            "--grid",
            "2x2,3x3",
            "--reps",
            "2",
            "--algorithms",
            "ccsp,dcsp",
            "--out",
            "rows.csv",
            "--summary",
            "summary.csv",
        ],
    );
    let text = std::fs::read_to_string(d.join("rows.csv")).unwrap();
    assert!(text
        .starts_with("algorithm,n,grid,rep,seed,partitions,active_pct,density,tx_total,lifetime_rounds,wall_time\n"));
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| r.wall_time.is_none()));
    let summary = std::fs::read_to_string(d.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2);

    ok(
        d,
        &[
            "campaign",
            "--n",
            "40",
            "--grid",
            "2x2",
            "--reps",
            "1",
            "--timing",
            "--out",
            "timed.csv",
        ],
    );
    let timed = parse_csv(&std::fs::read_to_string(d.join("timed.csv")).unwrap()).unwrap();
    assert!(timed.iter().all(|r| r.wall_time.is_some()));
}

#[test]
fn trace_lines_follow_the_documented_format() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "dcsp",
            "--n",
            "60",
            "--grid",
            "2",
            "2",
            "--lp",
            "0.2",
            "--trace",
            "trace.txt",
        ],
    );
    let trace = std::fs::read_to_string(d.join("trace.txt")).unwrap();
    assert!(!trace.is_empty());
    for line in trace.lines() {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 7, "{line}");
        assert_eq!((f[0], f[2]), ("round", "tx"));
        assert!(f[1].parse::<u64>().is_ok());
        assert!(["SelectReq", "Include", "Confirm", "Failed", "Successful"].contains(&f[3]));
        assert!(f[4].contains("->") && f[5].starts_with("L=") && f[6].starts_with("k="));
    }
}

#[test]
fn lifetime_prints_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(
        dir.path(),
        &["lifetime", "--n", "100", "--grid", "2", "2", "--tx-cost", "0"],
    );
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("lifetime_rounds "), "{first}");
}
