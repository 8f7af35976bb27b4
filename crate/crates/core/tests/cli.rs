use std::fs;
use std::path::Path;

use mediator_core::cli::run;
use tempfile::TempDir;

const EXAMPLE1: &str = r#"{
  "buyer_dist": { "family": "uniform", "support": [1.0, 2.0] },
  "seller_dist": { "family": "uniform", "support": [1.0, 2.0] },
  "valuation": { "alpha1": "q", "alpha2": "0", "k": 1.5 }
}"#;

const BUMP: &str = r#"{
  "buyer_dist": { "family": "uniform", "support": [0.0, 1.0] },
  "seller_dist": { "family": "uniform", "support": [0.0, 1.0] },
  "valuation": { "alpha1": "1", "alpha2": "40*q^2*(1-q)^2", "k": 1.0 }
}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn mediator(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mediator").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn config(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn out_dir(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn read(dir: &str, file: &str) -> String {
    fs::read_to_string(Path::new(dir).join(file)).unwrap()
}

#[test]
fn example1_golden_run_passes() {
    let d = TempDir::new().unwrap();
    let out = out_dir(&d, "ex1");
    let r = mediator(&["example1", "--out", &out]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(!r.stdout.contains("FAIL"));
    assert_eq!(r.stdout.lines().filter(|l| l.starts_with("PASS")).count(), 9);
    let json: serde_json::Value = serde_json::from_str(&read(&out, "example1.json")).unwrap();
    assert!(json.as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn solve_writes_summary_and_curves() {
    let d = TempDir::new().unwrap();
    let cfg = config(&d, "ex1.json", EXAMPLE1);
    let out = out_dir(&d, "solve");
    let r = mediator(&["solve", &cfg, "--out", &out, "--grid-n", "101"]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    let rev = summary["revenue_direct"].as_f64().unwrap();
    assert!((rev - (0.5625 * 1.5f64.ln() - 0.21875)).abs() < 1e-6);
    assert_eq!(summary["regular"], true);
    assert_eq!(summary["instance"]["numerics"]["grid_n"], 101);

    let buyer = read(&out, "buyer.csv");
    let mut lines = buyer.lines();
    assert_eq!(lines.next(), Some("t,lambda,Pb,Rb,Ub"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 2.0);
    assert!((last[2] - 2.375).abs() < 1e-3);
    assert!(read(&out, "seller.csv").starts_with("q,eta,Ps,Rs,SU\n"));
    assert!(read(&out, "psi.csv").starts_with("t,psi\n"));
    assert!(read(&out, "varphi.csv").starts_with("q,varphi\n"));
}

#[test]
fn solve_output_is_deterministic() {
    let d = TempDir::new().unwrap();
    let cfg = config(&d, "bump.json", BUMP);
    let a = out_dir(&d, "a");
    let b = out_dir(&d, "b");
    assert_eq!(mediator(&["solve", &cfg, "--out", &a]).code, 0);
    assert_eq!(mediator(&["solve", &cfg, "--out", &b]).code, 0);
    for f in ["summary.json", "buyer.csv", "seller.csv", "psi.csv", "varphi.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

#[test]
fn verify_passes_and_reports_failures_with_exit_one() {
    let d = TempDir::new().unwrap();
    let cfg = config(&d, "ex1.json", EXAMPLE1);
    let out = out_dir(&d, "v");
    let ok = mediator(&["verify", &cfg, "--out", &out, "--audit-grid", "41"]);
    assert_eq!(ok.code, 0, "{}", ok.stdout);
    let json: serde_json::Value = serde_json::from_str(&read(&out, "audit.json")).unwrap();
    assert_eq!(json["violations"].as_array().unwrap().len(), 0);
    assert_eq!(json["report"]["grid_n"], 41);

    // a negative tolerance cannot be met: truthful reporting has zero gain
    let strict = mediator(&["verify", &cfg, "--out", &out, "--audit-grid", "41", "--ic-tol=-1"]);
    assert_eq!(strict.code, 1);
    assert!(strict.stdout.contains("violation"));
}

#[test]
fn oracle_table_shrinks_with_grid() {
    let d = TempDir::new().unwrap();
    let cfg = config(&d, "ex1.json", EXAMPLE1);
    let out = out_dir(&d, "o");
    let r = mediator(&["oracle", &cfg, "--out", &out, "--grids", "6,12"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = read(&out, "oracle.csv");
    let errs: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 2);
    assert!(errs[1] < errs[0]);
    let json: serde_json::Value = serde_json::from_str(&read(&out, "oracle.json")).unwrap();
    assert_eq!(json["results"].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_grid_over_cap_is_an_input_error() {
    let d = TempDir::new().unwrap();
    let cfg = config(&d, "ex1.json", EXAMPLE1);
    let r = mediator(&["oracle", &cfg, "--out", &out_dir(&d, "o"), "--grids", "40"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("cap"));
}

#[test]
fn region_csv_has_all_statuses() {
    let d = TempDir::new().unwrap();
    let cfg = config(&d, "ex1.json", EXAMPLE1);
    let out = out_dir(&d, "r");
    let r = mediator(&["region", &cfg, "--out", &out, "--nt", "60", "--nq", "50"]);
    assert_eq!(r.code, 0);
    let csv = read(&out, "region.csv");
    assert!(csv.starts_with("t,q,status\n"));
    assert_eq!(csv.lines().count(), 1 + 60 * 50);
    for s in ["no_trade", "trade_profit", "trade_loss"] {
        assert!(csv.contains(&format!(",{s}\n")), "{s}");
    }
}

#[test]
fn iron_exports_tables_and_intervals() {
    let d = TempDir::new().unwrap();
    let cfg = config(&d, "bump.json", BUMP);
    let out = out_dir(&d, "i");
    let r = mediator(&["iron", &cfg, "--out", &out, "--iron-grid-n", "801"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let seller = read(&out, "iron_seller.csv");
    assert!(seller.starts_with("w,h,H,L,l\n"));
    assert_eq!(seller.lines().count(), 802);
    for line in seller.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[3] <= v[2] + 1e-12, "L > H at w = {}", v[0]);
    }
    let intervals = read(&out, "ironed_intervals.csv");
    assert!(intervals.lines().skip(1).any(|l| l.starts_with("seller,")));
    assert!(!intervals.lines().any(|l| l.starts_with("buyer,")));
}

#[test]
fn input_errors_exit_two() {
    let d = TempDir::new().unwrap();
    let missing = mediator(&["solve", "/definitely/not/here.json"]);
    assert_eq!(missing.code, 2);

    let bad_json = config(&d, "bad.json", "{ not json");
    assert_eq!(mediator(&["solve", &bad_json, "--out", &out_dir(&d, "x")]).code, 2);

    let bad_expr = config(&d, "expr.json", &EXAMPLE1.replace("\"q\", \"alpha2\"", "\"q +\", \"alpha2\""));
    let r = mediator(&["solve", &bad_expr, "--out", &out_dir(&d, "x")]);
    assert_eq!(r.code, 2, "{}", r.stderr);

    let unknown = config(&d, "id.json", &EXAMPLE1.replace("\"alpha2\": \"0\"", "\"alpha2\": \"z\""));
    assert_eq!(mediator(&["solve", &unknown, "--out", &out_dir(&d, "x")]).code, 2);

    let cfg = config(&d, "ex1.json", EXAMPLE1);
    assert_eq!(mediator(&["solve", &cfg, "--grid-n", "1"]).code, 2);
    assert_eq!(mediator(&["frobnicate"]).code, 2);
    assert_eq!(mediator(&["region", &cfg, "--nt", "abc"]).code, 2);
}
