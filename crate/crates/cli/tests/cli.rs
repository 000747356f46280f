use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmt")).args(args).output().expect("run cmt")
}

fn ok(args: &[&str]) {
    let out = cmt(args);
    assert!(out.status.success(), "cmt {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Flat continuously compounded curve `df = exp(-r t)` out to 40y.
fn flat_curve(dir: &Path, rate: f64) -> PathBuf {
    let path = dir.join("flat.csv");
    let mut text = String::from("t,df\n0,1\n");
    for t in [1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
        text.push_str(&format!("{t},{:?}\n", (-rate * t).exp()));
    }
    fs::write(&path, text).unwrap();
    path
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut all: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    all.sort();
    all
}

#[test]
fn outputs_are_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture("price_config.json");
    let runs = [("a", "1"), ("b", "1"), ("c", "4")];
    for (name, threads) in runs {
        let out = tmp.path().join(name);
        let common = ["--config", s(&config), "--paths", "96", "--step-days", "7", "--threads", threads, "--out", s(&out)];
        ok(&[&["price", "--dump-paths", "true"][..], &common].concat());
        ok(&[&["convergence", "--path-counts", "16,32,96"][..], &common].concat());
        ok(&[&["surface", "--expiries", "1,2", "--strikes", "0.01,atm"][..], &common].concat());
    }
    let first = files(&tmp.path().join("a"));
    assert_eq!(first.len(), 5);
    assert_eq!(first, files(&tmp.path().join("b")));
    assert_eq!(first, files(&tmp.path().join("c")));
}

#[test]
fn every_output_starts_with_a_parameter_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture("price_config.json");
    let out = s(tmp.path());
    let common = ["--config", s(&config), "--paths", "8", "--step-days", "30", "--out", out];
    ok(&[&["price", "--dump-paths", "true"][..], &common].concat());
    ok(&[&["sensitivity", "--sweep", "sigma", "--values", "0.01"][..], &common].concat());
    for (name, body) in files(tmp.path()) {
        let text = String::from_utf8(body).unwrap();
        if name.ends_with(".csv") {
            assert!(text.starts_with("# cmt "), "{name}");
            assert!(text.contains("sigma=0.01") && !text.contains("threads") && !text.contains('\r'));
        }
    }
    let json = result(tmp.path());
    assert_eq!(json["parameters"]["sigma"], 0.01);
    assert_eq!(json["parameters"]["seed"], 20120328);
}

#[test]
fn zero_volatility_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let curve = flat_curve(tmp.path(), 0.01);
    let out = tmp.path().join("p");
    ok(&["price", "--discount-curve", s(&curve), "--sigma", "0", "--paths", "16", "--step-days", "7", "--payoff", "caplet", "--strike", "0.005", "--out", s(&out)]);
    let json = result(&out);
    let y0 = json["initial_yield"].as_f64().unwrap();
    let yt = &json["expected_terminal_yield"];
    assert!((yt["mean"].as_f64().unwrap() - y0).abs() < 1e-12);
    assert_eq!(yt["std_error"].as_f64().unwrap(), 0.0);
    assert_eq!(json["option"]["std_error"].as_f64().unwrap(), 0.0);

    let surf = tmp.path().join("v");
    ok(&["surface", "--discount-curve", s(&curve), "--sigma", "0", "--paths", "8", "--step-days", "30", "--expiries", "1,3", "--strikes", "0.005,atm,0.02", "--out", s(&surf)]);
    let rows = data_rows(&surf.join("surface.csv"));
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[5].is_empty() && r[6] == "false"));
}

#[test]
fn flat_curve_initial_yield() {
    let tmp = tempfile::tempdir().unwrap();
    let curve = flat_curve(tmp.path(), 0.01);
    ok(&["price", "--discount-curve", s(&curve), "--paths", "4", "--step-days", "30", "--out", s(tmp.path())]);
    let y0 = result(tmp.path())["initial_yield"].as_f64().unwrap();
    assert!((y0 - 0.0100502).abs() < 1e-7, "{y0}");
}

#[test]
fn validation_and_numerical_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let curve = flat_curve(tmp.path(), 0.01);
    let out = s(tmp.path());

    let unsorted = tmp.path().join("unsorted.csv");
    fs::write(&unsorted, "maturity,coupon,frequency,price\n5,0.01,2,1.0\n2,0.01,2,1.0\n").unwrap();
    let run = cmt(&["strip-hazard", "--discount-curve", s(&curve), "--bond-quotes", s(&unsorted), "--out", out]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!run.stderr.is_empty());

    // Above the risk-free price: no nonnegative hazard reprices it.
    let rich = tmp.path().join("rich.csv");
    fs::write(&rich, "maturity,coupon,frequency,price\n2,0.05,2,1.2\n").unwrap();
    let run = cmt(&["strip-hazard", "--discount-curve", s(&curve), "--bond-quotes", s(&rich), "--out", out]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains('2'));

    let bad_config = tmp.path().join("bad.json");
    fs::write(&bad_config, r#"{"discount_curve": "flat.csv", "volatility": 0.01}"#).unwrap();
    assert_eq!(cmt(&["price", "--config", s(&bad_config), "--out", out]).status.code(), Some(2));
    assert_eq!(cmt(&["price", "--out", out]).status.code(), Some(2));
    assert_eq!(cmt(&["price", "--discount-curve", s(&curve), "--recovery", "1.5", "--out", out]).status.code(), Some(2));
    assert_eq!(cmt(&["price", "--discount-curve", s(&curve), "--sigma", "nan", "--out", out]).status.code(), Some(2));
    assert_eq!(cmt(&["convergence", "--discount-curve", s(&curve), "--path-counts", "64,32", "--out", out]).status.code(), Some(2));
    assert_eq!(cmt(&["sensitivity", "--discount-curve", s(&curve), "--values", "0.01", "--out", out]).status.code(), Some(2));
    assert_eq!(cmt(&["price", "--discount-curve", "missing.csv", "--out", out]).status.code(), Some(2));
}

#[test]
fn strip_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&[
        "strip-hazard",
        "--discount-curve",
        s(&fixture("jpy_synthetic_discount.csv")),
        "--bond-quotes",
        s(&fixture("jpy_synthetic_quotes.csv")),
        "--recovery",
        "0.2",
        "--out",
        s(tmp.path()),
    ]);
    let hazard = data_rows(&tmp.path().join("hazard.csv"));
    assert_eq!(hazard.len(), 6);
    let expected = [0.001, 0.0015, 0.002, 0.0025, 0.003, 0.003];
    for (row, want) in hazard.iter().zip(expected) {
        assert!((row[1].parse::<f64>().unwrap() - want).abs() < 1e-8);
    }
    for row in data_rows(&tmp.path().join("repricing.csv")) {
        assert!(row[3].parse::<f64>().unwrap().abs() < 1e-10);
    }
}

#[test]
fn risk_free_quotes_strip_to_zero_hazard() {
    let tmp = tempfile::tempdir().unwrap();
    let rate: f64 = 0.01;
    let curve = flat_curve(tmp.path(), rate);
    // Risk-free dirty prices of semiannual bonds.
    let mut text = String::from("maturity,coupon,frequency,price\n");
    for maturity in [1u32, 3, 5, 10] {
        let c = 0.02;
        let n = 2 * maturity;
        let pv: f64 = (1..=n).map(|i| c / 2.0 * (-rate * f64::from(i) / 2.0).exp()).sum::<f64>()
            + (-rate * f64::from(maturity)).exp();
        text.push_str(&format!("{maturity},{c},2,{pv:?}\n"));
    }
    let quotes = tmp.path().join("q.csv");
    fs::write(&quotes, text).unwrap();
    ok(&["strip-hazard", "--discount-curve", s(&curve), "--bond-quotes", s(&quotes), "--out", s(tmp.path())]);
    for row in data_rows(&tmp.path().join("hazard.csv")) {
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn single_value_studies_write_single_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture("price_config.json");
    let common = ["--config", s(&config), "--paths", "16", "--step-days", "30", "--out", s(tmp.path())];
    ok(&[&["convergence", "--path-counts", "16"][..], &common].concat());
    ok(&[&["sensitivity", "--sweep", "alpha", "--values", "0.05"][..], &common].concat());
    assert_eq!(data_rows(&tmp.path().join("convergence_yield.csv")).len(), 1);
    assert_eq!(data_rows(&tmp.path().join("convergence_caplet.csv")).len(), 1);
    let rows = data_rows(&tmp.path().join("sensitivity.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0.05");
}

#[test]
fn convergence_prefixes_match_direct_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture("price_config.json");
    let common = ["--config", s(&config), "--step-days", "30", "--out", s(tmp.path())];
    ok(&[&["convergence", "--path-counts", "8,32"][..], &common].concat());
    ok(&[&["price", "--paths", "8"][..], &common].concat());
    let json = result(tmp.path());
    let row = &data_rows(&tmp.path().join("convergence_caplet.csv"))[0];
    assert_eq!(row[1].parse::<f64>().unwrap(), json["option"]["price"].as_f64().unwrap());
}
