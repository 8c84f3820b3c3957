use std::path::PathBuf;
use std::process::{Command, Output};

use l1fit_cli::PathDocument;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const EXAMPLE: &str = "4,-2,3,-6\n-3,4,2,-1\n2,3,-3,-2\n-3,4,2,3\n5,3,2,-1\n";

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("l1fit-cli-{}-{tag}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Self(dir)
    }

    fn file(&self, name: &str, contents: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, contents).unwrap();
        p.to_string_lossy().into_owned()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn l1fit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l1fit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn random_csv(rng: &mut ChaCha8Rng, n: usize, m: usize) -> String {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| format!("{}", rng.random_range(-10.0..10.0f64)))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn fit_example() {
    let s = Scratch::new("fit");
    let f = s.file("ex.csv", EXAMPLE);
    let o = l1fit(&["fit", &f, "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(field(&text, "z"), "39.5");
    assert_eq!(field(&text, "preserved"), "4");
    assert_eq!(field(&text, "l0"), "4");
    assert_eq!(field(&text, "v"), "-0.666666666667 0.333333333333 -0.5 1");

    let doc = json(&l1fit(&["fit", &f, "--lambda", "1e9", "--format", "json"]));
    assert_eq!(doc["v"], serde_json::json!([1.0, 0.0, 0.0, 0.0]));
    assert_eq!(doc["l0"], 1);
}

#[test]
fn fit_rank_one_data_at_zero_penalty() {
    let s = Scratch::new("rank1");
    let f = s.file("r1.csv", "1,2,-3\n-2,-4,6\n0.5,1,-1.5\n");
    let doc = json(&l1fit(&["fit", &f, "--lambda", "0", "--format", "json"]));
    assert!(doc["z"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn header_row_is_skipped() {
    let s = Scratch::new("header");
    let f = s.file("h.csv", &format!("a,b,c,d\n{EXAMPLE}"));
    let text = stdout(&l1fit(&["fit", &f, "--lambda", "2"]));
    assert_eq!(field(&text, "z"), "39.5");
}

#[test]
fn path_example_has_four_intervals() {
    let s = Scratch::new("path");
    let f = s.file("ex.csv", EXAMPLE);
    let o = l1fit(&["path", &f, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = PathDocument::from_json(&stdout(&o)).unwrap();
    assert_eq!(doc.schema_version, 1);
    assert_eq!(doc.fingerprint.len(), 64);
    let los: Vec<f64> = doc.intervals.iter().map(|r| r.lo).collect();
    assert_eq!(los.len(), 4);
    for (lo, e) in los.iter().zip([0.0, 3.0, 3.5, 11.0]) {
        assert!((lo - e).abs() < 1e-9);
    }
    let preserved: Vec<_> = doc.intervals.iter().map(|r| r.preserved).collect();
    assert_eq!(preserved, vec![Some(4), Some(4), Some(1), Some(1)]);
    assert!(stdout(&o).contains("\"inf\""));
    assert!(doc.per_coordinate.is_none());

    let text = stdout(&l1fit(&["path", &f, "--per-coordinate"]));
    assert_eq!(text.lines().filter(|l| l.starts_with("interval:")).count(), 4);
    assert!(text.contains("segment: preserved=1 lo=3 hi=11 intercept=38.8 slope=1.2"));
    assert!(text.contains("segment: preserved=2 lo=0 hi=4 intercept=35 slope=2.5"));
}

#[test]
fn single_point_path_is_short() {
    let s = Scratch::new("one");
    let f = s.file("one.csv", "3,-1,2\n");
    let doc = PathDocument::from_json(&stdout(&l1fit(&["path", &f, "--format", "json"]))).unwrap();
    assert!(doc.intervals.len() <= 2);
}

#[test]
fn path_document_agrees_with_fit_command() {
    let s = Scratch::new("random-path");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = s.file("r.csv", &random_csv(&mut rng, 20, 5));
    let doc = PathDocument::from_json(&stdout(&l1fit(&["path", &f, "--format", "json"]))).unwrap();
    let path = doc.to_path();
    path.validate().unwrap();
    let top = path.intervals.last().unwrap().lo * 1.5 + 1.0;
    for _ in 0..50 {
        let lambda: f64 = rng.random_range(0.0..top);
        let fit = json(&l1fit(&["fit", &f, "--lambda", &lambda.to_string(), "--format", "json"]));
        let z = fit["z"].as_f64().unwrap();
        let iv = &path.intervals[path.locate(lambda)];
        assert!((iv.objective_at(lambda) - z).abs() < 1e-9 * z.max(1.0), "lambda {lambda}");
    }
}

#[test]
fn output_is_deterministic() {
    let s = Scratch::new("det");
    let f = s.file("ex.csv", EXAMPLE);
    let a = stdout(&l1fit(&["path", &f, "--format", "json", "--per-coordinate"]));
    let b = stdout(&l1fit(&["path", &f, "--format", "json", "--per-coordinate", "--threads", "1"]));
    assert_eq!(a, b);
    let sim = ["simulate", "--n", "60", "--m", "6", "--nc", "5", "--mc", "2", "--reps", "3", "--seed", "9"];
    assert_eq!(stdout(&l1fit(&sim)), stdout(&l1fit(&[&sim[..], &["--threads", "2"]].concat())));
}

#[test]
fn certify_example_and_negative_control() {
    let s = Scratch::new("cert");
    let f = s.file("ex.csv", EXAMPLE);
    let o = l1fit(&["certify", &f, "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "status"), "ok");
    let o = l1fit(&["certify", &f, "--lambda", "1", "--corrupt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn certify_random_data() {
    let s = Scratch::new("cert-random");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = s.file("r.csv", &random_csv(&mut rng, 50, 8));
    let lambdas: Vec<String> = (0..20).map(|_| rng.random_range(0.0..400.0f64).to_string()).collect();
    let mut args = vec!["certify", f.as_str(), "--format", "json"];
    for l in &lambdas {
        args.extend(["--lambda", l.as_str()]);
    }
    let doc = json(&l1fit(&args));
    assert_eq!(doc["lambdas"].as_array().unwrap().len(), 20);
    assert_eq!(doc["lambdas"][0]["certificates"], 56);
}

#[test]
fn simulate_reports_every_method() {
    let doc = json(&l1fit(&[
        "simulate", "--n", "80", "--m", "6", "--nc", "8", "--mc", "2", "--reps", "3", "--format", "json",
    ]));
    let methods: Vec<&str> = doc["methods"].as_array().unwrap().iter().map(|m| m["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["baseline", "lambda_0", "lambda_min", "lambda_avg", "lambda_max"]);
    assert_eq!(doc["replications"].as_array().unwrap().len(), 3);

    let text = stdout(&l1fit(&["simulate", "--n", "80", "--m", "6", "--reps", "2", "--breakpoints", "union"]));
    assert_eq!(text.lines().filter(|l| l.starts_with("method:")).count(), 5);
}

#[test]
fn exit_codes() {
    let s = Scratch::new("errors");
    assert_eq!(l1fit(&["fit", "/nonexistent/data.csv", "--lambda", "1"]).status.code(), Some(2));

    let bad = s.file("bad.csv", "1,2\n3,oops\n");
    let o = l1fit(&["fit", &bad, "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2") && err.contains("column 2"), "{err}");

    let narrow = s.file("narrow.csv", "1\n2\n");
    assert_eq!(l1fit(&["fit", &narrow, "--lambda", "1"]).status.code(), Some(4));
    assert_eq!(l1fit(&["path", &narrow]).status.code(), Some(4));

    let ex = s.file("ex.csv", EXAMPLE);
    assert_eq!(l1fit(&["fit", &ex, "--lambda", "-1"]).status.code(), Some(4));
    let o = l1fit(&["simulate", "--n", "10", "--m", "4", "--nc", "11"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(l1fit(&["simulate", "--n", "10", "--m", "1"]).status.code(), Some(4));
    assert_eq!(l1fit(&["fit", &ex]).status.code(), Some(4));
    assert_eq!(l1fit(&["fit", &ex, "--lambda", "abc"]).status.code(), Some(4));
    assert_eq!(l1fit(&["--help"]).status.code(), Some(0));
}
