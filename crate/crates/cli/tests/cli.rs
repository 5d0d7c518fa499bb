use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn crra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crra"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("config")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_code(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"]["code"].as_str().expect("error code").to_string()
}

#[test]
fn solve_worked_market() {
    let out = crra(&["solve", "--market", &config("worked_market.json"), "--gamma", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let c = &v["constants"];
    assert!((c["r_gmv"].as_f64().unwrap() - 1.07).abs() < 1e-12);
    assert!((c["s"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    let sol = &v["solution"];
    let w: Vec<f64> = sol["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    let x = sol["x"].as_f64().unwrap();
    assert!((1.05 * w[0] + 1.15 * w[1] - x).abs() < 1e-12);
    assert!(x > 1.07);
    assert!(sol["mv_efficient"].as_bool().unwrap());
}

#[test]
fn solve_below_threshold_is_an_error() {
    let out = crra(&["solve", "--market", &config("worked_market.json"), "--gamma", "1e-4"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_code(&out), "below_gamma_min");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_file_and_bad_list_exit_codes() {
    let out = crra(&["solve", "--market", "/nonexistent/market.json", "--gamma", "2"]);
    assert!(!out.status.success());
    assert!(!error_code(&out).is_empty());

    let out = crra(&["verify", "--markets", "1", "--gammas", "two"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "invalid_config");
}

#[test]
fn verify_random_markets_passes() {
    let out = crra(&["verify", "--markets", "3", "--k-range", "2-3", "--n-starts", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["passed"], serde_json::Value::Bool(true));
}

#[test]
fn lemma1_ladder_is_monotone() {
    let out = crra(&["lemma1", "--ratios", "0.2,0.05,0.01", "--grid", "2000"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<(f64, f64)> = rdr
        .deserialize::<std::collections::HashMap<String, f64>>()
        .map(|r| {
            let r = r.unwrap();
            (r["empirical"], r["bound"])
        })
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|(e, b)| e <= b));
    assert!(rows.windows(2).all(|p| p[1].0 < p[0].0 && p[1].1 < p[0].1));
}

#[test]
fn synth_is_seeded() {
    let spec = config("synth_weekly17.json");
    let a = crra(&["synth", "--synth", &spec, "--seed", "5"]);
    let b = crra(&["synth", "--synth", &spec, "--seed", "5"]);
    let c = crra(&["synth", "--synth", &spec, "--seed", "6"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let n_lines = String::from_utf8_lossy(&a.stdout).lines().count();
    assert_eq!(n_lines, 158);
}

fn study_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run_meta.json")
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), bytes)
        })
        .collect();
    files.sort();
    files
}

#[test]
fn study_reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = config("synth_weekly17.json");
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let out = crra(&[
            "study",
            "--synth",
            &spec,
            "--seed",
            "11",
            "--k-range",
            "3-5",
            "--gammas",
            "1,2,5",
            "--subset-cap",
            "20",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.join("run_meta.json").exists());
        outputs.push(study_files(&dir));
    }
    assert_eq!(outputs[0].len(), 6);
    assert_eq!(outputs[0], outputs[1]);
}
