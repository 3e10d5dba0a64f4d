use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn pqlap(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqlap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn cooperative_sample_passes_with_lemma_l3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("cooperative.toml");
    let out = pqlap(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["lemma_L3"]["passed"], true);
    assert_eq!(r["lemma_L3"]["certificates"].as_array().unwrap().len(), 4);
    for k in ["c", "c_prime", "C", "lambda_star"] {
        assert!(r["constants"][k].as_f64().unwrap() > 0.0, "{k}");
    }
    for f in ["u", "v", "u_low", "v_low", "u_high", "v_high", "w1", "w2"] {
        let text = fs::read_to_string(dir.path().join("fields").join(format!("{f}.csv"))).unwrap();
        assert!(text.starts_with("x,value\n"));
        assert_eq!(text.lines().count(), 258);
    }
    let iters = fs::read_to_string(dir.path().join("iterations.csv")).unwrap();
    assert!(iters.starts_with("iteration,sup_change\n"));
    assert_eq!(
        iters.lines().count() as u64,
        1 + r["fixed_point"]["iterations"].as_u64().unwrap()
    );
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap())
            .unwrap();
    assert!(meta["started_unix_ms"].as_u64().is_some());
    assert!(r.get("started_unix_ms").is_none());
}

#[test]
fn hypothesis_violation_exits_two_and_names_h2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("h2_violation.toml");
    let out = pqlap(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("h2"));
    let r = report(dir.path());
    assert_eq!(r["status"], "rejected");
    assert_eq!(r["failures"][0], "h2");
    let h2 = r["structure"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "h2")
        .unwrap();
    assert_eq!(h2["satisfied"], false);
    assert!(!dir.path().join("fields").exists());
}

#[test]
fn scalar_p3_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("scalar_p3.toml");
    let out = pqlap(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    // (2/3) (1/2)^(3/2)
    let max_u = r["max_u"].as_f64().unwrap();
    assert!((max_u - 0.235702).abs() <= 2e-3, "{max_u}");
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = pqlap(&["run", missing.to_str().unwrap()], &dir.path().join("a"));
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "mode = \"scalar\"\nn = 9\ndomain = { kind = \"interval\", a = 0.0, b = 1.0 }\nexponents = { p = \"2 +* x\" }\nscalar = { source = \"1\" }\n").unwrap();
    let out = pqlap(&["run", bad.to_str().unwrap()], &dir.path().join("b"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));

    // structurally mixed exponents are an input error
    let mixed = fs::read_to_string(config("cooperative.toml"))
        .unwrap()
        .replace("alpha2 = \"0.5\"", "alpha2 = \"-0.5\"");
    let path = dir.path().join("mixed.toml");
    fs::write(&path, mixed).unwrap();
    let out = pqlap(&["run", path.to_str().unwrap()], &dir.path().join("c"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mixed structure"));
}

#[test]
fn certificate_failure_exits_one() {
    // a fixed small lambda leaves the subsolution check failing
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("cooperative.toml"))
        .unwrap()
        .replace("lambda = \"auto\"", "lambda = 1");
    let path = dir.path().join("small.toml");
    fs::write(&path, text).unwrap();
    let out = pqlap(&["run", path.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(1));
    let r = report(&dir.path().join("o"));
    assert_eq!(r["status"], "fail");
    assert_eq!(r["lemma_L3"]["passed"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lemma_L3_sub"));
}

#[test]
fn refine_subcommand_reports_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("scalar_p3.toml");
    let text = fs::read_to_string(cfg)
        .unwrap()
        .replace("n = 1025", "n = 65");
    let path = dir.path().join("p3.toml");
    fs::write(&path, text).unwrap();
    let out = pqlap(
        &["refine", path.to_str().unwrap(), "--levels", "3"],
        &dir.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir.path().join("o"));
    let study = &r["refinement"];
    assert_eq!(study["reference"], "closed_form");
    let ns: Vec<u64> = study["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["n"].as_u64().unwrap())
        .collect();
    assert_eq!(ns, [65, 129, 257]);
    assert!(study["observed_order"].as_f64().unwrap() >= 1.0);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("scalar_p3.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_pqlap"))
        .args(["run", cfg.to_str().unwrap(), "--seed", "99", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("pass"));
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 99);
}
