use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/run1")
}

/// The binary with every credential and proxy pointed nowhere, so any
/// network access would fail the run.
fn factcheck() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_factcheck"));
    for key in [
        "OPENAI_API_KEY",
        "FACTCHECK_OPENAI_API_KEY",
        "SERPER_API_KEY",
        "RUST_LOG",
    ] {
        cmd.env_remove(key);
    }
    for key in ["HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY", "http_proxy", "https_proxy"] {
        cmd.env(key, "http://127.0.0.1:9");
    }
    cmd
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    if !out.status.success() {
        eprintln!("stdout:\n{}", String::from_utf8_lossy(&out.stdout));
        eprintln!("stderr:\n{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_matches_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(factcheck()
        .args(["check", "--mock"])
        .arg(fixtures())
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success());
    let got = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let golden = fixtures().join("expected_report.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &got).unwrap();
    }
    assert_eq!(got, std::fs::read_to_string(&golden).unwrap());

    let report: Value = serde_json::from_str(&got).unwrap();
    let claims = report["claims"].as_array().unwrap();
    assert_eq!(claims.len(), 5);
    let fallback: Vec<bool> = claims
        .iter()
        .map(|c| c["evidence"]["fallback_used"].as_bool().unwrap())
        .collect();
    assert_eq!(fallback, [false, false, false, true, true]);
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn mock_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "6")] {
        let out = run(factcheck()
            .args(["check", "--workers", workers, "--mock"])
            .arg(fixtures())
            .arg("--out-dir")
            .arg(dir.path()));
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("report.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn default_tau_is_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(factcheck()
        .args(["check", "--mock"])
        .arg(fixtures())
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success());
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["tau"], 5);
    assert_eq!(report["strategy"], "thresholded");
}

#[test]
fn tau_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(factcheck()
        .args(["check", "--tau", "1", "--mock"])
        .arg(fixtures())
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success());
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["tau"], 1);
    assert!(report["claims"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["evidence"]["fallback_used"] == false));
}

#[test]
fn invalid_strategy_exits_nonzero() {
    let out = factcheck()
        .args(["check", "--strategy", "bogus", "--mock"])
        .arg(fixtures())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn mock_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["llm.jsonl", "search.json", "input.txt"] {
        std::fs::copy(fixtures().join(f), dir.path().join(f)).unwrap();
    }
    let out = factcheck().args(["check", "--mock"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn benchmark_with_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(factcheck()
        .args(["benchmark", "--baselines", "--mock"])
        .arg(fixtures())
        .arg("--dataset")
        .arg(fixtures().join("claims.jsonl"))
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success());
    let m = read_json(&dir.path().join("metrics.json"));
    assert_eq!(m["items"], 5);
    assert_eq!(m["fallback_count"], 2);
    assert_eq!(m["scores"]["true"]["metrics"]["f1"], 1.0);
    let names: Vec<&str> = m["baselines"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["random", "random-empirical(seed=7)", "always-true", "always-false"]
    );
    let claims = std::fs::read_to_string(dir.path().join("claims.jsonl")).unwrap();
    assert_eq!(claims.lines().count(), 5);
}

#[test]
fn sweep_sorts_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(factcheck()
        .args(["sweep", "--taus", "9,1,5,1", "--mock"])
        .arg(fixtures())
        .arg("--dataset")
        .arg(fixtures().join("claims.jsonl"))
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success());
    let s = read_json(&dir.path().join("sweep.json"));
    let taus: Vec<u64> = s["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["tau"].as_u64().unwrap())
        .collect();
    assert_eq!(taus, [1, 5, 9]);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(std::fs::read_to_string(dir.path().join("sweep.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn eval_qa_reports_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(factcheck()
        .args(["eval-qa", "--model-id", "answerer", "--mock"])
        .arg(fixtures())
        .arg("--qa")
        .arg(fixtures().join("qa.jsonl"))
        .arg("--responses")
        .arg(fixtures().join("responses.json"))
        .arg("--out-dir")
        .arg(dir.path()));
    assert!(out.status.success());
    let r = read_json(&dir.path().join("factuality.json"));
    assert_eq!(r["total_claims"], 5);
    assert_eq!(r["true_claim_count"], 3);
    assert_eq!(r["false_claim_count"], 2);
    assert!((r["percent_true_claims"].as_f64().unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn eval_qa_lists_missing_ids() {
    let dir = tempfile::tempdir().unwrap();
    let responses = dir.path().join("r.json");
    std::fs::write(&responses, "{\"q1\": \"x\"}").unwrap();
    let out = factcheck()
        .args(["eval-qa", "--model-id", "m", "--mock"])
        .arg(fixtures())
        .arg("--qa")
        .arg(fixtures().join("qa.jsonl"))
        .arg("--responses")
        .arg(&responses)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("q2"));
}

#[test]
fn data_summarize() {
    let out = run(factcheck()
        .args(["data", "summarize"])
        .arg(fixtures().join("claims.jsonl"))
        .arg(fixtures().join("qa.jsonl")));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("factcheck-bench"));
    assert!(text.contains("simpleqa"));
}

fn source_lines(n_supported: usize, n_refuted: usize, n_unsupported: usize) -> String {
    let mut s = String::new();
    let labels = std::iter::repeat_n("supported", n_supported)
        .chain(std::iter::repeat_n("refuted", n_refuted))
        .chain(std::iter::repeat_n("not-supported", n_unsupported));
    for (i, label) in labels.enumerate() {
        s.push_str(&format!(
            "{{\"id\":\"s{i}\",\"claim\":\"claim {i}\",\"label\":\"{label}\",\"source\":\"factcheck-bench\"}}\n"
        ));
    }
    s
}

#[test]
fn data_standardize_then_balance() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.jsonl");
    std::fs::write(&raw, source_lines(300, 42, 10)).unwrap();
    let std_out = dir.path().join("std.jsonl");
    let out = run(factcheck()
        .args(["data", "standardize", "--input"])
        .arg(&raw)
        .arg("--out")
        .arg(&std_out));
    assert!(out.status.success());
    let standardized = std::fs::read_to_string(&std_out).unwrap();
    assert_eq!(standardized.lines().count(), 342);
    assert!(dir.path().join("std.jsonl.manifest.json").is_file());

    let balanced = dir.path().join("bal.jsonl");
    let out = run(factcheck()
        .args(["data", "balance", "--seed", "11", "--input"])
        .arg(&std_out)
        .arg("--out")
        .arg(&balanced));
    assert!(out.status.success());
    let kept = std::fs::read_to_string(&balanced).unwrap();
    assert_eq!(kept.lines().count(), 142);
    assert_eq!(kept.lines().filter(|l| l.contains("\"label\":\"false\"")).count(), 42);

    let again = dir.path().join("bal2.jsonl");
    run(factcheck()
        .args(["data", "balance", "--seed", "11", "--input"])
        .arg(&std_out)
        .arg("--out")
        .arg(&again));
    assert_eq!(kept, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn data_curate_drafts_for_review() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("drafts.jsonl");
    let out = run(factcheck()
        .args(["data", "curate", "--k", "2", "--mock"])
        .arg(fixtures())
        .arg("--input")
        .arg(fixtures().join("english.jsonl"))
        .arg("--pool")
        .arg(fixtures().join("pool.jsonl"))
        .arg("--out")
        .arg(&out_file));
    assert!(out.status.success());
    let drafts: Vec<Value> = std::fs::read_to_string(&out_file)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(drafts.len(), 2);
    for d in &drafts {
        assert_eq!(d["status"], "pending-review");
        assert_eq!(d["exemplars"].as_array().unwrap().len(), 2);
    }
}
