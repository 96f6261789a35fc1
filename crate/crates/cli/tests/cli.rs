use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tradeoff_core::fixtures;

fn tradeoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradeoff"))
        .args(args)
        .env_remove("TRADEOFF_PRICING")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn imdb_costs_match_published_row() {
    let v = json(&tradeoff(&[
        "cost",
        "--dataset",
        "imdb",
        "--format",
        "json",
    ]));
    let rows = v["costs"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    let expected: Vec<_> = fixtures::paper_expected_costs()
        .into_iter()
        .filter(|e| e.dataset_id == "imdb")
        .collect();
    assert_eq!(expected.len(), 7);
    for e in expected {
        let row = rows
            .iter()
            .find(|r| r["model_id"] == e.model_id.as_str() && r["paradigm"] == e.paradigm.as_str())
            .unwrap();
        let got = row["usd_per_million_requests"].as_f64().unwrap();
        assert!((got - e.usd_per_million_requests).abs() <= 0.02, "{row}");
    }
    assert_eq!(v["pricing_snapshot_date"], "2026-01-22");
}

#[test]
fn empty_records_give_empty_success() {
    let dir = tempfile::tempdir().unwrap();
    let records = write(dir.path(), "empty.jsonl", "");
    let out = tradeoff(&["cost", "--records", &records]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("pricing snapshot: 2026-01-22"));
    assert!(stdout(&out).contains("no matching records"));
}

#[test]
fn pricing_without_a_model_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let pricing = write(
        dir.path(),
        "p.json",
        r#"{"snapshot_date":"2026-01-22","token_prices":{"gpt-4o":{"input_usd_per_million_tokens":2.5,"output_usd_per_million_tokens":10}},
            "serving_prices":{"vcpu_usd_per_million_vcpu_seconds":24,"gib_usd_per_million_gib_seconds":2.5}}"#,
    );
    let out = tradeoff(&["cost", "--pricing", &pricing]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("claude-sonnet-4.5"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn pricing_path_can_come_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let pricing = write(
        dir.path(),
        "p.json",
        &fixtures::PAPER_SNAPSHOT.replace("2026-01-22", "2030-05-01"),
    );
    let out = Command::new(env!("CARGO_BIN_EXE_tradeoff"))
        .args(["cost", "--dataset", "sst2"])
        .env("TRADEOFF_PRICING", &pricing)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("pricing snapshot: 2030-05-01"));
}

#[test]
fn missing_records_file_is_a_validation_error() {
    let out = tradeoff(&["rank", "--records", "/nonexistent/records.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/records.jsonl"));
}

#[test]
fn malformed_record_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let line = fixtures::PAPER_RECORDS
        .lines()
        .nth(1)
        .unwrap()
        .replace("\"f1_macro\": 0.9322", "\"f1_macro\": 93.22");
    let records = write(dir.path(), "bad.jsonl", &format!("\n{line}\n"));
    let out = tradeoff(&["cost", "--records", &records]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 2") && err.contains("f1_macro"), "{err}");
}

#[test]
fn imdb_rank_reproduces_published_table() {
    let v = json(&tradeoff(&[
        "rank",
        "--dataset",
        "imdb",
        "--format",
        "json",
    ]));
    let tables = v["utilities"].as_array().unwrap();
    assert_eq!(tables.len(), 3);
    let expected: Vec<_> = fixtures::paper_expected_utilities()
        .into_iter()
        .filter(|e| e.dataset_id == "imdb")
        .collect();
    assert_eq!(expected.len(), 21);
    for e in expected {
        let table = tables
            .iter()
            .find(|t| t["tau_ms"].as_f64() == Some(e.tau_ms))
            .unwrap();
        let label = match e.paradigm.as_str() {
            "zero_shot" => format!("{}:zs", e.model_id),
            "few_shot" => format!("{}:fs", e.model_id),
            _ => e.model_id.clone(),
        };
        let row = table["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["candidate"] == label.as_str())
            .unwrap();
        assert!(
            (row["display_value"].as_f64().unwrap() - e.display_value).abs() <= 0.01 + 1e-9,
            "{row}"
        );
        assert_eq!(row["rank"].as_u64(), e.rank.map(u64::from), "{row}");
    }
}

#[test]
fn huge_tau_orders_by_f1_over_cost() {
    for ds in fixtures::PAPER_DATASETS {
        let v = json(&tradeoff(&[
            "rank",
            "--dataset",
            ds,
            "--tau",
            "1e9",
            "--format",
            "json",
        ]));
        let rows = v["utilities"][0]["rows"].as_array().unwrap();
        let got: Vec<&str> = rows
            .iter()
            .map(|r| r["candidate"].as_str().unwrap())
            .collect();
        let mut oracle: Vec<(f64, &str)> = rows
            .iter()
            .map(|r| {
                let ratio = r["f1"].as_f64().unwrap() / r["cost_usd_per_million"].as_f64().unwrap();
                (ratio, r["candidate"].as_str().unwrap())
            })
            .collect();
        oracle.sort_by(|a, b| b.0.total_cmp(&a.0));
        let want: Vec<&str> = oracle.iter().map(|x| x.1).collect();
        assert_eq!(got, want, "{ds}");
    }
}

#[test]
fn unmatched_dataset_filter_is_empty_success() {
    let out = tradeoff(&["rank", "--dataset", "yelp", "--format", "json"]);
    let v = json(&out);
    assert!(v.get("utilities").is_none());
}

#[test]
fn sst2_pareto_flags_llms_and_writes_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let scatter = dir.path().join("points.csv");
    let svg = dir.path().join("plot.svg");
    let out = tradeoff(&[
        "pareto",
        "--dataset",
        "sst2",
        "--space",
        "f1_vs_cost",
        "--format",
        "json",
        "--scatter-out",
        scatter.to_str().unwrap(),
        "--svg-out",
        svg.to_str().unwrap(),
    ]);
    let v = json(&out);
    let rows = v["frontiers"][0]["rows"].as_array().unwrap();
    let dominated: Vec<&str> = rows
        .iter()
        .filter(|r| r["on_frontier"] == false)
        .map(|r| r["candidate"].as_str().unwrap())
        .collect();
    for name in ["claude-sonnet-4.5:fs", "gpt-4o:zs", "gpt-4o:fs"] {
        assert!(dominated.contains(&name), "{dominated:?}");
    }
    let points = std::fs::read_to_string(scatter).unwrap();
    assert_eq!(points.lines().count(), 8);
    assert!(points
        .lines()
        .any(|l| l.starts_with("sst2,f1_vs_cost,distilbert,") && l.contains(",true,")));
    let svg = std::fs::read_to_string(svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<circle").count() == 7);
}

#[test]
fn imdb_three_objective_frontier_has_everyone() {
    let v = json(&tradeoff(&[
        "pareto",
        "--dataset",
        "imdb",
        "--space",
        "f1_latency_cost_3d",
        "--format",
        "json",
    ]));
    let rows = v["frontiers"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r["on_frontier"] == true));
}

#[test]
fn single_record_is_its_own_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let line = fixtures::PAPER_RECORDS.lines().nth(1).unwrap();
    let records = write(dir.path(), "one.jsonl", line);
    let v = json(&tradeoff(&[
        "pareto",
        "--records",
        &records,
        "--format",
        "json",
    ]));
    let frontiers = v["frontiers"].as_array().unwrap();
    assert_eq!(frontiers.len(), 4);
    for f in frontiers {
        assert_eq!(f["rows"][0]["candidate"], "bert");
        assert_eq!(f["rows"][0]["on_frontier"], true);
    }
}

#[test]
fn csv_records_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let text = "model_id,dataset_id,paradigm,run_id,f1_macro,precision_macro,recall_macro,accuracy,latency_p50_ms,latency_p95_ms,latency_p99_ms,vcpu,memory_gib\n\
                distilbert,imdb,fine_tuned,0,0.9273,0.9279,0.9273,0.9273,234.82,500,600,1,1\n";
    let records = write(dir.path(), "r.csv", text);
    let v = json(&tradeoff(&[
        "cost",
        "--records",
        &records,
        "--format",
        "json",
    ]));
    let got = v["costs"][0]["usd_per_million_requests"].as_f64().unwrap();
    assert!((got - 0.23482 * 26.5).abs() < 1e-9);
}

#[test]
fn machine_output_is_byte_stable() {
    for format in ["json", "csv"] {
        let a = tradeoff(&["rank", "--format", format]);
        let b = tradeoff(&["rank", "--format", format]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{format}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = tradeoff(&["cost", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 29);
}

#[test]
fn verify_paper_passes_on_bundled_tables() {
    let out = tradeoff(&["verify-paper"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("cost     28/28"));
    assert!(text.contains("utility  84/84"));
    assert!(text.contains("rank     84/84"));
}

#[test]
fn verify_paper_names_cells_after_latency_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let perturbed: Vec<String> = fixtures::PAPER_RECORDS
        .lines()
        .map(|l| {
            if l.starts_with('#')
                || !l.contains("\"model_id\": \"roberta\", \"dataset_id\": \"agnews\"")
            {
                return l.to_string();
            }
            let mut v: Value = serde_json::from_str(l).unwrap();
            for k in ["p50_ms", "p95_ms", "p99_ms"] {
                let ms = v["latency"][k].as_f64().unwrap();
                v["latency"][k] = (ms * 1.5).into();
            }
            v.to_string()
        })
        .collect();
    let records = write(dir.path(), "r.jsonl", &perturbed.join("\n"));
    let out = tradeoff(&["verify-paper", "--records", &records]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("FAIL Cost agnews/roberta"), "{text}");
    assert!(
        text.contains("FAIL Utility agnews/roberta tau=500"),
        "{text}"
    );
    assert!(text
        .lines()
        .filter(|l| l.starts_with("FAIL"))
        .all(|l| l.contains("agnews/")));
}

#[test]
fn verify_paper_skips_ranks_when_column_missing() {
    let dir = tempfile::tempdir().unwrap();
    let stripped: Vec<String> = fixtures::PAPER_EXPECTED_UTILITY
        .lines()
        .map(|l| {
            if l.starts_with('#') || l.trim().is_empty() {
                return l.to_string();
            }
            let mut v: Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("rank");
            v.to_string()
        })
        .collect();
    let expected = write(dir.path(), "u.jsonl", &stripped.join("\n"));
    let out = tradeoff(&["verify-paper", "--expected-utility", &expected]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("rank checks skipped"));
    assert!(text.contains("rank     0/0"));
}

#[test]
fn bad_flags_exit_with_validation_status() {
    assert_eq!(
        tradeoff(&["pareto", "--space", "f1_vs_price"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(tradeoff(&["rank", "--tau", "-5"]).status.code(), Some(1));
    assert_eq!(
        tradeoff(&["cost", "--format", "xml"]).status.code(),
        Some(1)
    );
    assert_eq!(tradeoff(&["--help"]).status.code(), Some(0));
}
