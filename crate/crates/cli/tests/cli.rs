mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use evolex_core::pipeline::EvolvingExplanations;
use serde_json::Value;

fn evolex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evolex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn fixture(dir: &Path) -> String {
    let path = dir.join("states.csv");
    fs::write(&path, common::states_csv()).unwrap();
    path.to_str().unwrap().to_string()
}

fn explain_args<'a>(input: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "explain", "--input", input, "--time", "date", "--measure", "cases", "--agg", "sum",
        "--explain-by", "state,sex", "--out", out,
    ]
}

fn read_result(path: &Path) -> EvolvingExplanations {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn explain_writes_a_result_document() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("r.json");
    let run = evolex(&explain_args(&input, out.to_str().unwrap()));
    assert!(run.status.success(), "{}", stderr(&run));
    let r = read_result(&out);
    assert_eq!(r.version, 1);
    assert_eq!(r.overall.len(), common::DAYS);
    assert_eq!(r.segments.len(), r.k);
    assert!(r.segments.iter().all(|s| s.explanations.len() <= 3));
    // NY dominates the opening rise
    assert_eq!(r.segments[0].explanations[0].label, "state=NY");
}

#[test]
fn fixed_k_of_one_gives_one_segment() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("r.json");
    let mut args = explain_args(&input, out.to_str().unwrap());
    args.extend(["--k", "1"]);
    let run = evolex(&args);
    assert!(run.status.success(), "{}", stderr(&run));
    let r = read_result(&out);
    assert_eq!((r.k, r.segments.len()), (1, 1));
    assert!(r.cuts.is_empty());
}

#[test]
fn unknown_explain_by_attribute_is_an_argument_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("r.json");
    let mut args = explain_args(&input, out.to_str().unwrap());
    args[10] = "state,county";
    let run = evolex(&args);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("county"), "{}", stderr(&run));
    assert!(!out.exists());
}

#[test]
fn argument_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["--m", "0"], "m must be at least 1"),
        (&["--k", "few"], "auto"),
        (&["--metric", "entropy"], "entropy"),
        (&["--filter-ratio", "1.5"], "filter_ratio"),
        (&["--bogus"], "--bogus"),
    ];
    for (extra, needle) in cases {
        let mut args = explain_args(&input, out);
        args.extend(extra);
        let run = evolex(&args);
        assert_eq!(run.status.code(), Some(2), "{extra:?}: {}", stderr(&run));
        assert!(stderr(&run).contains(needle), "{extra:?}: {}", stderr(&run));
    }
    let run = evolex(&["explain", "--input", &input, "--time", "date", "--agg", "median", "--explain-by", "state", "--out", out]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.csv");
    let run = evolex(&explain_args(missing.to_str().unwrap(), out));
    assert_eq!(run.status.code(), Some(3));
    assert!(stderr(&run).contains("missing.csv"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,state,sex,cases\n2020-03-01,NY,f,12\nyesterday,NY,f,3\n").unwrap();
    let run = evolex(&explain_args(bad.to_str().unwrap(), out));
    assert_eq!(run.status.code(), Some(3), "{}", stderr(&run));
    assert!(stderr(&run).contains("yesterday"));

    let short = dir.path().join("short.csv");
    fs::write(&short, "date,state,sex,cases\n2020-03-01,NY,f,12\n").unwrap();
    let run = evolex(&explain_args(short.to_str().unwrap(), out));
    assert!(matches!(run.status.code(), Some(2 | 3)), "{}", stderr(&run));
}

#[test]
fn plot_is_a_well_formed_svg_with_cut_markers() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let out = dir.path().join("r.json");
    let svg_path = dir.path().join("r.svg");
    let mut args = explain_args(&input, out.to_str().unwrap());
    args.extend(["--plot", svg_path.to_str().unwrap()]);
    let run = evolex(&args);
    assert!(run.status.success(), "{}", stderr(&run));
    let r = read_result(&out);
    let svg = fs::read_to_string(&svg_path).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("valid XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let cuts = doc.descendants().filter(|n| n.attribute("class") == Some("cut")).count();
    assert_eq!(cuts, r.k - 1);
    let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    let explanations: usize = r.segments.iter().map(|s| s.explanations.len()).sum();
    assert_eq!(lines, 1 + explanations);
    for seg in &r.segments {
        for e in &seg.explanations {
            assert!(svg.contains(&e.label));
        }
    }
}

#[test]
fn config_supplies_defaults_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture(dir.path());
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"explain": {"m": 1, "k": 2, "opts": {"sketching": false}}}"#).unwrap();
    let out = dir.path().join("r.json");
    let mut args = vec!["--config", config.to_str().unwrap()];
    args.extend(explain_args(&input, out.to_str().unwrap()));
    let run = evolex(&args);
    assert!(run.status.success(), "{}", stderr(&run));
    let r = read_result(&out);
    assert_eq!(r.k, 2);
    assert!(r.segments.iter().all(|s| s.explanations.len() == 1));

    args.extend(["--m", "2"]);
    let run = evolex(&args);
    assert!(run.status.success(), "{}", stderr(&run));
    let r = read_result(&out);
    assert_eq!(r.k, 2);
    assert!(r.segments.iter().any(|s| s.explanations.len() == 2));

    fs::write(&config, r#"{"explain": {"m": "many"}}"#).unwrap();
    let run = evolex(&args);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("m"), "{}", stderr(&run));
}

#[test]
fn synth_writes_datasets_and_truth_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let run = evolex(&["synth", "--snr", "50", "--seeds", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(run.status.success(), "{}", stderr(&run));
    let mut files: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["snr50_000.csv", "snr50_000.truth.json"]);
    let truth: Value = serde_json::from_str(&fs::read_to_string(dir.path().join(&files[1])).unwrap()).unwrap();
    assert_eq!(truth["snr_db"], 50.0);

    // the noisy dataset is explainable end to end and its truth cuts are recoverable
    let out = dir.path().join("r.json");
    let csv = dir.path().join(&files[0]);
    let run = evolex(&[
        "explain", "--input", csv.to_str().unwrap(), "--time", "T", "--agg", "count",
        "--explain-by", "category", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let r = read_result(&out);
    let cuts: Vec<u64> = r.cuts.iter().map(|t| t.to_string().parse().unwrap()).collect();
    let want: Vec<u64> = serde_json::from_value(truth["cuts"].clone()).unwrap();
    assert_eq!(cuts, want);
}

#[test]
fn synth_reports_infeasible_layouts_as_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let run = evolex(&[
        "synth", "--snr", "30", "--seeds", "1", "--n", "12", "--categories", "5", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(3), "{}", stderr(&run));
    let run = evolex(&["synth", "--snr", "loud", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn bench_at_high_snr_ranks_the_truth_first_for_every_metric() {
    let dir = tempfile::tempdir().unwrap();
    let run = evolex(&[
        "bench", "--snr", "50", "--seeds", "1", "--samples", "2000", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let rows = report["ranking"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for row in rows {
        assert_eq!(row["mean_gt_rank"], 1.0, "{row}");
        assert_eq!(row["mean_rank"], 1.0, "{row}");
    }
    for name in ["effectiveness.csv", "ranking.csv", "report.schema.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn bench_rejects_zero_samples_and_unknown_methods() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let run = evolex(&["bench", "--samples", "0", "--out", d]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("samples"));
    let run = evolex(&["bench", "--snr", "50", "--seeds", "1", "--methods", "fluss", "--out", d]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("fluss"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn default_bench_report_validates_against_the_published_schema() {
    let dir = tempfile::tempdir().unwrap();
    let run = evolex(&["bench", "--out", dir.path().to_str().unwrap()]);
    assert!(run.status.success(), "{}", stderr(&run));
    let published = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/bench-report.schema.json")).unwrap();
    let written = fs::read_to_string(dir.path().join("report.schema.json")).unwrap();
    assert_eq!(written, published);
    let schema: Value = serde_json::from_str(&published).unwrap();
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| format!("{} at {}", e, e.instance_path)).take(5).collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(report["config"]["samples"], 10_000);
    assert_eq!(report["effectiveness"]["rows"].as_array().unwrap().len(), 7 * 2);
    assert_eq!(report["ranking"]["rows"].as_array().unwrap().len(), 7 * 8);

    // the schema is not vacuous
    let mut broken = report.clone();
    broken["ranking"]["rows"][0]["mean_rank"] = Value::from("first");
    assert!(!validator.is_valid(&broken));
}
