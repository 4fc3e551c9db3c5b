mod common;

use common::fake_server::{completion, FakeServer};
use common::{fixture, read_fixture};
use grammar_infer::dataset;
use grammar_infer::evaluator::partial_path;
use grammar_infer::llm_client::{ModelConfig, ReplayClient};
use grammar_infer::pipeline::{
    self, Mode, ParseStatus, PipelineError, RunConfig, Status, Validity,
};
use grammar_infer::prompting::PromptTemplates;

fn replay_cfg(eval: &str, transcript: &str, out: &std::path::Path) -> RunConfig {
    RunConfig {
        transcript: Some(format!("fixtures/{transcript}").into()),
        deterministic: true,
        ..RunConfig::new(format!("fixtures/{eval}"), "fixtures/fsl.json", out)
    }
}

#[test]
fn walkthrough_matches_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let cfg = replay_cfg("walkthrough/eval.json", "walkthrough/transcript.json", &out);
    let report = pipeline::run(&cfg).unwrap();

    let rec = &report.records[0];
    assert_eq!(rec.status, Status::Correct);
    assert_eq!(rec.success_iteration, Some(2));
    let first = &rec.iterations[0];
    assert_eq!(
        (first.validity, first.parse),
        (Validity::Invalid, ParseStatus::NotAttempted)
    );
    assert_eq!(
        first.error_message.as_deref(),
        Some("Rule 'NAME' used but not defined")
    );

    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written, read_fixture("walkthrough/expected_report.json"));
}

#[test]
fn fixture_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let fs = pipeline::run(&replay_cfg(
        "eval.json",
        "transcripts/fewshot.json",
        &dir.path().join("a.json"),
    ))
    .unwrap();
    assert_eq!(
        (
            fs.metrics.correct,
            fs.metrics.valid,
            fs.metrics.pap,
            fs.metrics.gvi
        ),
        (12, 12, 60.0, 60.0)
    );
    assert_eq!(fs.metrics.isrgc, [5, 4, 1, 1, 0, 1, 0, 0, 0, 0]);

    let cfg = RunConfig {
        few_shot: false,
        ..replay_cfg(
            "eval.json",
            "transcripts/baseline.json",
            &dir.path().join("b.json"),
        )
    };
    let bl = pipeline::run(&cfg).unwrap();
    assert_eq!(
        (
            bl.metrics.correct,
            bl.metrics.valid,
            bl.metrics.pap,
            bl.metrics.gvi
        ),
        (9, 9, 45.0, 45.0)
    );
    assert_eq!(bl.metrics.isrgc, [5, 1, 0, 0, 1, 0, 2, 0, 0, 0]);
    assert!(bl.records.iter().all(|r| r.fewshot.is_empty()));
}

#[test]
fn invariants_hold_on_fixture_runs() {
    let dir = tempfile::tempdir().unwrap();
    let r = pipeline::run(&replay_cfg(
        "eval.json",
        "transcripts/fewshot.json",
        &dir.path().join("a.json"),
    ))
    .unwrap();
    for o in &r.records {
        assert!(o.iterations.len() <= 10);
        assert_eq!(o.status == Status::Correct, o.success_iteration.is_some());
        assert_eq!(
            o.success_iteration.is_some(),
            o.iterations.last().unwrap().parse == ParseStatus::Ok
        );
        assert_eq!(
            o.ever_valid,
            o.iterations.iter().any(|t| t.validity == Validity::Valid)
        );
        assert!(o.status == Status::Incorrect || o.ever_valid);
        for t in &o.iterations {
            if t.parse == ParseStatus::Ok {
                assert_eq!(t.validity, Validity::Valid);
            }
            if t.extracted_grammar.is_none() {
                assert_eq!(
                    (t.validity, t.parse),
                    (Validity::Invalid, ParseStatus::NotAttempted)
                );
            }
        }
    }
}

#[test]
fn records_are_independent_of_order() {
    let eval = dataset::load_eval(fixture("eval.json")).unwrap();
    let fsl = dataset::load_fsl(fixture("fsl.json")).unwrap();
    let t = PromptTemplates::default();
    let cfg = RunConfig::new("e", "f", "o");
    let forward = pipeline::run_records(
        &cfg,
        &eval,
        &fsl,
        &t,
        &ReplayClient::load(fixture("transcripts/fewshot.json")).unwrap(),
    )
    .unwrap();
    let reversed: Vec<_> = eval.iter().rev().cloned().collect();
    let backward = pipeline::run_records(
        &cfg,
        &reversed,
        &fsl,
        &t,
        &ReplayClient::load(fixture("transcripts/fewshot.json")).unwrap(),
    )
    .unwrap();
    let mut b = backward.records.clone();
    b.reverse();
    assert_eq!(forward.records, b);
    assert_eq!(forward.metrics, backward.metrics);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    pipeline::run(&replay_cfg("eval.json", "transcripts/fewshot.json", &a)).unwrap();
    pipeline::run(&replay_cfg("eval.json", "transcripts/fewshot.json", &b)).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn timing_fields_only_when_not_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = RunConfig {
        deterministic: false,
        ..replay_cfg("walkthrough/eval.json", "walkthrough/transcript.json", &out)
    };
    let r = pipeline::run(&cfg).unwrap();
    assert!(r.timestamp.is_some() && r.elapsed_seconds.is_some());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"timestamp\"") && text.contains("\"elapsed_seconds\""));
}

#[test]
fn empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let eval = dir.path().join("empty.json");
    std::fs::write(&eval, "[]").unwrap();
    let t = dir.path().join("t.json");
    std::fs::write(&t, "{}").unwrap();
    let cfg = RunConfig {
        transcript: Some(t),
        deterministic: true,
        ..RunConfig::new(&eval, fixture("fsl.json"), dir.path().join("r.json"))
    };
    let r = pipeline::run(&cfg).unwrap();
    assert_eq!(
        (r.metrics.total, r.metrics.pap, r.metrics.gvi),
        (0, 0.0, 0.0)
    );
    assert_eq!(r.metrics.isrgc, [0; 10]);
}

#[test]
fn unwritable_output_keeps_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("taken");
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("x"), "").unwrap();
    let cfg = replay_cfg("walkthrough/eval.json", "walkthrough/transcript.json", &out);
    assert!(matches!(pipeline::run(&cfg), Err(PipelineError::Report(_))));
    let partial = std::fs::read_to_string(partial_path(&out)).unwrap();
    assert!(partial.contains("\"success_iteration\": 2"));
}

const KEY_VAR: &str = "GRAMMAR_INFER_PIPELINE_TEST_KEY";
const KEY: &str = "sk-pipeline-secret";

fn live_cfg(
    server: &FakeServer,
    dir: &std::path::Path,
    eval: std::path::PathBuf,
    mode: Mode,
) -> RunConfig {
    std::env::set_var(KEY_VAR, KEY);
    RunConfig {
        mode,
        transcript: Some(dir.join("recorded.json")),
        deterministic: true,
        model: ModelConfig {
            base_url: server.base_url.clone(),
            api_key_env: KEY_VAR.into(),
            backoff_base_ms: 1,
            timeout_secs: 5,
            ..ModelConfig::default()
        },
        ..RunConfig::new(eval, fixture("fsl.json"), dir.join("live.json"))
    }
}

#[test]
fn record_then_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let eval = dir.path().join("eval.json");
    std::fs::write(
        &eval,
        r#"[{"id": "a", "name": "a", "code": "x = 1"}, {"id": "b", "name": "b", "code": "go"}]"#,
    )
    .unwrap();
    let assign = "<GRAMMAR>\nstart: CNAME \"=\" INT\n%import common (CNAME, INT, WS)\n%ignore WS\n</GRAMMAR>";
    let server = FakeServer::start(vec![
        (200, completion("no idea")),
        (200, completion(assign)),
        (200, completion("<GRAMMAR>start: \"go\"</GRAMMAR>")),
    ]);
    let cfg = live_cfg(&server, dir.path(), eval.clone(), Mode::Record);
    let recorded = pipeline::run(&cfg).unwrap();
    assert_eq!(server.request_count(), 3);
    assert_eq!(recorded.metrics.correct, 2);

    let sink = std::fs::read_to_string(dir.path().join("recorded.json")).unwrap();
    let report = std::fs::read_to_string(dir.path().join("live.json")).unwrap();
    assert!(!sink.contains(KEY) && !report.contains(KEY));

    let replay = RunConfig {
        mode: Mode::Replay,
        output_path: dir.path().join("replayed.json"),
        ..cfg
    };
    let replayed = pipeline::run(&replay).unwrap();
    assert_eq!(recorded.records, replayed.records);
    assert_eq!(recorded.metrics, replayed.metrics);
}

#[test]
fn dataset_errors_stop_before_any_call() {
    let dir = tempfile::tempdir().unwrap();
    let server = FakeServer::start(vec![(200, completion("unused"))]);
    let cfg = live_cfg(
        &server,
        dir.path(),
        dir.path().join("missing.json"),
        Mode::Live,
    );
    assert!(matches!(
        pipeline::run(&cfg),
        Err(PipelineError::Dataset(_))
    ));
    assert_eq!(server.request_count(), 0);
}

#[test]
fn transport_failure_aborts_only_that_record() {
    let dir = tempfile::tempdir().unwrap();
    let eval = dir.path().join("eval.json");
    std::fs::write(
        &eval,
        r#"[{"id": "a", "name": "a", "code": "go"}, {"id": "b", "name": "b", "code": "go"}]"#,
    )
    .unwrap();
    let server = FakeServer::start(vec![
        (400, r#"{"error": "context too long"}"#.into()),
        (200, completion("<GRAMMAR>start: \"go\"</GRAMMAR>")),
    ]);
    let cfg = live_cfg(&server, dir.path(), eval, Mode::Live);
    let r = pipeline::run(&cfg).unwrap();
    assert_eq!(r.aborted, ["a"]);
    assert_eq!((r.metrics.total, r.metrics.correct), (1, 1));
    assert!(r.abort_reasons[0].1.contains("HTTP 400"));
}
