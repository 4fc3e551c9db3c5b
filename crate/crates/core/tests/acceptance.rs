//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{fixture, oracle, read_fixture};
use grammar_infer::dataset;
use grammar_infer::engine;
use grammar_infer::evaluator::{compute_isrgc, compute_metrics};
use grammar_infer::llm_client::{ReplayClient, Transcript};
use grammar_infer::pipeline::{
    self, FewShotRef, IterationTrace, ParseStatus, RecordOutcome, RunConfig, Status, Validity,
};
use grammar_infer::prompting::PromptTemplates;
use grammar_infer::similarity::{cosine, retrieve_similar, vectorize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

/// (title, time limit in seconds, check)
type Criterion = (&'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn outcome(id: String, success: Option<usize>, ever_valid: bool) -> RecordOutcome {
    let trace = |index, ok: bool| IterationTrace {
        index,
        validity: if ok || ever_valid {
            Validity::Valid
        } else {
            Validity::Invalid
        },
        parse: if ok {
            ParseStatus::Ok
        } else {
            ParseStatus::NotAttempted
        },
        error_message: None,
        extracted_grammar: None,
        response: String::new(),
        prompt_sha256: String::new(),
    };
    let n = success.unwrap_or(1);
    RecordOutcome {
        id,
        status: if success.is_some() {
            Status::Correct
        } else {
            Status::Incorrect
        },
        success_iteration: success,
        ever_valid: ever_valid || success.is_some(),
        fewshot: Vec::<FewShotRef>::new(),
        final_grammar: None,
        iterations: (1..=n).map(|i| trace(i, success == Some(i))).collect(),
    }
}

fn metric_arithmetic() -> Check {
    for (correct, want) in [(12, 60.0), (9, 45.0)] {
        let set: Vec<_> = (0..20)
            .map(|i| {
                if i < correct {
                    outcome(i.to_string(), Some(1), true)
                } else {
                    outcome(i.to_string(), None, false)
                }
            })
            .collect();
        let m = compute_metrics(&set, 10).map_err(|e| e.to_string())?;
        ensure!(m.valid == correct && m.correct == correct, "counts {m:?}");
        ensure!(
            m.gvi == want && m.pap == want,
            "({correct}, 20) gave gvi {} pap {}",
            m.gvi,
            m.pap
        );
    }
    Ok(())
}

fn replay_run(
    transcript: &str,
    few_shot: bool,
) -> Result<grammar_infer::evaluator::RunReport, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        few_shot,
        transcript: Some(fixture(transcript)),
        deterministic: true,
        ..RunConfig::new(
            fixture("eval.json"),
            fixture("fsl.json"),
            dir.path().join("r.json"),
        )
    };
    pipeline::run(&cfg).map_err(|e| e.to_string())
}

fn isrgc_histograms() -> Check {
    let fs = replay_run("transcripts/fewshot.json", true)?.metrics.isrgc;
    ensure!(
        fs[0] == 5 && fs[1] == 4 && fs[5] == 1 && fs[4] == 0,
        "few-shot histogram {fs:?}"
    );
    let bl = replay_run("transcripts/baseline.json", false)?
        .metrics
        .isrgc;
    ensure!(
        bl == [5, 1, 0, 0, 1, 0, 2, 0, 0, 0],
        "baseline histogram {bl:?}"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0xacce55);
    for case in 0..1000 {
        let max = rng.gen_range(1..=12);
        let n = rng.gen_range(0..=40);
        let set: Vec<_> = (0..n)
            .map(|i| {
                let success = rng.gen_bool(0.5).then(|| rng.gen_range(1..=max));
                outcome(i.to_string(), success, rng.gen_bool(0.5))
            })
            .collect();
        let hist = compute_isrgc(&set, max).map_err(|e| e.to_string())?;
        let correct = set.iter().filter(|o| o.status == Status::Correct).count();
        ensure!(
            hist.iter().sum::<usize>() == correct,
            "case {case}: {hist:?} vs correct {correct}"
        );
    }
    Ok(())
}

fn walkthrough_replay() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("report.json");
    let cfg = RunConfig {
        transcript: Some("fixtures/walkthrough/transcript.json".into()),
        deterministic: true,
        ..RunConfig::new("fixtures/walkthrough/eval.json", "fixtures/fsl.json", &out)
    };
    let r = pipeline::run(&cfg).map_err(|e| e.to_string())?;
    let rec = &r.records[0];
    ensure!(
        rec.status == Status::Correct && rec.success_iteration == Some(2),
        "outcome {:?}",
        rec.success_iteration
    );
    let err = rec.iterations[0].error_message.as_deref();
    ensure!(
        err == Some("Rule 'NAME' used but not defined"),
        "iteration 1 error {err:?}"
    );
    let written = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    ensure!(
        written == read_fixture("walkthrough/expected_report.json"),
        "report differs from golden file"
    );
    Ok(())
}

fn engine_fixture() -> Check {
    let g = engine::compile(&read_fixture("listings/grammar4.txt")).map_err(|e| e.to_string())?;
    ensure!(!g.warnings.is_empty(), "no shift/reduce warnings recorded");
    let tree = g
        .parse(&read_fixture("listings/snippet3.txt"))
        .map_err(|e| e.to_string())?;
    ensure!(
        tree.children.len() == 8,
        "{} statements parsed",
        tree.children.len()
    );
    Ok(())
}

fn oracle_equivalence() -> Check {
    oracle::recognizer_self_check();
    let r = oracle::check_equivalence(0xacce55, 25);
    ensure!(r.grammars >= 20, "only {} grammars compared", r.grammars);
    ensure!(
        r.disagreements.is_empty(),
        "{} disagreements, first {:?}",
        r.disagreements.len(),
        r.disagreements[0]
    );
    ensure!(
        r.unsound.is_empty(),
        "engine accepted strings outside the language: {:?}",
        r.unsound[0]
    );
    println!(
        "       {} grammars, {} strings, all agree",
        r.grammars, r.strings
    );
    Ok(())
}

fn loop_cap() -> Check {
    let mut t = Transcript::default();
    for i in 0..12 {
        t.push("r", format!("I am not sure about this one ({i})."));
    }
    let client = ReplayClient::new(t);
    let rec = dataset::SnippetRecord {
        id: "r".into(),
        name: "r".into(),
        code: "x".into(),
    };
    let cfg = RunConfig::new("e", "f", "o");
    let o = pipeline::infer_record(&rec, &[], &client, &PromptTemplates::default(), &cfg)
        .map_err(|e| e.to_string())?;
    ensure!(
        o.iterations.len() == 10,
        "{} iterations",
        o.iterations.len()
    );
    ensure!(
        client.consumed("r") == 10,
        "{} replay consumptions",
        client.consumed("r")
    );
    ensure!(
        o.status == Status::Incorrect && !o.ever_valid,
        "status {:?} ever_valid {}",
        o.status,
        o.ever_valid
    );
    Ok(())
}

fn similarity_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let mut s = || -> String {
            (0..rng.gen_range(1..30))
                .map(|_| rng.gen_range(' '..='~'))
                .collect()
        };
        let (a, b) = (vectorize(&s()), vectorize(&s()));
        ensure!(
            (cosine(&a, &a) - 1.0).abs() <= 1e-12,
            "identity {}",
            cosine(&a, &a)
        );
        ensure!((cosine(&a, &b) - cosine(&b, &a)).abs() <= 1e-12, "symmetry");
    }
    let ab = cosine(&vectorize("ab"), &vectorize("ba"));
    ensure!((ab - 19012.0 / 19013.0).abs() <= 1e-9, "ab/ba gave {ab}");
    let fsl = dataset::load_fsl(fixture("fsl.json")).map_err(|e| e.to_string())?;
    for rec in dataset::load_eval(fixture("eval.json")).map_err(|e| e.to_string())? {
        let hits = retrieve_similar(&rec.code, &fsl, 3, 0.5);
        ensure!(hits.len() <= 3, "{}: {} hits", rec.id, hits.len());
        ensure!(
            hits.iter().all(|h| h.score >= 0.5),
            "{}: score below threshold",
            rec.id
        );
        ensure!(
            hits.windows(2).all(|w| w[0].score >= w[1].score),
            "{}: not sorted",
            rec.id
        );
    }
    Ok(())
}

fn full_replay_benchmark() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("r.json");
    let o = Command::new(env!("CARGO_BIN_EXE_grammar-infer"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args([
            "run",
            "--eval",
            "fixtures/eval.json",
            "--fsl",
            "fixtures/fsl.json",
            "--transcript",
            "fixtures/transcripts/fewshot.json",
            "--out",
        ])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        o.status.code() == Some(0),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    ensure!(
        String::from_utf8_lossy(&o.stdout).contains("\"pap\": 60.0"),
        "metrics block missing pap 60.0"
    );
    Ok(())
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    match p.downcast::<String>() {
        Ok(s) => *s,
        Err(p) => p
            .downcast_ref::<&str>()
            .map_or("panicked", |s| s)
            .to_string(),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("metric arithmetic (60.0 and 45.0)", 1, metric_arithmetic),
        ("per-iteration success histograms", 5, isrgc_histograms),
        (
            "two-step walkthrough replay and golden report",
            1,
            walkthrough_replay,
        ),
        (
            "reference grammar compiles and parses all 8 statements",
            1,
            engine_fixture,
        ),
        (
            "LALR decisions match brute-force recognizer",
            60,
            oracle_equivalence,
        ),
        ("iteration cap of 10", 5, loop_cap),
        (
            "cosine similarity and retrieval contract",
            5,
            similarity_contract,
        ),
        ("20-record replay run end to end", 10, full_replay_benchmark),
    ];
    let mut failed = 0;
    for (n, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| Err(panic_text(p)));
        let took = start.elapsed();
        let result = result.and_then(|()| {
            if took > Duration::from_secs(limit) {
                Err(format!("took {took:.2?}, limit {limit}s"))
            } else {
                Ok(())
            }
        });
        match result {
            Ok(()) => println!("[PASS] {}. {name} ({took:.2?})", n + 1),
            Err(e) => {
                failed += 1;
                println!("[FAIL] {}. {name} ({took:.2?}): {e}", n + 1);
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
