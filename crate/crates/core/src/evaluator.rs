//! Accuracy metrics and the results JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::llm_client::ModelConfig;
use crate::pipeline::{Mode, RecordOutcome, RunConfig, Status};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("cannot write report {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Malformed(String),
}

fn percent(part: usize, total: usize, what: &str) -> Result<f64, EvalError> {
    if part > total {
        return Err(EvalError::ContractViolation(format!(
            "{what} {part} exceeds total {total}"
        )));
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(part as f64 / total as f64 * 100.0)
}

/// Parsing accuracy: share of records whose grammar parsed the snippet.
pub fn compute_pap(correct: usize, total: usize) -> Result<f64, EvalError> {
    percent(correct, total, "correct")
}

/// Grammar validity: share of records with at least one compilable grammar.
pub fn compute_gvi(valid: usize, total: usize) -> Result<f64, EvalError> {
    percent(valid, total, "valid")
}

/// `hist[n - 1]` counts records first solved at iteration `n`.
pub fn compute_isrgc(
    outcomes: &[RecordOutcome],
    max_iterations: usize,
) -> Result<Vec<usize>, EvalError> {
    let mut hist = vec![0; max_iterations];
    for o in outcomes {
        if let Some(n) = o.success_iteration {
            if n == 0 || n > max_iterations {
                return Err(EvalError::ContractViolation(format!(
                    "record '{}' succeeded at iteration {n}, outside 1..={max_iterations}",
                    o.id
                )));
            }
            hist[n - 1] += 1;
        }
    }
    Ok(hist)
}

fn one_decimal<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round1(*v))
}

pub fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: usize,
    pub valid: usize,
    pub correct: usize,
    pub invalid: usize,
    pub incorrect: usize,
    #[serde(serialize_with = "one_decimal")]
    pub gvi: f64,
    #[serde(serialize_with = "one_decimal")]
    pub pap: f64,
    pub isrgc: Vec<usize>,
}

pub fn compute_metrics(
    outcomes: &[RecordOutcome],
    max_iterations: usize,
) -> Result<Metrics, EvalError> {
    let total = outcomes.len();
    let valid = outcomes.iter().filter(|o| o.ever_valid).count();
    let correct = outcomes
        .iter()
        .filter(|o| o.status == Status::Correct)
        .count();
    Ok(Metrics {
        total,
        valid,
        correct,
        invalid: total - valid,
        incorrect: total - correct,
        gvi: compute_gvi(valid, total)?,
        pap: compute_pap(correct, total)?,
        isrgc: compute_isrgc(outcomes, max_iterations)?,
    })
}

/// Run settings as recorded in the report. Holds the name of the key
/// variable, never its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub eval: String,
    pub fsl: String,
    pub few_shot: bool,
    pub max_iterations: usize,
    pub top_k: usize,
    pub similarity_threshold: f64,
    pub mode: Mode,
    pub transcript: Option<String>,
    pub templates: Option<String>,
    #[serde(flatten)]
    pub model: ModelConfig,
    pub deterministic: bool,
}

impl From<&RunConfig> for ReportConfig {
    fn from(c: &RunConfig) -> Self {
        let show = |p: &Path| p.display().to_string();
        Self {
            eval: show(&c.eval_path),
            fsl: show(&c.fsl_path),
            few_shot: c.few_shot,
            max_iterations: c.max_iterations,
            top_k: c.top_k,
            similarity_threshold: c.threshold,
            mode: c.mode,
            transcript: c.transcript.as_deref().map(show),
            templates: c.template_dir.as_deref().map(show),
            model: c.model.clone(),
            deterministic: c.deterministic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ReportConfig,
    pub records: Vec<RecordOutcome>,
    pub aborted: Vec<String>,
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
    /// (record id, error) for each aborted record; kept out of the JSON.
    #[serde(skip)]
    pub abort_reasons: Vec<(String, String)>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub fn build_report(
    cfg: &RunConfig,
    records: Vec<RecordOutcome>,
    abort_reasons: Vec<(String, String)>,
) -> Result<RunReport, EvalError> {
    let metrics = compute_metrics(&records, cfg.max_iterations)?;
    Ok(RunReport {
        config: cfg.into(),
        records,
        aborted: abort_reasons.iter().map(|(id, _)| id.clone()).collect(),
        metrics,
        timestamp: None,
        elapsed_seconds: None,
        abort_reasons,
    })
}

/// `<path>.partial`, where an incomplete write is left behind.
pub fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Write to `<path>.partial` and rename into place.
pub fn write_report(report: &RunReport, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    let partial = partial_path(path);
    let err = |source| EvalError::Write {
        path: path.to_path_buf(),
        source,
    };
    std::fs::write(&partial, report.to_json()).map_err(err)?;
    std::fs::rename(&partial, path).map_err(err)
}

/// Recompute the metrics from a serialized report's records and list every
/// field that disagrees with its embedded `metrics` block.
pub fn check_report(json: &str) -> Result<Vec<MetricDiff>, EvalError> {
    let malformed = |m: String| EvalError::Malformed(m);
    let v: Value = serde_json::from_str(json).map_err(|e| malformed(e.to_string()))?;
    let max_iterations =
        v.pointer("/config/max_iterations")
            .and_then(Value::as_u64)
            .ok_or_else(|| malformed("missing config.max_iterations".into()))? as usize;
    let records: Vec<RecordOutcome> = serde_json::from_value(
        v.get("records")
            .cloned()
            .ok_or_else(|| malformed("missing records".into()))?,
    )
    .map_err(|e| malformed(format!("records: {e}")))?;
    let embedded = v
        .get("metrics")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("missing metrics".into()))?;

    let recomputed =
        compute_metrics(&records, max_iterations).map_err(|e| malformed(e.to_string()))?;
    let recomputed = serde_json::to_value(&recomputed).expect("metrics serialize");
    let recomputed = recomputed.as_object().expect("metrics is an object");

    let mut diffs = Vec::new();
    for (field, want) in recomputed {
        let got = embedded.get(field).cloned().unwrap_or(Value::Null);
        let same = match (want.as_f64(), got.as_f64()) {
            (Some(a), Some(b)) if want.is_f64() || got.is_f64() => a == b,
            _ => *want == got,
        };
        if !same {
            diffs.push(MetricDiff {
                field: field.clone(),
                embedded: got,
                recomputed: want.clone(),
            });
        }
    }
    for (field, got) in embedded {
        if !recomputed.contains_key(field) {
            diffs.push(MetricDiff {
                field: field.clone(),
                embedded: got.clone(),
                recomputed: Value::Null,
            });
        }
    }
    // A histogram that disagrees with the correct count is named even when
    // it matches the records.
    if let (Some(h), Some(c)) = (
        embedded.get("isrgc").and_then(Value::as_array),
        embedded.get("correct").and_then(Value::as_u64),
    ) {
        let sum: u64 = h.iter().filter_map(Value::as_u64).sum();
        if sum != c && !diffs.iter().any(|d| d.field == "isrgc") {
            diffs.push(MetricDiff {
                field: "isrgc".into(),
                embedded: Value::Array(h.clone()),
                recomputed: recomputed["isrgc"].clone(),
            });
        }
    }
    Ok(diffs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDiff {
    pub field: String,
    pub embedded: Value,
    pub recomputed: Value,
}

impl std::fmt::Display for MetricDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: report has {}, records give {}",
            self.field, self.embedded, self.recomputed
        )
    }
}
