//! The feedback loop: ask for a grammar, compile it, parse the snippet, and
//! send the error back until the snippet parses or the budget runs out.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{self, DatasetError, FslRecord, SnippetRecord};
use crate::engine;
use crate::evaluator::{self, EvalError, RunReport};
use crate::llm_client::{
    ChatClient, HttpChatClient, LlmError, ModelConfig, RecordingClient, ReplayClient,
};
use crate::prompting::{
    build_feedback_message, build_initial_messages, extract_grammar, ChatMessage, PromptTemplates,
    TemplateError,
};
use crate::similarity::{self, DEFAULT_THRESHOLD, DEFAULT_TOP_K};

pub const DEFAULT_MAX_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    Replay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eval_path: PathBuf,
    pub fsl_path: PathBuf,
    pub few_shot: bool,
    pub max_iterations: usize,
    pub top_k: usize,
    pub threshold: f64,
    pub mode: Mode,
    /// Replay source or record sink.
    pub transcript: Option<PathBuf>,
    pub model: ModelConfig,
    /// `None` uses the bundled templates.
    pub template_dir: Option<PathBuf>,
    pub output_path: PathBuf,
    /// Omit timestamp and timing so reruns are byte-identical.
    pub deterministic: bool,
}

impl RunConfig {
    pub fn new(
        eval_path: impl Into<PathBuf>,
        fsl_path: impl Into<PathBuf>,
        output_path: impl Into<PathBuf>,
    ) -> Self {
        Self {
            eval_path: eval_path.into(),
            fsl_path: fsl_path.into(),
            few_shot: true,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            top_k: DEFAULT_TOP_K,
            threshold: DEFAULT_THRESHOLD,
            mode: Mode::Replay,
            transcript: None,
            model: ModelConfig::default(),
            template_dir: None,
            output_path: output_path.into(),
            deterministic: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max iterations must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("similarity threshold must lie in [0, 1]");
        }
        if self.mode != Mode::Live && self.transcript.is_none() {
            return bad("replay and record modes need a transcript path");
        }
        self.model
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validity {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseStatus {
    Ok,
    Error,
    NotAttempted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// 1-based.
    pub index: usize,
    pub validity: Validity,
    pub parse: ParseStatus,
    pub error_message: Option<String>,
    pub extracted_grammar: Option<String>,
    pub response: String,
    /// SHA-256 of the JSON-serialized request messages.
    pub prompt_sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotRef {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    pub status: Status,
    pub success_iteration: Option<usize>,
    pub ever_valid: bool,
    pub fewshot: Vec<FewShotRef>,
    pub final_grammar: Option<String>,
    pub iterations: Vec<IterationTrace>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("cannot set up the model client: {0}")]
    Client(LlmError),
    #[error("run stopped: {0}")]
    Sink(LlmError),
    #[error(transparent)]
    Report(#[from] EvalError),
}

pub fn prompt_hash(messages: &[ChatMessage]) -> String {
    let json = serde_json::to_vec(messages).expect("messages serialize");
    hex::encode(Sha256::digest(json))
}

/// Outcome of checking one model reply against the snippet.
struct Verdict {
    grammar: Option<String>,
    validity: Validity,
    parse: ParseStatus,
    error: Option<String>,
}

fn judge(response: &str, code: &str) -> Verdict {
    let grammar = match extract_grammar(response) {
        Ok(g) => g,
        Err(e) => {
            return Verdict {
                grammar: None,
                validity: Validity::Invalid,
                parse: ParseStatus::NotAttempted,
                error: Some(e.to_string()),
            }
        }
    };
    let (validity, parse, error) = match engine::compile(&grammar) {
        Err(e) => (
            Validity::Invalid,
            ParseStatus::NotAttempted,
            Some(engine::format_error(&e)),
        ),
        Ok(g) => match engine::parse(&g, code) {
            Ok(_) => (Validity::Valid, ParseStatus::Ok, None),
            Err(e) => (
                Validity::Valid,
                ParseStatus::Error,
                Some(engine::format_error(&e)),
            ),
        },
    };
    Verdict {
        grammar: Some(grammar),
        validity,
        parse,
        error,
    }
}

/// Run the loop for one record. Model client errors abort the record;
/// grammar and parse errors are recorded and fed back.
pub fn infer_record(
    record: &SnippetRecord,
    fsl: &[FslRecord],
    client: &dyn ChatClient,
    templates: &PromptTemplates,
    cfg: &RunConfig,
) -> Result<RecordOutcome, LlmError> {
    let hits = if cfg.few_shot {
        similarity::retrieve_similar(&record.code, fsl, cfg.top_k, cfg.threshold)
    } else {
        Vec::new()
    };
    let fewshot = hits
        .iter()
        .map(|h| FewShotRef {
            id: h.record.id.clone(),
            score: h.score,
        })
        .collect();
    let mut messages = build_initial_messages(templates, &hits, &record.code);
    let mut iterations = Vec::new();
    let mut success_iteration = None;

    for index in 1..=cfg.max_iterations {
        let prompt_sha256 = prompt_hash(&messages);
        let response = client.chat(&record.id, &messages)?;
        let v = judge(&response, &record.code);
        log::info!(
            "{} iteration {index}: {:?}/{:?}",
            record.id,
            v.validity,
            v.parse
        );
        iterations.push(IterationTrace {
            index,
            validity: v.validity,
            parse: v.parse,
            error_message: v.error.clone(),
            extracted_grammar: v.grammar.clone(),
            response: response.clone(),
            prompt_sha256,
        });
        if v.parse == ParseStatus::Ok {
            success_iteration = Some(index);
            break;
        }
        if index < cfg.max_iterations {
            let error = v.error.expect("failed iterations carry an error");
            messages.push(ChatMessage::assistant(response));
            messages.push(build_feedback_message(
                templates,
                v.grammar.as_deref(),
                &error,
            ));
        }
    }

    Ok(RecordOutcome {
        id: record.id.clone(),
        status: if success_iteration.is_some() {
            Status::Correct
        } else {
            Status::Incorrect
        },
        success_iteration,
        ever_valid: iterations.iter().any(|t| t.validity == Validity::Valid),
        fewshot,
        final_grammar: iterations
            .iter()
            .rev()
            .find_map(|t| t.extracted_grammar.clone()),
        iterations,
    })
}

/// Process every record in order with an already-built client. Sink
/// failures stop the run; other client errors mark the record aborted.
pub fn run_records(
    cfg: &RunConfig,
    eval: &[SnippetRecord],
    fsl: &[FslRecord],
    templates: &PromptTemplates,
    client: &dyn ChatClient,
) -> Result<RunReport, PipelineError> {
    let mut outcomes = Vec::with_capacity(eval.len());
    let mut aborted = Vec::new();
    for record in eval {
        match infer_record(record, fsl, client, templates, cfg) {
            Ok(o) => outcomes.push(o),
            Err(e @ LlmError::Sink { .. }) => return Err(PipelineError::Sink(e)),
            Err(e) => {
                log::error!("record {} aborted: {e}", record.id);
                aborted.push((record.id.clone(), e.to_string()));
            }
        }
    }
    Ok(evaluator::build_report(cfg, outcomes, aborted)?)
}

fn make_client(cfg: &RunConfig) -> Result<Box<dyn ChatClient>, PipelineError> {
    let transcript = || cfg.transcript.clone().expect("validated");
    Ok(match cfg.mode {
        Mode::Replay => Box::new(ReplayClient::load(transcript()).map_err(PipelineError::Client)?),
        Mode::Live => {
            Box::new(HttpChatClient::from_env(cfg.model.clone()).map_err(PipelineError::Client)?)
        }
        Mode::Record => {
            let live =
                HttpChatClient::from_env(cfg.model.clone()).map_err(PipelineError::Client)?;
            Box::new(RecordingClient::new(live, transcript()).map_err(PipelineError::Client)?)
        }
    })
}

/// Process the configured datasets and write the report to `cfg.output_path`.
pub fn run(cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    run_with(cfg, None)
}

/// Like [`run`], optionally with a caller-supplied client in place of the
/// one `cfg.mode` would build.
pub fn run_with(
    cfg: &RunConfig,
    client: Option<&dyn ChatClient>,
) -> Result<RunReport, PipelineError> {
    let started = Instant::now();
    cfg.validate()?;
    let templates = match &cfg.template_dir {
        Some(dir) => PromptTemplates::load(dir)?,
        None => PromptTemplates::default(),
    };
    let eval = dataset::load_eval(&cfg.eval_path)?;
    let fsl = dataset::load_fsl(&cfg.fsl_path)?;
    let owned;
    let client = match client {
        Some(c) => c,
        None => {
            owned = make_client(cfg)?;
            owned.as_ref()
        }
    };
    let mut report = run_records(cfg, &eval, &fsl, &templates, client)?;
    if !cfg.deterministic {
        report.timestamp =
            Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
        report.elapsed_seconds = Some(started.elapsed().as_secs_f64());
    }
    evaluator::write_report(&report, &cfg.output_path)?;
    Ok(report)
}
