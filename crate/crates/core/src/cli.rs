//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine;
use crate::evaluator::{self, EvalError};
use crate::llm_client::{
    LlmError, ModelConfig, DEFAULT_API_KEY_ENV, DEFAULT_BASE_URL, DEFAULT_MODEL,
};
use crate::pipeline::{self, Mode, PipelineError, RunConfig, DEFAULT_MAX_ITERATIONS};
use crate::similarity::{DEFAULT_THRESHOLD, DEFAULT_TOP_K};

/// Process exit status; metric values never affect it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Dataset = 2,
    Transport = 3,
    Internal = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "grammar-infer",
    version,
    about = "Infer grammars for DSL snippets with a chat model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run the inference loop over an evaluation dataset.
    Run(RunArgs),
    /// Compile a grammar file and parse an input file with it.
    Check {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Recompute a report's metrics from its records.
    Metrics {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub eval: PathBuf,
    #[arg(long)]
    pub fsl: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "on")]
    pub few_shot: Switch,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS, value_parser = at_least_one)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub similarity_threshold: f64,
    #[arg(long, value_enum, default_value = "replay")]
    pub mode: Mode,
    /// Responses to replay, or where to record them.
    #[arg(long, required_if_eq_any([("mode", "replay"), ("mode", "record")]))]
    pub transcript: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_MODEL)]
    pub model: String,
    #[arg(long, default_value = DEFAULT_BASE_URL)]
    pub api_base: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = DEFAULT_API_KEY_ENV)]
    pub api_key_env: String,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(1..))]
    pub timeout: u64,
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
    /// Directory with system.txt, initial_user.txt and feedback_user.txt.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Leave out timestamp and timing so reruns are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
}

impl RunArgs {
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            eval_path: self.eval.clone(),
            fsl_path: self.fsl.clone(),
            few_shot: self.few_shot == Switch::On,
            max_iterations: self.max_iterations,
            top_k: self.top_k,
            threshold: self.similarity_threshold,
            mode: self.mode,
            transcript: self.transcript.clone(),
            model: ModelConfig {
                base_url: self.api_base.clone(),
                model: self.model.clone(),
                api_key_env: self.api_key_env.clone(),
                temperature: self.temperature,
                max_tokens: self.max_tokens,
                timeout_secs: self.timeout,
                max_retries: self.max_retries,
                ..ModelConfig::default()
            },
            template_dir: self.templates.clone(),
            output_path: self.out.clone(),
            deterministic: self.deterministic,
        }
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn pipeline_status(e: &PipelineError) -> ExitStatus {
    match e {
        PipelineError::Config(_) | PipelineError::Templates(_) => ExitStatus::Usage,
        PipelineError::Dataset(_) => ExitStatus::Dataset,
        PipelineError::Client(LlmError::MissingApiKey(_) | LlmError::Config(_)) => {
            ExitStatus::Usage
        }
        PipelineError::Client(LlmError::Transcript { .. } | LlmError::Sink { .. }) => {
            ExitStatus::Dataset
        }
        PipelineError::Client(_) => ExitStatus::Transport,
        PipelineError::Sink(_) | PipelineError::Report(_) => ExitStatus::Internal,
    }
}

fn cmd_run(
    args: &RunArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<ExitStatus> {
    let report = match pipeline::run(&args.to_config()) {
        Ok(r) => r,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(pipeline_status(&e));
        }
    };
    let metrics = serde_json::to_string_pretty(&report.metrics).expect("metrics serialize");
    writeln!(out, "{metrics}")?;
    if report.aborted.is_empty() {
        return Ok(ExitStatus::Success);
    }
    for (id, reason) in &report.abort_reasons {
        writeln!(err, "aborted {id}: {reason}")?;
    }
    Ok(ExitStatus::Transport)
}

fn read(path: &Path, err: &mut dyn Write) -> std::io::Result<Option<String>> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) => {
            writeln!(err, "error: cannot read {}: {e}", path.display())?;
            Ok(None)
        }
    }
}

fn cmd_check(
    grammar: &Path,
    input: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<ExitStatus> {
    let (Some(grammar), Some(input)) = (read(grammar, err)?, read(input, err)?) else {
        return Ok(ExitStatus::Dataset);
    };
    let compiled = match engine::compile(&grammar) {
        Ok(g) => g,
        Err(e) => {
            writeln!(out, "INVALID: {}", engine::format_error(&e))?;
            return Ok(ExitStatus::Success);
        }
    };
    for w in &compiled.warnings {
        writeln!(err, "warning: {w}")?;
    }
    match compiled.parse(&input) {
        Ok(tree) => write!(out, "VALID\n{}", tree.pretty())?,
        Err(e) => writeln!(out, "PARSE_ERROR: {}", engine::format_error(&e))?,
    }
    Ok(ExitStatus::Success)
}

fn cmd_metrics(
    report: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<ExitStatus> {
    let Some(text) = read(report, err)? else {
        return Ok(ExitStatus::Dataset);
    };
    match evaluator::check_report(&text) {
        Ok(diffs) if diffs.is_empty() => {
            writeln!(out, "OK")?;
            Ok(ExitStatus::Success)
        }
        Ok(diffs) => {
            for d in diffs {
                writeln!(out, "{d}")?;
            }
            Ok(ExitStatus::Internal)
        }
        Err(e @ EvalError::Malformed(_)) => {
            writeln!(err, "error: {e}")?;
            Ok(ExitStatus::Dataset)
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(ExitStatus::Internal)
        }
    }
}

/// Parse `args` (program name first) and execute, writing to `out`/`err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            // Nothing useful can be done if the terminal itself is gone.
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return match e.kind() {
                DisplayHelp | DisplayVersion => ExitStatus::Success,
                _ => ExitStatus::Usage,
            };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args, out, err),
        Command::Check { grammar, input } => cmd_check(grammar, input, out, err),
        Command::Metrics { report } => cmd_metrics(report, out, err),
    };
    result.unwrap_or(ExitStatus::Internal)
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock()).code()
}
