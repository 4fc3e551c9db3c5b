//! Evaluation and few-shot datasets.
//!
//! Evaluation file: JSON array of `{"id", "name", "code"}`.
//! Few-shot file: JSON array of `{"id", "code", "grammar"}`; every exemplar
//! grammar must compile and parse its own code.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, EngineError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub id: String,
    pub name: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FslRecord {
    pub id: String,
    pub code: String,
    pub grammar: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: record {index}: {message}")]
    Schema {
        path: PathBuf,
        index: usize,
        message: String,
    },
    #[error("{path}: few-shot record '{id}' has an invalid grammar: {error}")]
    GrammarInvalid {
        path: PathBuf,
        id: String,
        error: Box<EngineError>,
    },
    #[error("{path}: few-shot record '{id}' grammar does not parse its own code: {error}")]
    ParseFailure {
        path: PathBuf,
        id: String,
        error: Box<EngineError>,
    },
}

trait Keyed {
    fn id(&self) -> &str;
    fn required(&self) -> [(&'static str, &str); 2];
}

impl Keyed for SnippetRecord {
    fn id(&self) -> &str {
        &self.id
    }
    fn required(&self) -> [(&'static str, &str); 2] {
        [("id", &self.id), ("code", &self.code)]
    }
}

impl Keyed for FslRecord {
    fn id(&self) -> &str {
        &self.id
    }
    fn required(&self) -> [(&'static str, &str); 2] {
        [("code", &self.code), ("grammar", &self.grammar)]
    }
}

fn load_records<T: DeserializeOwned + Keyed>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let values: Vec<serde_json::Value> =
        serde_json::from_str(&text).map_err(|source| DatasetError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    let schema = |index, message: String| DatasetError::Schema {
        path: path.to_path_buf(),
        index,
        message,
    };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(values.len());
    for (index, v) in values.into_iter().enumerate() {
        let rec: T = serde_json::from_value(v).map_err(|e| schema(index, e.to_string()))?;
        if rec.id().is_empty() {
            return Err(schema(index, "empty id".into()));
        }
        for (field, value) in rec.required() {
            if value.trim().is_empty() {
                return Err(schema(index, format!("empty {field}")));
            }
        }
        if !seen.insert(rec.id().to_string()) {
            return Err(schema(index, format!("duplicate id '{}'", rec.id())));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_eval(path: impl AsRef<Path>) -> Result<Vec<SnippetRecord>, DatasetError> {
    load_records(path.as_ref())
}

/// Load few-shot exemplars, compiling each grammar and parsing its own code.
pub fn load_fsl(path: impl AsRef<Path>) -> Result<Vec<FslRecord>, DatasetError> {
    let path = path.as_ref();
    let records: Vec<FslRecord> = load_records(path)?;
    for r in &records {
        let g = engine::compile(&r.grammar).map_err(|error| DatasetError::GrammarInvalid {
            path: path.to_path_buf(),
            id: r.id.clone(),
            error: Box::new(error),
        })?;
        engine::parse(&g, &r.code).map_err(|error| DatasetError::ParseFailure {
            path: path.to_path_buf(),
            id: r.id.clone(),
            error: Box::new(error),
        })?;
    }
    Ok(records)
}
