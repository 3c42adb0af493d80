//! Corpus intake: chunking, embedding acquisition over HTTP, synthetic
//! query generation through a chat endpoint, and binary embedding files.
//!
//! Everything here feeds calibration. Chunks become corpus rows once
//! embedded; synthesized questions become calibration queries with
//! provenance recorded as synthetic.

pub mod client;
pub mod embfile;

pub use client::HttpConfig;
pub use embfile::{read_embeddings, write_embeddings};

use crate::vecstore::{EmbeddingVector, VecStoreError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("chunk size {size} must exceed overlap {overlap}")]
    InvalidChunking { size: usize, overlap: usize },
    #[error("document list is empty")]
    EmptyDocs,
    #[error("text list is empty")]
    EmptyTexts,
    #[error("text at index {0} is empty")]
    EmptyText(usize),
    #[error("chunk list is empty")]
    EmptyChunks,
    #[error("queries per chunk must be at least 1")]
    ZeroPerChunk,
    #[error("embedding dimension drifted: expected {expected}, got {got}")]
    DimensionDrift { expected: usize, got: usize },
    #[error("endpoint returned status {status}: {detail}")]
    Endpoint { status: u16, detail: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("answer {answer:?} is not one of the offered option keys")]
    InconsistentAnswerKey { answer: String },
    #[error("synthesized question is empty")]
    EmptyQuestion,
    #[error("no synthesized query could be parsed")]
    NoSuccessfulParses,
    #[error("vector list is empty")]
    EmptyVectors,
    #[error("id {0:?} is empty or contains a newline")]
    InvalidId(String),
    #[error("{vectors} vectors but {ids} ids")]
    IdCountMismatch { vectors: usize, ids: usize },
    #[error("invalid embedding file header: {0}")]
    InvalidHeader(String),
    #[error("embedding payload truncated: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: u64, got: u64 },
    #[error("{0} unexpected trailing bytes after embedding payload")]
    TrailingBytes(u64),
    #[error("missing environment variable {0}")]
    MissingEnv(&'static str),
    #[error(transparent)]
    Vector(#[from] VecStoreError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("payload is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// One fixed-size window of a source document. Spans are character
/// offsets, half-open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentChunk {
    pub chunk_id: String,
    pub source_doc: String,
    pub text: String,
    pub char_span: (usize, usize),
}

/// A question generated from one chunk. Options and answer are kept for
/// auditability; calibration uses only the question text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticQuery {
    pub question: String,
    pub options: Option<BTreeMap<String, String>>,
    pub answer: Option<String>,
    pub source_chunk: String,
    pub raw_payload: String,
}

/// Splits documents into sliding character windows stepping by
/// `size - overlap`; a final partial window is kept when nonempty.
pub fn chunk_corpus(
    docs: &[(String, String)],
    size: usize,
    overlap: usize,
) -> Result<Vec<DocumentChunk>, IngestError> {
    if size <= overlap {
        return Err(IngestError::InvalidChunking { size, overlap });
    }
    if docs.is_empty() {
        return Err(IngestError::EmptyDocs);
    }
    let step = size - overlap;
    let mut chunks = Vec::new();
    for (doc_id, text) in docs {
        let chars: Vec<char> = text.chars().collect();
        let mut start = 0usize;
        let mut index = 0usize;
        while start < chars.len() {
            let end = (start + size).min(chars.len());
            chunks.push(DocumentChunk {
                chunk_id: format!("{doc_id}#{index}"),
                source_doc: doc_id.clone(),
                text: chars[start..end].iter().collect(),
                char_span: (start, end),
            });
            if end >= chars.len() {
                break;
            }
            start += step;
            index += 1;
        }
    }
    Ok(chunks)
}

/// Embeds texts through the configured endpoint, in input order, with
/// batching and transient-failure retries. All returned vectors must share
/// one dimension.
pub fn embed_texts(
    config: &HttpConfig,
    texts: &[String],
) -> Result<Vec<EmbeddingVector>, IngestError> {
    if texts.is_empty() {
        return Err(IngestError::EmptyTexts);
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(IngestError::EmptyText(i));
    }
    let mut out: Vec<EmbeddingVector> = Vec::with_capacity(texts.len());
    let mut expected_dim: Option<usize> = None;
    for batch in texts.chunks(config.batch_size.max(1)) {
        let rows = client::embed_batch(config, batch)?;
        for row in rows {
            let dim = row.len();
            match expected_dim {
                None => expected_dim = Some(dim),
                Some(expected) if expected != dim => {
                    return Err(IngestError::DimensionDrift { expected, got: dim });
                }
                Some(_) => {}
            }
            out.push(EmbeddingVector::new(row)?);
        }
    }
    Ok(out)
}

/// Built-in prompt templates for query synthesis. Both instruct the model
/// to answer with one JSON object shaped like the in-prompt example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateId {
    /// Four-option multiple choice.
    Mcq,
    /// Yes / no / maybe.
    Boolean,
}

const SYSTEM_TEMPLATE: &str = "You are a professor setting up quiz questions for your students. \
The questions should be based only on context from the provided material. \
Below are some sample questions.\n\n{Examples}";

const USER_TEMPLATE: &str = "Below is a chunk of context from the material.\n\
---\n{Context}\n---\n\
Given the context information, please generate a similar question following the json format.";

const MCQ_EXAMPLE: &str = r#"{"question": "Which process described in the material turns recorded events into a searchable archive?", "options": {"A": "Compaction", "B": "Indexing", "C": "Replication", "D": "Sharding"}, "answer": "B"}"#;

const BOOLEAN_EXAMPLE: &str = r#"{"question": "Does the material state that archived records remain searchable after compaction?", "options": {"A": "yes", "B": "no", "C": "maybe"}, "answer": "A"}"#;

impl TemplateId {
    pub fn system_prompt(self) -> String {
        let examples = match self {
            TemplateId::Mcq => MCQ_EXAMPLE,
            TemplateId::Boolean => BOOLEAN_EXAMPLE,
        };
        SYSTEM_TEMPLATE.replace("{Examples}", examples)
    }

    pub fn user_prompt(self, context: &str) -> String {
        USER_TEMPLATE.replace("{Context}", context)
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TemplateId::Mcq => "mcq",
            TemplateId::Boolean => "boolean",
        })
    }
}

impl std::str::FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mcq" => Ok(TemplateId::Mcq),
            "boolean" => Ok(TemplateId::Boolean),
            other => Err(format!("unknown template {other:?} (expected mcq or boolean)")),
        }
    }
}

/// Parses one chat completion payload into a query. The payload must be a
/// JSON object with a nonempty `question`; when both `options` and
/// `answer` are present the answer must be one of the option keys.
pub fn parse_synthetic_payload(
    raw: &str,
    source_chunk: &str,
) -> Result<SyntheticQuery, IngestError> {
    #[derive(Deserialize)]
    struct Payload {
        question: String,
        #[serde(default)]
        options: Option<BTreeMap<String, String>>,
        #[serde(default)]
        answer: Option<String>,
    }
    let payload: Payload = serde_json::from_str(raw)?;
    if payload.question.trim().is_empty() {
        return Err(IngestError::EmptyQuestion);
    }
    if let (Some(options), Some(answer)) = (&payload.options, &payload.answer) {
        if !options.contains_key(answer) {
            return Err(IngestError::InconsistentAnswerKey {
                answer: answer.clone(),
            });
        }
    }
    Ok(SyntheticQuery {
        question: payload.question,
        options: payload.options,
        answer: payload.answer,
        source_chunk: source_chunk.to_string(),
        raw_payload: raw.to_string(),
    })
}

/// Generates `n_per_chunk` questions per chunk through the chat endpoint.
/// A malformed response is retried once, then the attempt is skipped with
/// a warning; an entirely fruitless run is an error.
pub fn synthesize_queries(
    config: &HttpConfig,
    chunks: &[DocumentChunk],
    template: TemplateId,
    n_per_chunk: usize,
) -> Result<Vec<SyntheticQuery>, IngestError> {
    if chunks.is_empty() {
        return Err(IngestError::EmptyChunks);
    }
    if n_per_chunk == 0 {
        return Err(IngestError::ZeroPerChunk);
    }
    let system = template.system_prompt();
    let mut queries = Vec::new();
    for chunk in chunks {
        let user = template.user_prompt(&chunk.text);
        for attempt_slot in 0..n_per_chunk {
            let mut parsed = None;
            for retry in 0..2 {
                let content = client::chat_complete(config, &system, &user)?;
                match parse_synthetic_payload(&content, &chunk.chunk_id) {
                    Ok(q) => {
                        parsed = Some(q);
                        break;
                    }
                    Err(err) => {
                        log::warn!(
                            "chunk {} sample {attempt_slot} attempt {retry}: \
                             unusable completion ({err})",
                            chunk.chunk_id
                        );
                    }
                }
            }
            match parsed {
                Some(q) => queries.push(q),
                None => log::warn!(
                    "chunk {} sample {attempt_slot}: skipped after retry",
                    chunk.chunk_id
                ),
            }
        }
    }
    if queries.is_empty() {
        return Err(IngestError::NoSuccessfulParses);
    }
    Ok(queries)
}
