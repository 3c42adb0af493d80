use std::fmt;

use ookgate::ingest::IngestError;
use ookgate::vecstore::VecStoreError;

/// Failure classes mapped to process exit codes. `Input` covers files that
/// are missing, malformed, empty, or insufficient, plus settings absent from
/// every source; it exits 2. `Compute` covers semantic validation and
/// runtime failures (bad parameter values, dimension mismatches, endpoint
/// trouble); it exits 1. Strict-mode rejections are not errors and exit 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn compute(msg: impl fmt::Display) -> Self {
        CliError::Compute(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Compute(msg) => f.write_str(msg),
        }
    }
}

/// Classifies index-construction failures: identity problems originate in
/// the input file, everything else (zero vectors, dimension mismatches) is
/// a validation failure.
pub fn index_error(err: VecStoreError) -> CliError {
    match err {
        VecStoreError::DuplicateId(_) | VecStoreError::EmptyCorpus => CliError::input(err),
        other => CliError::compute(other),
    }
}

/// Classifies ingest failures raised while talking to endpoints or shaping
/// their responses. Empty-input variants point back at the files we read.
pub fn ingest_error(err: IngestError) -> CliError {
    match err {
        IngestError::EmptyDocs
        | IngestError::EmptyTexts
        | IngestError::EmptyText(_)
        | IngestError::MissingEnv(_) => CliError::input(err),
        other => CliError::compute(other),
    }
}
