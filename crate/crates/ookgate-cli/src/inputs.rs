use std::path::Path;

use serde::Deserialize;

use ookgate::calibration::{load_calibration, Calibration};
use ookgate::ingest::embfile::read_embeddings;
use ookgate::vecstore::{build_index, CorpusIndex, EmbeddingVector, SimilarityMetric};

use crate::error::{index_error, CliError};

#[derive(Deserialize)]
struct DocRecord {
    id: String,
    text: String,
}

/// Reads documents for chunking. A `.jsonl`/`.json` file holds one
/// `{"id", "text"}` object per line; any other file is one document whose
/// id is the file stem.
pub fn read_docs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| CliError::input(format!("cannot read {}: {err}", path.display())))?;
    let is_jsonl = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("json")
    );
    if !is_jsonl {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("doc")
            .to_string();
        return Ok(vec![(id, text)]);
    }
    let mut docs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DocRecord = serde_json::from_str(line).map_err(|err| {
            CliError::input(format!("{}:{}: {err}", path.display(), lineno + 1))
        })?;
        docs.push((record.id, record.text));
    }
    if docs.is_empty() {
        return Err(CliError::input(format!(
            "no documents in {}",
            path.display()
        )));
    }
    Ok(docs)
}

/// Reads an embedding file plus its id sidecar, rejecting empty ones.
pub fn read_emb(
    path: &Path,
) -> Result<(Vec<EmbeddingVector>, Vec<String>, SimilarityMetric), CliError> {
    let (vectors, ids, metric) = read_embeddings(path)
        .map_err(|err| CliError::input(format!("cannot read {}: {err}", path.display())))?;
    if vectors.is_empty() {
        return Err(CliError::input(format!(
            "no vectors in {}",
            path.display()
        )));
    }
    Ok((vectors, ids, metric))
}

/// Reads an embedding file and builds the searchable corpus index from it.
pub fn load_index(path: &Path) -> Result<CorpusIndex, CliError> {
    let (vectors, ids, metric) = read_emb(path)?;
    build_index(vectors, ids, metric).map_err(index_error)
}

/// Loads a calibration file; any failure means the file is unusable input.
pub fn load_cal(path: &Path) -> Result<Calibration, CliError> {
    load_calibration(path)
        .map_err(|err| CliError::input(format!("cannot load {}: {err}", path.display())))
}

/// Serializes one value as a JSON line appended to `buf`.
pub fn push_json_line<T: serde::Serialize>(buf: &mut String, value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(CliError::compute)?;
    buf.push_str(&line);
    buf.push('\n');
    Ok(())
}

/// Writes a file, mapping failures to input errors naming the path.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|err| CliError::input(format!("cannot write {}: {err}", path.display())))
}
