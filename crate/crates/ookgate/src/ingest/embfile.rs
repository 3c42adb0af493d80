//! Binary embedding files with a plain-text id sidecar.
//!
//! Layout, all integers little endian:
//!
//! ```text
//! magic "OOKG" | version u32 | dim u32 | count u64 | metric u8 | payload
//! ```
//!
//! The payload holds `count * dim` 32-bit floats row by row; metric 0 is
//! cosine, 1 is dot product. Ids live beside the file at `<file>.ids`,
//! one UTF-8 line per row. The round trip is bit exact.

use super::IngestError;
use crate::vecstore::{EmbeddingVector, SimilarityMetric};
use std::io::Write;
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"OOKG";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 1;

fn ids_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".ids");
    PathBuf::from(name)
}

fn metric_tag(metric: SimilarityMetric) -> u8 {
    match metric {
        SimilarityMetric::Cosine => 0,
        SimilarityMetric::DotProduct => 1,
    }
}

fn check_id(id: &str) -> Result<(), IngestError> {
    if id.is_empty() || id.contains('\n') || id.contains('\r') {
        return Err(IngestError::InvalidId(id.to_string()));
    }
    Ok(())
}

/// Writes vectors and their ids. Ids must be nonempty single-line strings.
pub fn write_embeddings(
    path: &Path,
    vectors: &[EmbeddingVector],
    ids: &[String],
    metric: SimilarityMetric,
) -> Result<(), IngestError> {
    if vectors.is_empty() {
        return Err(IngestError::EmptyVectors);
    }
    if vectors.len() != ids.len() {
        return Err(IngestError::IdCountMismatch {
            vectors: vectors.len(),
            ids: ids.len(),
        });
    }
    let dim = vectors[0].dim();
    if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(IngestError::DimensionDrift {
            expected: dim,
            got: bad.dim(),
        });
    }
    for id in ids {
        check_id(id)?;
    }

    let mut buf = Vec::with_capacity(HEADER_LEN + vectors.len() * dim * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    buf.extend_from_slice(&(vectors.len() as u64).to_le_bytes());
    buf.push(metric_tag(metric));
    for vector in vectors {
        for &value in vector.as_slice() {
            buf.extend_from_slice(&value.to_le_bytes());
        }
    }
    std::fs::write(path, buf)?;

    let mut sidecar = std::io::BufWriter::new(std::fs::File::create(ids_path(path))?);
    for id in ids {
        writeln!(sidecar, "{id}")?;
    }
    sidecar.flush()?;
    Ok(())
}

/// Reads a file written by [`write_embeddings`], validating the header,
/// the payload length, and the id sidecar.
pub fn read_embeddings(
    path: &Path,
) -> Result<(Vec<EmbeddingVector>, Vec<String>, SimilarityMetric), IngestError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(IngestError::InvalidHeader(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(IngestError::InvalidHeader("bad magic".to_string()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(IngestError::InvalidHeader(format!(
            "unsupported version {version}"
        )));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(IngestError::InvalidHeader("dim is zero".to_string()));
    }
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let metric = match bytes[20] {
        0 => SimilarityMetric::Cosine,
        1 => SimilarityMetric::DotProduct,
        tag => {
            return Err(IngestError::InvalidHeader(format!(
                "unknown metric tag {tag}"
            )))
        }
    };

    let expected = count
        .checked_mul(dim as u64)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| IngestError::InvalidHeader("payload size overflows".to_string()))?;
    let got = (bytes.len() - HEADER_LEN) as u64;
    if got < expected {
        return Err(IngestError::TruncatedPayload { expected, got });
    }
    if got > expected {
        return Err(IngestError::TrailingBytes(got - expected));
    }

    let payload = &bytes[HEADER_LEN..];
    let mut vectors = Vec::with_capacity(count as usize);
    for row in payload.chunks_exact(dim * 4) {
        let values: Vec<f32> = row
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        vectors.push(EmbeddingVector::new(values)?);
    }

    let sidecar = std::fs::read_to_string(ids_path(path))?;
    let ids: Vec<String> = sidecar.lines().map(str::to_string).collect();
    if ids.len() != vectors.len() {
        return Err(IngestError::IdCountMismatch {
            vectors: vectors.len(),
            ids: ids.len(),
        });
    }
    for id in &ids {
        check_id(id)?;
    }
    Ok((vectors, ids, metric))
}
