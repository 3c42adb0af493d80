use serde::Serialize;

use ookgate::ingest::embfile::write_embeddings;
use ookgate::ingest::{chunk_corpus, embed_texts};
use ookgate::vecstore::{build_index, SimilarityMetric};

use crate::args::IndexArgs;
use crate::config::{endpoint_config, setting, FileConfig};
use crate::error::{index_error, ingest_error, CliError};
use crate::inputs;

use super::{DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    n: usize,
    dim: usize,
    metric: String,
    fingerprint: &'a str,
    chunk_size: usize,
    chunk_overlap: usize,
    source: String,
}

pub fn run(args: IndexArgs, cfg: &FileConfig) -> Result<i32, CliError> {
    let docs = inputs::read_docs(&args.docs)?;
    let size = setting(args.chunk_size, cfg, "chunk_size", DEFAULT_CHUNK_SIZE)?;
    let overlap = setting(args.chunk_overlap, cfg, "chunk_overlap", DEFAULT_CHUNK_OVERLAP)?;
    let metric = setting(args.metric, cfg, "metric", SimilarityMetric::Cosine)?;
    let chunks = chunk_corpus(&docs, size, overlap).map_err(ingest_error)?;

    let http = endpoint_config(&args.endpoint, cfg, true, false)?;
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let vectors = embed_texts(&http, &texts).map_err(ingest_error)?;
    let ids: Vec<String> = chunks.into_iter().map(|c| c.chunk_id).collect();

    // the index is built first so metric validation (zero vectors under
    // cosine) fails before anything lands on disk
    let index = build_index(vectors.clone(), ids.clone(), metric).map_err(index_error)?;
    write_embeddings(&args.out, &vectors, &ids, metric)
        .map_err(|err| CliError::input(format!("cannot write {}: {err}", args.out.display())))?;

    let manifest = Manifest {
        version: "1",
        n: index.len(),
        dim: index.dim(),
        metric: metric.to_string(),
        fingerprint: index.fingerprint(),
        chunk_size: size,
        chunk_overlap: overlap,
        source: args.docs.display().to_string(),
    };
    let manifest_path = format!("{}.manifest.json", args.out.display());
    let body = serde_json::to_string_pretty(&manifest).map_err(CliError::compute)?;
    inputs::write_file(manifest_path.as_ref(), &(body + "\n"))?;

    println!(
        "indexed n={} dim={} metric={} fingerprint={} -> {}",
        index.len(),
        index.dim(),
        metric,
        index.fingerprint(),
        args.out.display()
    );
    Ok(0)
}
