use ookgate::ingest::{chunk_corpus, synthesize_queries, TemplateId};

use crate::args::SynthesizeArgs;
use crate::config::{endpoint_config, setting, FileConfig};
use crate::error::{ingest_error, CliError};
use crate::inputs;

use super::{select_chunks, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};

pub fn run(args: SynthesizeArgs, cfg: &FileConfig) -> Result<i32, CliError> {
    let docs = inputs::read_docs(&args.docs)?;
    let size = setting(args.chunk_size, cfg, "chunk_size", DEFAULT_CHUNK_SIZE)?;
    let overlap = setting(args.chunk_overlap, cfg, "chunk_overlap", DEFAULT_CHUNK_OVERLAP)?;
    let seed = setting(args.seed, cfg, "seed", 0)?;
    let template = args.template.unwrap_or(TemplateId::Mcq);

    let chunks = chunk_corpus(&docs, size, overlap).map_err(ingest_error)?;
    let chunks = select_chunks(chunks, args.chunks, seed);

    let http = endpoint_config(&args.endpoint, cfg, false, true)?;
    let queries =
        synthesize_queries(&http, &chunks, template, args.per_chunk).map_err(ingest_error)?;

    let mut lines = String::new();
    for query in &queries {
        inputs::push_json_line(&mut lines, query)?;
    }
    inputs::write_file(&args.out, &lines)?;

    println!(
        "synthesized {} queries from {} chunks -> {}",
        queries.len(),
        chunks.len(),
        args.out.display()
    );
    Ok(0)
}
