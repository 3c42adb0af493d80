use ookgate::calibration::{build_calibration, save_calibration, Provenance};
use ookgate::ingest::{chunk_corpus, embed_texts, synthesize_queries, TemplateId};
use ookgate::statistics::{StatisticFamily, StatisticKind, DEFAULT_K, DEFAULT_TAU};
use ookgate::vecstore::EmbeddingVector;

use crate::args::CalibrateArgs;
use crate::config::{endpoint_config, setting, setting_opt, FileConfig};
use crate::error::{ingest_error, CliError};
use crate::inputs;

use super::{provenance_token, select_chunks, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};

pub fn run(args: CalibrateArgs, cfg: &FileConfig) -> Result<i32, CliError> {
    let index = inputs::load_index(&args.index)?;

    let family = setting(args.stat, cfg, "stat", StatisticFamily::Energy)?;
    let k = setting(args.k, cfg, "k", DEFAULT_K)?;
    let rank_j = setting_opt(args.rank_j, cfg, "rank_j")?.unwrap_or(k);
    let tau = setting(args.tau, cfg, "tau", DEFAULT_TAU)?;
    let kind = StatisticKind::new(family, k, rank_j, tau).map_err(CliError::compute)?;

    let (queries, provenance) = if args.synthesize {
        (synthesized_queries(&args, cfg)?, Provenance::Synthetic)
    } else {
        // the clap group guarantees --queries when --synthesize is absent
        let path = args.queries.as_ref().expect("clap group");
        let (vectors, _, _) = inputs::read_emb(path)?;
        (vectors, Provenance::TrueInKnowledge)
    };

    let cal = build_calibration(&index, &queries, kind, provenance).map_err(CliError::compute)?;
    save_calibration(&cal, &args.out)
        .map_err(|err| CliError::input(format!("cannot write {}: {err}", args.out.display())))?;

    println!(
        "calibrated kind={} n_cal={} provenance={} -> {}",
        cal.kind(),
        cal.n_cal(),
        provenance_token(cal.provenance()),
        args.out.display()
    );
    Ok(0)
}

fn synthesized_queries(
    args: &CalibrateArgs,
    cfg: &FileConfig,
) -> Result<Vec<EmbeddingVector>, CliError> {
    let docs_path = args
        .docs
        .as_ref()
        .ok_or_else(|| CliError::input("--synthesize requires --docs"))?;
    let docs = inputs::read_docs(docs_path)?;
    let size = setting(args.chunk_size, cfg, "chunk_size", DEFAULT_CHUNK_SIZE)?;
    let overlap = setting(args.chunk_overlap, cfg, "chunk_overlap", DEFAULT_CHUNK_OVERLAP)?;
    let seed = setting(args.seed, cfg, "seed", 0)?;
    let template = args.template.unwrap_or(TemplateId::Mcq);

    let chunks = chunk_corpus(&docs, size, overlap).map_err(ingest_error)?;
    let chunks = select_chunks(chunks, args.chunks, seed);

    let http = endpoint_config(&args.endpoint, cfg, true, true)?;
    let queries = synthesize_queries(&http, &chunks, template, args.per_chunk)
        .map_err(ingest_error)?;
    let questions: Vec<String> = queries.into_iter().map(|q| q.question).collect();
    embed_texts(&http, &questions).map_err(ingest_error)
}
