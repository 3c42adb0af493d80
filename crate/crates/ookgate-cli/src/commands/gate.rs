use serde::Serialize;

use ookgate::calibration::gate_query;
use ookgate::ingest::embed_texts;
use ookgate::vecstore::EmbeddingVector;

use crate::args::GateArgs;
use crate::config::{endpoint_config, setting, FileConfig};
use crate::error::{ingest_error, CliError};
use crate::inputs;

use super::DEFAULT_ALPHA;

#[derive(Serialize)]
struct GateLine<'a> {
    query_id: &'a str,
    statistic: f64,
    p_value: f64,
    reject: bool,
}

pub fn run(args: GateArgs, cfg: &FileConfig) -> Result<i32, CliError> {
    let cal = inputs::load_cal(&args.cal)?;
    let index = inputs::load_index(&args.index)?;
    let alpha = setting(args.alpha, cfg, "alpha", DEFAULT_ALPHA)?;

    let (queries, ids): (Vec<EmbeddingVector>, Vec<String>) = match (&args.queries, &args.text) {
        (Some(path), None) => {
            let (vectors, ids, _) = inputs::read_emb(path)?;
            (vectors, ids)
        }
        (None, Some(text)) => {
            let http = endpoint_config(&args.endpoint, cfg, true, false)?;
            let vectors = embed_texts(&http, std::slice::from_ref(text)).map_err(ingest_error)?;
            (vectors, vec!["q0".to_string()])
        }
        // the clap group guarantees exactly one input source
        _ => unreachable!("clap group"),
    };

    let mut lines = String::new();
    let mut any_reject = false;
    for (query, id) in queries.iter().zip(&ids) {
        let decision = gate_query(&cal, &index, query, alpha).map_err(CliError::compute)?;
        any_reject |= decision.reject;
        let line = GateLine {
            query_id: id,
            statistic: decision.statistic,
            p_value: decision.p_value,
            reject: decision.reject,
        };
        inputs::push_json_line(&mut lines, &line)?;
    }

    match &args.out {
        Some(path) => inputs::write_file(path, &lines)?,
        None => print!("{lines}"),
    }
    Ok(if args.strict && any_reject { 3 } else { 0 })
}
