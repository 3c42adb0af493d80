mod calibrate;
mod drift;
mod eval;
mod gate;
mod index;
mod report;
mod synthesize;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ookgate::ingest::DocumentChunk;

use crate::args::{Cli, Command};
use crate::config::FileConfig;
use crate::error::CliError;

pub fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    match cli.command {
        Command::Index(args) => index::run(args, &cfg),
        Command::Calibrate(args) => calibrate::run(args, &cfg),
        Command::Gate(args) => gate::run(args, &cfg),
        Command::Drift(args) => drift::run(args, &cfg),
        Command::Eval(args) => eval::run(args, &cfg),
        Command::Synthesize(args) => synthesize::run(args, &cfg),
        Command::Report(args) => report::run(args, &cfg),
    }
}

pub const DEFAULT_CHUNK_SIZE: usize = 1000;
pub const DEFAULT_CHUNK_OVERLAP: usize = 200;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Caps the chunk list by a seeded sample without replacement, kept in
/// corpus order so downstream output stays stable.
pub fn select_chunks(
    chunks: Vec<DocumentChunk>,
    cap: Option<usize>,
    seed: u64,
) -> Vec<DocumentChunk> {
    let Some(cap) = cap else { return chunks };
    if cap >= chunks.len() {
        return chunks;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, chunks.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| chunks[i].clone()).collect()
}

/// Token used in summaries and file names for a calibration's provenance.
pub fn provenance_token(provenance: ookgate::calibration::Provenance) -> &'static str {
    match provenance {
        ookgate::calibration::Provenance::TrueInKnowledge => "true_in_knowledge",
        ookgate::calibration::Provenance::Synthetic => "synthetic",
    }
}
