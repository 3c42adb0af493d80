use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use ookgate::ingest::TemplateId;
use ookgate::statistics::StatisticFamily;
use ookgate::vecstore::SimilarityMetric;

#[derive(Debug, Parser)]
#[command(
    name = "ookgate",
    version,
    about = "Statistical knowledge-boundary gating for retrieval corpora"
)]
pub struct Cli {
    /// key=value config file merged under flags; flags win, then
    /// OOKGATE_* environment variables, then the file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chunk documents, embed them, and write the corpus embedding file.
    Index(IndexArgs),
    /// Fit the null distribution of a statistic over calibration queries.
    Calibrate(CalibrateArgs),
    /// Test queries against a calibration, one JSON line per query.
    Gate(GateArgs),
    /// Two-sample drift check of a query batch against the calibration.
    Drift(DriftArgs),
    /// Balanced detection metrics over labeled query pools.
    Eval(EvalArgs),
    /// Generate synthetic questions from corpus chunks.
    Synthesize(SynthesizeArgs),
    /// Emit histogram, ROC, and critical-value plot data as CSV.
    Report(ReportArgs),
}

/// Endpoint flags shared by every command that calls out over HTTP.
#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// Embeddings endpoint URL.
    #[arg(long, value_name = "URL")]
    pub embed_url: Option<String>,
    /// Chat-completions endpoint URL.
    #[arg(long, value_name = "URL")]
    pub chat_url: Option<String>,
    /// Bearer token sent with every request.
    #[arg(long, value_name = "KEY")]
    pub api_key: Option<String>,
    /// Model name sent to the endpoints.
    #[arg(long, value_name = "NAME")]
    pub model: Option<String>,
    /// Texts per embeddings request.
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Documents to index: JSONL with one {"id", "text"} object per line,
    /// or any other file treated as a single document.
    #[arg(long, value_name = "FILE")]
    pub docs: PathBuf,
    /// Output embedding file; the id sidecar and manifest sit next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Similarity metric: cosine or dot.
    #[arg(long)]
    pub metric: Option<SimilarityMetric>,
    /// Chunk window size in characters.
    #[arg(long, value_name = "CHARS")]
    pub chunk_size: Option<usize>,
    /// Overlap between consecutive windows in characters.
    #[arg(long, value_name = "CHARS")]
    pub chunk_overlap: Option<usize>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("cal_input").required(true).args(["queries", "synthesize"])
))]
pub struct CalibrateArgs {
    /// Corpus embedding file written by `index`.
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Output calibration JSON file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Statistic family: mss, knn, avgknn, entropy, energy, fisher, simes.
    #[arg(long, value_name = "NAME")]
    pub stat: Option<StatisticFamily>,
    /// Retrieval depth.
    #[arg(long, value_name = "N")]
    pub k: Option<usize>,
    /// Rank used by the knn statistic (defaults to k).
    #[arg(long, value_name = "J")]
    pub rank_j: Option<usize>,
    /// Temperature used by the energy statistic.
    #[arg(long, value_name = "T")]
    pub tau: Option<f64>,
    /// Calibration query embeddings (true in-knowledge queries).
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,
    /// Synthesize calibration questions from corpus chunks instead.
    #[arg(long)]
    pub synthesize: bool,
    /// Documents to chunk when synthesizing.
    #[arg(long, value_name = "FILE", requires = "synthesize")]
    pub docs: Option<PathBuf>,
    /// Chunk window size in characters.
    #[arg(long, value_name = "CHARS")]
    pub chunk_size: Option<usize>,
    /// Overlap between consecutive windows in characters.
    #[arg(long, value_name = "CHARS")]
    pub chunk_overlap: Option<usize>,
    /// Questions per chunk when synthesizing.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub per_chunk: usize,
    /// Cap on the number of chunks used, drawn as a seeded sample.
    #[arg(long, value_name = "N")]
    pub chunks: Option<usize>,
    /// Prompt template: mcq or boolean.
    #[arg(long, value_name = "NAME")]
    pub template: Option<TemplateId>,
    /// Seed for the chunk sample.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("gate_input").required(true).args(["queries", "text"])
))]
pub struct GateArgs {
    /// Calibration JSON file.
    #[arg(long, value_name = "FILE")]
    pub cal: PathBuf,
    /// Corpus embedding file.
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Query embeddings to gate.
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,
    /// A single query text, embedded through the endpoint.
    #[arg(long, value_name = "TEXT")]
    pub text: Option<String>,
    /// Significance level of the test.
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
    /// Exit 3 when any query is rejected.
    #[arg(long)]
    pub strict: bool,
    /// Output JSONL path; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    /// Calibration JSON file.
    #[arg(long, value_name = "FILE")]
    pub cal: PathBuf,
    /// Corpus embedding file.
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Batch of query embeddings to test.
    #[arg(long, value_name = "FILE")]
    pub batch: PathBuf,
    /// Significance level of the test.
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
    /// Exit 3 when drift is detected.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Calibration JSON file.
    #[arg(long, value_name = "FILE")]
    pub cal: PathBuf,
    /// Corpus embedding file.
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// In-knowledge query embeddings.
    #[arg(long, value_name = "FILE")]
    pub ik: PathBuf,
    /// Out-of-knowledge query embeddings.
    #[arg(long, value_name = "FILE")]
    pub ook: PathBuf,
    /// Queries drawn per class per run.
    #[arg(long, value_name = "N", default_value_t = 300)]
    pub n_per_class: usize,
    /// Number of balanced draws.
    #[arg(long, value_name = "N", default_value_t = 10)]
    pub runs: usize,
    /// Seed of the balanced draws.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Allow sampling with replacement when a pool is small.
    #[arg(long)]
    pub with_replacement: bool,
    /// Output report JSON; per-run CSV is written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Documents to chunk: JSONL with one {"id", "text"} object per line,
    /// or any other file treated as a single document.
    #[arg(long, value_name = "FILE")]
    pub docs: PathBuf,
    /// Output JSONL of synthesized questions.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Chunk window size in characters.
    #[arg(long, value_name = "CHARS")]
    pub chunk_size: Option<usize>,
    /// Overlap between consecutive windows in characters.
    #[arg(long, value_name = "CHARS")]
    pub chunk_overlap: Option<usize>,
    /// Questions per chunk.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub per_chunk: usize,
    /// Cap on the number of chunks used, drawn as a seeded sample.
    #[arg(long, value_name = "N")]
    pub chunks: Option<usize>,
    /// Prompt template: mcq or boolean.
    #[arg(long, value_name = "NAME")]
    pub template: Option<TemplateId>,
    /// Seed for the chunk sample.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Calibration JSON file; supplies the critical value.
    #[arg(long, value_name = "FILE")]
    pub cal: PathBuf,
    /// Score file, one per source: numeric lines or gate JSONL. Repeat the
    /// flag for several sources; with exactly two (in-knowledge first) a
    /// ROC curve is emitted as well.
    #[arg(long = "scores", value_name = "FILE", required = true)]
    pub scores: Vec<PathBuf>,
    /// Histogram bins per source.
    #[arg(long, value_name = "N", default_value_t = 50)]
    pub bins: usize,
    /// Significance level of the critical-value row.
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
    /// Directory for hist.csv and roc.csv.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
}
