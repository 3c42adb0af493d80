use ookgate::drift::drift_test;

use crate::args::DriftArgs;
use crate::config::{setting, FileConfig};
use crate::error::CliError;
use crate::inputs;

use super::DEFAULT_ALPHA;

pub fn run(args: DriftArgs, cfg: &FileConfig) -> Result<i32, CliError> {
    let cal = inputs::load_cal(&args.cal)?;
    let index = inputs::load_index(&args.index)?;
    let alpha = setting(args.alpha, cfg, "alpha", DEFAULT_ALPHA)?;
    let (batch, _, _) = inputs::read_emb(&args.batch)?;

    let decision = drift_test(&cal, &index, &batch, alpha).map_err(CliError::compute)?;
    let line = serde_json::to_string(&decision).map_err(CliError::compute)?;
    println!("{line}");
    Ok(if args.strict && decision.reject { 3 } else { 0 })
}
