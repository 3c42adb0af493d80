use std::fmt::Write as _;

use ookgate::metrics::{balanced_eval, RunMetrics};

use crate::args::EvalArgs;
use crate::config::{setting, FileConfig};
use crate::error::CliError;
use crate::inputs;

pub fn run(args: EvalArgs, cfg: &FileConfig) -> Result<i32, CliError> {
    let cal = inputs::load_cal(&args.cal)?;
    let index = inputs::load_index(&args.index)?;
    let (ik, _, _) = inputs::read_emb(&args.ik)?;
    let (ook, _, _) = inputs::read_emb(&args.ook)?;
    let seed = setting(args.seed, cfg, "seed", 0)?;

    let n = args.n_per_class;
    if (ik.len() < n || ook.len() < n) && !args.with_replacement {
        return Err(CliError::input(format!(
            "pool too small for n_per_class={n} (ik={}, ook={}); pass --with-replacement",
            ik.len(),
            ook.len()
        )));
    }

    let report = balanced_eval(&index, &cal, &ik, &ook, n, args.runs, seed)
        .map_err(CliError::compute)?;

    let body = serde_json::to_string_pretty(&report).map_err(CliError::compute)?;
    inputs::write_file(&args.out, &(body + "\n"))?;

    let mut csv = String::from("run,auroc,auprc,tpr_at_5fpr,der,threshold\n");
    for (i, run) in report.runs.iter().enumerate() {
        push_row(&mut csv, &(i + 1).to_string(), run);
    }
    push_row(&mut csv, "mean", &report.mean_over_runs);
    let csv_path = args.out.with_extension("csv");
    inputs::write_file(&csv_path, &csv)?;

    println!(
        "auroc={} auprc={} tpr_at_5fpr={} der={} (runs={}, n_per_class={}) -> {}",
        report.auroc,
        report.auprc,
        report.tpr_at_5fpr,
        report.der,
        args.runs,
        n,
        args.out.display()
    );
    Ok(0)
}

fn push_row(csv: &mut String, label: &str, run: &RunMetrics) {
    writeln!(
        csv,
        "{label},{},{},{},{},{}",
        run.auroc, run.auprc, run.tpr_at_5fpr, run.der, run.threshold
    )
    .expect("writing to a String cannot fail");
}
