use std::fmt::Write as _;
use std::path::Path;

use ookgate::calibration::critical_value;

use crate::args::ReportArgs;
use crate::config::{setting, FileConfig};
use crate::error::CliError;
use crate::inputs;

use super::DEFAULT_ALPHA;

pub fn run(args: ReportArgs, cfg: &FileConfig) -> Result<i32, CliError> {
    let cal = inputs::load_cal(&args.cal)?;
    let alpha = setting(args.alpha, cfg, "alpha", DEFAULT_ALPHA)?;
    if args.bins == 0 {
        return Err(CliError::compute("--bins must be at least 1"));
    }

    let mut sources: Vec<(String, Vec<f64>)> = Vec::with_capacity(args.scores.len());
    for (i, path) in args.scores.iter().enumerate() {
        let mut name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scores")
            .to_string();
        if sources.iter().any(|(n, _)| *n == name) {
            name = format!("{name}_{i}");
        }
        sources.push((name, read_scores(path)?));
    }

    let cv = critical_value(&cal, alpha).map_err(CliError::compute)?;

    let lo = fold_scores(&sources, f64::INFINITY, f64::min);
    let hi = fold_scores(&sources, f64::NEG_INFINITY, f64::max);
    // a single distinct value still needs a nonempty range to bin over
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / args.bins as f64;

    let mut hist = String::from("source,bin,lo,hi,count\n");
    for (name, scores) in &sources {
        let mut counts = vec![0usize; args.bins];
        for &x in scores {
            let idx = (((x - lo) / width) as usize).min(args.bins - 1);
            counts[idx] += 1;
        }
        for (b, count) in counts.iter().enumerate() {
            let edge_lo = lo + b as f64 * width;
            let edge_hi = lo + (b + 1) as f64 * width;
            writeln!(hist, "{name},{b},{edge_lo},{edge_hi},{count}")
                .expect("writing to a String cannot fail");
        }
    }
    writeln!(hist, "critical_value,-1,{cv},{cv},0").expect("writing to a String cannot fail");

    std::fs::create_dir_all(&args.out_dir).map_err(|err| {
        CliError::input(format!("cannot create {}: {err}", args.out_dir.display()))
    })?;
    let hist_path = args.out_dir.join("hist.csv");
    inputs::write_file(&hist_path, &hist)?;

    let mut summary = format!(
        "wrote {} ({} sources x {} bins, critical value {cv} at alpha={alpha})",
        hist_path.display(),
        sources.len(),
        args.bins
    );

    // a ROC curve needs exactly one in-knowledge and one out-of-knowledge
    // score set; the first source is taken as in-knowledge
    if let [(_, ik), (_, ook)] = &sources[..] {
        let roc = roc_points(ik, ook);
        let roc_path = args.out_dir.join("roc.csv");
        inputs::write_file(&roc_path, &roc)?;
        write!(summary, "; wrote {}", roc_path.display())
            .expect("writing to a String cannot fail");
    }

    println!("{summary}");
    Ok(0)
}

fn fold_scores(sources: &[(String, Vec<f64>)], init: f64, f: fn(f64, f64) -> f64) -> f64 {
    sources
        .iter()
        .flat_map(|(_, scores)| scores.iter().copied())
        .fold(init, f)
}

/// Reads one score per nonempty line: either a bare number or a JSON
/// object with a numeric `statistic` field, as the gate command emits.
fn read_scores(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| CliError::input(format!("cannot read {}: {err}", path.display())))?;
    let mut scores = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value = match line.parse::<f64>() {
            Ok(v) => v,
            Err(_) => serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("statistic").and_then(serde_json::Value::as_f64))
                .ok_or_else(|| {
                    CliError::input(format!(
                        "{}:{}: expected a number or a JSON object with a \
                         numeric statistic field",
                        path.display(),
                        lineno + 1
                    ))
                })?,
        };
        if !value.is_finite() {
            return Err(CliError::input(format!(
                "{}:{}: non-finite score {value}",
                path.display(),
                lineno + 1
            )));
        }
        scores.push(value);
    }
    if scores.is_empty() {
        return Err(CliError::input(format!(
            "no scores in {}",
            path.display()
        )));
    }
    Ok(scores)
}

/// One ROC point per distinct threshold, descending; scores at or above
/// the threshold count as flagged. The final row is always (1, 1).
fn roc_points(ik: &[f64], ook: &[f64]) -> String {
    let mut ik_sorted = ik.to_vec();
    let mut ook_sorted = ook.to_vec();
    ik_sorted.sort_unstable_by(f64::total_cmp);
    ook_sorted.sort_unstable_by(f64::total_cmp);

    let mut thresholds: Vec<f64> = ik_sorted.iter().chain(&ook_sorted).copied().collect();
    thresholds.sort_unstable_by(|a, b| f64::total_cmp(b, a));
    thresholds.dedup();

    let frac_at_or_above = |sorted: &[f64], t: f64| {
        let below = sorted.partition_point(|&x| x < t);
        (sorted.len() - below) as f64 / sorted.len() as f64
    };

    let mut out = String::from("threshold,fpr,tpr\n");
    for t in thresholds {
        let fpr = frac_at_or_above(&ik_sorted, t);
        let tpr = frac_at_or_above(&ook_sorted, t);
        writeln!(out, "{t},{fpr},{tpr}").expect("writing to a String cannot fail");
    }
    out
}
