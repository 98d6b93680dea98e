//! `sweep`: run a support-recovery sweep from a config file, with
//! resume support keyed on the completed cells in the manifest.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use genscore::experiments::{
    aggregate_trials, aggregates_csv, parse_trials_csv, run_sweep, svg_chart, trials_csv,
    ExperimentConfig, TrialRow,
};

use crate::io::{read_to_string, CliError, DigestBuilder, ManifestWriter, RunManifest, Warnings};
use crate::{EXIT_NUMERIC, EXIT_OK};

#[derive(Args)]
pub struct SweepArgs {
    /// Experiment description JSON.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Skip (truth, trial) cells already recorded in the output
    /// directory's manifest and merge the existing rows.
    #[arg(long)]
    resume: bool,
    /// Chart title.
    #[arg(long, default_value = "mean AUC by weight setting")]
    title: String,
    /// Directory for trials.csv, aggregates.csv, chart.svg, and
    /// manifest.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

/// Previously recorded rows and their completed cells, when resuming.
fn prior_state(args: &SweepArgs) -> Result<(Vec<TrialRow>, Vec<(usize, usize)>), CliError> {
    if !args.resume {
        return Ok((Vec::new(), Vec::new()));
    }
    let manifest_path = args.out_dir.join("manifest.json");
    let trials_path = args.out_dir.join("trials.csv");
    if !manifest_path.exists() || !trials_path.exists() {
        return Ok((Vec::new(), Vec::new()));
    }
    let manifest: RunManifest = serde_json::from_str(&read_to_string(&manifest_path)?)?;
    let cells = manifest.completed_cells.unwrap_or_default();
    let keep: BTreeSet<(usize, usize)> = cells.iter().cloned().collect();
    let rows = parse_trials_csv(&read_to_string(&trials_path)?)?
        .into_iter()
        .filter(|r| keep.contains(&(r.k0_index, r.trial)))
        .collect();
    Ok((rows, cells))
}

pub fn run(args: SweepArgs) -> Result<i32, CliError> {
    let config_text = read_to_string(&args.config)?;
    let cfg: ExperimentConfig = serde_json::from_str(&config_text)?;
    cfg.validate()?;

    let (old_rows, skip) = prior_state(&args)?;
    let result = run_sweep(&cfg, &skip)?;

    let mut rows = old_rows;
    rows.extend(result.trials);
    // Rows within one cell come from a single run in setting order, so
    // a stable sort on the cell key restores the full-run layout.
    rows.sort_by_key(|r| (r.k0_index, r.trial));
    let aggregates = aggregate_trials(&cfg, &rows);
    let completed: BTreeSet<(usize, usize)> =
        rows.iter().map(|r| (r.k0_index, r.trial)).collect();

    let mut warnings = Warnings::default();
    for f in &result.failures {
        warnings.numeric.push(format!(
            "truth {} trial {} failed: {}",
            f.k0_index, f.trial, f.message
        ));
    }

    // The resume flag is excluded: merged outputs match a full rerun.
    let mut digest = DigestBuilder::new("sweep");
    digest.file("config", config_text.as_bytes());
    digest.param("title", &args.title);

    let mut manifest =
        ManifestWriter::start("sweep", digest.finish(), Some(cfg.seed), &args.out_dir);
    manifest.emit("trials.csv", &trials_csv(&rows))?;
    manifest.emit("aggregates.csv", &aggregates_csv(&aggregates))?;
    manifest.emit("chart.svg", &svg_chart(&aggregates, &args.title))?;
    manifest.finish(&warnings, Some(completed.into_iter().collect()))?;

    if warnings.numeric.is_empty() {
        Ok(EXIT_OK)
    } else {
        for w in &warnings.numeric {
            eprintln!("warning: {w}");
        }
        Ok(EXIT_NUMERIC)
    }
}
