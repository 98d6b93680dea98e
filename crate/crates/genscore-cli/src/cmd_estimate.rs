//! `estimate`: fit a penalty path to a data matrix, export the path
//! summary and the edge list at the selected penalty.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use genscore::domain::DomainSpec;
use genscore::estimator::{
    assemble, default_delta, fit, fit_path, fit_profiled, lambda_path, EtaPenalty, FitResult,
};
use genscore::model::ModelShape;
use genscore::weights::WeightSpec;

use crate::io::{read_matrix_csv, read_to_string, CliError, DigestBuilder, ManifestWriter, Warnings};
use crate::{EXIT_NUMERIC, EXIT_OK};

const DELTA_TAU: f64 = 3.0;

#[derive(Args)]
pub struct EstimateArgs {
    /// Data CSV, one observation per row; a leading header line is
    /// allowed and skipped.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Domain description JSON.
    #[arg(long, value_name = "FILE")]
    domain: PathBuf,
    /// Interaction exponent (0 selects the logarithmic statistic).
    #[arg(short, default_value_t = 1.0)]
    a: f64,
    /// Linear exponent (0 selects the logarithmic statistic).
    #[arg(short, default_value_t = 1.0)]
    b: f64,
    /// Drop the linear part of the model.
    #[arg(long)]
    centered: bool,
    /// Weight description JSON; defaults to flat unit weights.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// Fit a single penalty level instead of a path.
    #[arg(long, conflicts_with_all = ["nlambda", "min_ratio"])]
    lambda: Option<f64>,
    /// Number of penalty path points.
    #[arg(long, default_value_t = 50)]
    nlambda: usize,
    /// Ratio of the smallest to the largest path penalty.
    #[arg(long, default_value_t = 1e-3)]
    min_ratio: f64,
    /// Linear-part penalty as a multiple of the interaction penalty.
    #[arg(long, default_value_t = 1.0, conflicts_with = "profile")]
    eta_ratio: f64,
    /// Profile the linear part out exactly instead of penalizing it.
    #[arg(long, conflicts_with = "centered")]
    profile: bool,
    /// Export edges at the sparsest penalty with at least this many
    /// edges; without it the smallest penalty on the path is selected.
    #[arg(long, value_name = "N")]
    nedges: Option<usize>,
    /// Diagonal multiplier: "auto" or a value >= 1.
    #[arg(long, default_value = "auto")]
    delta: String,
    /// Coordinate descent stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Coordinate descent sweep cap.
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Directory for path.csv, edges.csv, and manifest.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn path_csv(fits: &[FitResult], selected: usize) -> String {
    let mut s = String::from(
        "index,lambda_k,lambda_eta,edges,iterations,kkt_residual,converged,selected\n",
    );
    for (i, f) in fits.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{}",
            f.lambda_k,
            f.lambda_eta,
            f.edge_count(),
            f.iterations,
            f.kkt_residual,
            f.converged as u8,
            (i == selected) as u8
        );
    }
    s
}

fn edges_csv(fit: &FitResult) -> String {
    let mut s = String::from("i,j,score\n");
    let m = fit.edge_scores.nrows();
    for i in 0..m {
        for j in (i + 1)..m {
            let score = fit.edge_scores[(i, j)];
            if score > 0.0 {
                let _ = writeln!(s, "{},{},{}", i + 1, j + 1, score);
            }
        }
    }
    s
}

pub fn run(args: EstimateArgs) -> Result<i32, CliError> {
    let data_text = read_to_string(&args.data)?;
    let domain_text = read_to_string(&args.domain)?;
    let weights_text = match &args.weights {
        Some(p) => Some(read_to_string(p)?),
        None => None,
    };

    let data = read_matrix_csv(&args.data)?;
    let domain = DomainSpec::from_json(&domain_text)?;
    let weight = match &weights_text {
        Some(t) => WeightSpec::from_json(t)?,
        None => WeightSpec::power_untruncated(0.0),
    };
    let shape = ModelShape::new(args.a, args.b, args.centered)?;
    if args.nlambda == 0 {
        return Err(CliError::validation("--nlambda must be positive"));
    }
    if let Some(l) = args.lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::validation("--lambda must be finite and >= 0"));
        }
    }

    if data.ncols() != domain.dim {
        return Err(CliError::validation(format!(
            "data has {} columns but the domain has dimension {}",
            data.ncols(),
            domain.dim
        )));
    }
    let violations: Vec<usize> = (0..data.nrows())
        .filter(|&i| {
            let row: Vec<f64> = data.row(i).iter().cloned().collect();
            !domain.contains(&row)
        })
        .map(|i| i + 1)
        .collect();
    if !violations.is_empty() {
        let shown: Vec<String> = violations.iter().take(10).map(|i| i.to_string()).collect();
        let more = if violations.len() > 10 {
            format!(" and {} more", violations.len() - 10)
        } else {
            String::new()
        };
        return Err(CliError::validation(format!(
            "{} of {} data rows lie outside the domain (rows {}{more})",
            violations.len(),
            data.nrows(),
            shown.join(", ")
        )));
    }

    let gg = assemble(shape, &domain, &weight, &data)?;
    let delta = if args.delta == "auto" {
        default_delta(shape, &domain, data.nrows(), DELTA_TAU)
    } else {
        args.delta
            .parse::<f64>()
            .map_err(|_| CliError::validation(format!("--delta must be \"auto\" or a number, got {:?}", args.delta)))?
    };

    let eta = if args.profile { EtaPenalty::Profile } else { EtaPenalty::Ratio(args.eta_ratio) };
    let path: Vec<(f64, f64)> = match args.lambda {
        Some(l) => vec![(l, if args.profile { 0.0 } else { l * args.eta_ratio })],
        None => lambda_path(&gg, delta, eta, args.nlambda, args.min_ratio)?,
    };

    let fits: Vec<FitResult> = if args.profile {
        let mut out: Vec<FitResult> = Vec::with_capacity(path.len());
        for &(lk, _) in &path {
            let f = fit_profiled(&gg, delta, lk, out.last(), args.tol, args.max_iter)?;
            out.push(f);
        }
        out
    } else if args.lambda.is_some() {
        let (lk, le) = path[0];
        vec![fit(&gg, delta, lk, le, None, args.tol, args.max_iter)?]
    } else {
        fit_path(&gg, delta, &path, args.tol, args.max_iter)?
    };

    let mut warnings = Warnings::default();
    for (i, f) in fits.iter().enumerate() {
        if !f.converged {
            warnings.numeric.push(format!(
                "solver did not converge within {} sweeps at path index {i} (lambda_k = {})",
                args.max_iter, f.lambda_k
            ));
        }
    }

    // The path is descending, so the first index meeting the target is
    // the largest qualifying penalty.
    let selected = match args.nedges {
        Some(target) => match fits.iter().position(|f| f.edge_count() >= target) {
            Some(i) => i,
            None => {
                warnings.numeric.push(format!(
                    "no path point reaches {target} edges; selected the densest fit ({} edges)",
                    fits.last().map(|f| f.edge_count()).unwrap_or(0)
                ));
                fits.len() - 1
            }
        },
        None => fits.len() - 1,
    };

    let mut digest = DigestBuilder::new("estimate");
    digest.file("data", data_text.as_bytes());
    digest.file("domain", domain_text.as_bytes());
    if let Some(t) = &weights_text {
        digest.file("weights", t.as_bytes());
    }
    digest
        .param("a", args.a)
        .param("b", args.b)
        .param("centered", args.centered)
        .param("lambda", format!("{:?}", args.lambda))
        .param("nlambda", args.nlambda)
        .param("min_ratio", args.min_ratio)
        .param("eta_ratio", args.eta_ratio)
        .param("profile", args.profile)
        .param("nedges", format!("{:?}", args.nedges))
        .param("delta", &args.delta)
        .param("tol", args.tol)
        .param("max_iter", args.max_iter);

    let mut manifest = ManifestWriter::start("estimate", digest.finish(), None, &args.out_dir);
    manifest.emit("path.csv", &path_csv(&fits, selected))?;
    manifest.emit("edges.csv", &edges_csv(&fits[selected]))?;
    manifest.finish(&warnings, None)?;

    if warnings.numeric.is_empty() {
        Ok(EXIT_OK)
    } else {
        for w in &warnings.numeric {
            eprintln!("warning: {w}");
        }
        Ok(EXIT_NUMERIC)
    }
}
