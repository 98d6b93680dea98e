//! `univariate`: tabulate asymptotic variances of the one-dimensional
//! location and scale estimators over a weight grid.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use genscore::interval::IntervalUnion;
use genscore::univariate::{domain_d1, domain_d2, domain_d3, variance_curve, UniSpec};
use serde::Deserialize;

use crate::io::{read_to_string, CliError, DigestBuilder, ManifestWriter, Warnings};
use crate::EXIT_OK;

#[derive(Args)]
pub struct UnivariateArgs {
    /// Curve description JSON: domain, mu0, sigma0_sq, alphas, pis.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Directory for curve.csv and manifest.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

/// Domain field: one of the named study domains or an explicit
/// interval union.
#[derive(Deserialize)]
#[serde(untagged)]
enum DomainChoice {
    Named(String),
    Explicit(IntervalUnion),
}

impl DomainChoice {
    fn resolve(self) -> Result<IntervalUnion, CliError> {
        match self {
            DomainChoice::Named(name) => match name.as_str() {
                "d1" => Ok(domain_d1()),
                "d2" => Ok(domain_d2()),
                "d3" => Ok(domain_d3()),
                "real" => Ok(IntervalUnion::all()),
                other => Err(CliError::validation(format!(
                    "unknown domain name {other:?}; expected d1, d2, d3, real, or an interval union"
                ))),
            },
            DomainChoice::Explicit(u) => Ok(u),
        }
    }
}

#[derive(Deserialize)]
struct CurveConfig {
    domain: DomainChoice,
    mu0: f64,
    sigma0_sq: f64,
    alphas: Vec<f64>,
    pis: Vec<f64>,
}

pub fn run(args: UnivariateArgs) -> Result<i32, CliError> {
    let config_text = read_to_string(&args.config)?;
    let cfg: CurveConfig = serde_json::from_str(&config_text)?;
    let base = UniSpec {
        domain: cfg.domain.resolve()?,
        mu0: cfg.mu0,
        sigma0_sq: cfg.sigma0_sq,
        alpha: 0.0,
        c: None,
        pi: None,
    };
    let rows = variance_curve(&base, &cfg.alphas, &cfg.pis)?;

    let mut csv = String::from("alpha,pi,C,log_var_mu,log_var_sigma_sq\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.alpha, r.pi, r.c, r.log_var_mu, r.log_var_sigma_sq
        );
    }

    let mut digest = DigestBuilder::new("univariate");
    digest.file("config", config_text.as_bytes());

    let mut manifest = ManifestWriter::start("univariate", digest.finish(), None, &args.out_dir);
    manifest.emit("curve.csv", &csv)?;
    manifest.finish(&Warnings::default(), None)?;
    Ok(EXIT_OK)
}
