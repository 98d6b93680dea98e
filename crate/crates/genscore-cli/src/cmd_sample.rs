//! `sample`: draw Gibbs samples from a model file restricted to a
//! domain file and write them as a CSV matrix.

use std::path::PathBuf;

use clap::Args;
use genscore::domain::DomainSpec;
use genscore::model::ABModel;
use genscore::sampler::{gibbs_sample, InitPoint, SamplerConfig};

use crate::io::{
    matrix_csv, parse_float_list, read_to_string, CliError, DigestBuilder, ManifestWriter,
    Warnings,
};
use crate::EXIT_OK;

#[derive(Args)]
pub struct SampleArgs {
    /// Model description JSON.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Domain description JSON.
    #[arg(long, value_name = "FILE")]
    domain: PathBuf,
    /// Number of retained samples.
    #[arg(short, long)]
    n: usize,
    /// Chain seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Discarded warm-up sweeps per chain.
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    /// Full sweeps between retained samples; defaults to the dimension.
    #[arg(long)]
    thin: Option<usize>,
    /// Independent chains; retained samples are concatenated.
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Starting point as comma-separated coordinates; defaults to an
    /// automatic in-domain search.
    #[arg(long, value_name = "X1,..,XM")]
    init: Option<String>,
    /// Write a column header line.
    #[arg(long)]
    header: bool,
    /// Directory for samples.csv and manifest.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

pub fn run(args: SampleArgs) -> Result<i32, CliError> {
    let model_text = read_to_string(&args.model)?;
    let domain_text = read_to_string(&args.domain)?;
    let model = ABModel::from_json(&model_text)?;
    let domain = DomainSpec::from_json(&domain_text)?;

    let mut cfg = SamplerConfig::default_for(model.dim(), args.seed);
    cfg.burn_in = args.burn_in;
    if let Some(t) = args.thin {
        cfg.thin = t;
    }
    cfg.chains = args.chains;
    if let Some(init) = &args.init {
        cfg.init = InitPoint::Point(parse_float_list(init)?);
    }

    let samples = gibbs_sample(&model, &domain, args.n, &cfg)?;

    let mut digest = DigestBuilder::new("sample");
    digest.file("model", model_text.as_bytes());
    digest.file("domain", domain_text.as_bytes());
    digest
        .param("n", args.n)
        .param("seed", args.seed)
        .param("burn_in", cfg.burn_in)
        .param("thin", cfg.thin)
        .param("chains", cfg.chains)
        .param("init", format!("{:?}", args.init))
        .param("header", args.header);

    let mut manifest =
        ManifestWriter::start("sample", digest.finish(), Some(args.seed), &args.out_dir);
    manifest.emit("samples.csv", &matrix_csv(&samples, args.header))?;
    manifest.finish(&Warnings::default(), None)?;
    Ok(EXIT_OK)
}
