//! `domain`: inspect a domain file at probe points (sections, truncated
//! distances, boundary distance) or export a planar membership grid.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use genscore::domain::DomainSpec;
use genscore::interval::IntervalUnion;
use serde::Serialize;

use crate::io::{parse_float_list, read_to_string, CliError, DigestBuilder, ManifestWriter, Warnings};
use crate::EXIT_OK;

#[derive(Args)]
pub struct DomainArgs {
    /// Domain description JSON.
    #[arg(long, value_name = "FILE")]
    domain: PathBuf,
    /// Probe point as comma-separated coordinates; prints a JSON report.
    #[arg(long, value_name = "X1,..,XM", required_unless_present = "grid")]
    probe: Option<String>,
    /// Truncation constant for the reported distances.
    #[arg(long, default_value_t = f64::INFINITY)]
    c: f64,
    /// Planar grid export "lo,hi,steps" (two-dimensional domains only);
    /// writes grid.csv under --out-dir.
    #[arg(long, value_name = "LO,HI,STEPS", conflicts_with = "probe", requires = "out_dir")]
    grid: Option<String>,
    /// Directory for grid.csv and manifest.json (grid mode only).
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

/// JSON has no literal infinity; report infinite values as "inf".
mod ext_json {
    use serde::Serializer;

    pub fn ser<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn ser_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => ser(x, s),
            None => s.serialize_none(),
        }
    }
}

#[derive(Serialize)]
struct CoordReport {
    section: IntervalUnion,
    #[serde(serialize_with = "ext_json::ser_opt")]
    phi: Option<f64>,
    branch: Option<i8>,
}

#[derive(Serialize)]
struct ProbeReport {
    point: Vec<f64>,
    contains: bool,
    #[serde(serialize_with = "ext_json::ser")]
    truncation: f64,
    coords: Vec<CoordReport>,
    #[serde(serialize_with = "ext_json::ser_opt", skip_serializing_if = "Option::is_none")]
    g0_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g0_grad: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

fn probe_report(domain: &DomainSpec, x: &[f64], c: f64) -> Result<ProbeReport, CliError> {
    if x.len() != domain.dim {
        return Err(CliError::validation(format!(
            "probe point has {} coordinates but the domain has dimension {}",
            x.len(),
            domain.dim
        )));
    }
    let contains = domain.contains(x);
    let cvec = vec![c; domain.dim];
    let mut notes = Vec::new();
    if !contains {
        notes.push("point lies outside the domain; distances are undefined".to_string());
    }
    let mut coords = Vec::with_capacity(domain.dim);
    for j in 0..domain.dim {
        let section = domain.section(x, j)?;
        let (phi, branch) = if contains {
            let d = domain.phi(&cvec, x)?[j];
            let s = domain.phi_deriv_sign(&cvec, x, j)?;
            (Some(d), Some(s))
        } else {
            (None, None)
        };
        coords.push(CoordReport { section, phi, branch });
    }
    let (g0_distance, g0_grad) = if contains {
        match (domain.g0_distance(c, x), domain.g0_grad(c, x)) {
            (Ok(d), Ok(g)) => (Some(d), Some(g)),
            (Err(e), _) | (_, Err(e)) => {
                notes.push(format!("boundary distance unavailable: {e}"));
                (None, None)
            }
        }
    } else {
        (None, None)
    };
    Ok(ProbeReport { point: x.to_vec(), contains, truncation: c, coords, g0_distance, g0_grad, notes })
}

fn grid_csv(domain: &DomainSpec, lo: f64, hi: f64, steps: usize, c: f64) -> Result<String, CliError> {
    if domain.dim != 2 {
        return Err(CliError::validation(format!(
            "grid export needs a two-dimensional domain, got dimension {}",
            domain.dim
        )));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::validation("grid bounds must be finite with lo < hi"));
    }
    if steps < 2 {
        return Err(CliError::validation("grid needs at least 2 steps"));
    }
    let cvec = [c, c];
    let mut s = String::from("x1,x2,inside,phi1,phi2\n");
    for i in 0..steps {
        let x1 = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
        for j in 0..steps {
            let x2 = lo + (hi - lo) * j as f64 / (steps - 1) as f64;
            let x = [x1, x2];
            if domain.contains(&x) {
                let phi = domain.phi(&cvec, &x).map_err(CliError::from)?;
                let _ = writeln!(s, "{x1},{x2},1,{},{}", phi[0], phi[1]);
            } else {
                let _ = writeln!(s, "{x1},{x2},0,,");
            }
        }
    }
    Ok(s)
}

pub fn run(args: DomainArgs) -> Result<i32, CliError> {
    let domain_text = read_to_string(&args.domain)?;
    let domain = DomainSpec::from_json(&domain_text)?;
    if !(args.c > 0.0) {
        return Err(CliError::validation("truncation constant must be positive"));
    }

    if let Some(probe) = &args.probe {
        let x = parse_float_list(probe)?;
        let report = probe_report(&domain, &x, args.c)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(EXIT_OK);
    }

    let grid = args.grid.as_deref().expect("clap enforces probe or grid");
    let parts = parse_float_list(grid)?;
    if parts.len() != 3 {
        return Err(CliError::validation("grid spec must be lo,hi,steps"));
    }
    let steps = parts[2] as usize;
    if parts[2].fract() != 0.0 {
        return Err(CliError::validation("grid step count must be an integer"));
    }
    let out_dir = args
        .out_dir
        .as_ref()
        .ok_or_else(|| CliError::validation("--out-dir is required with --grid"))?;
    let csv = grid_csv(&domain, parts[0], parts[1], steps, args.c)?;

    let mut digest = DigestBuilder::new("domain");
    digest.file("domain", domain_text.as_bytes());
    digest.param("grid", grid).param("c", args.c);

    let mut manifest = ManifestWriter::start("domain", digest.finish(), None, out_dir);
    manifest.emit("grid.csv", &csv)?;
    manifest.finish(&Warnings::default(), None)?;
    Ok(EXIT_OK)
}
