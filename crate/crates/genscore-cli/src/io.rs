//! Shared command plumbing: error-to-exit-code mapping, CSV matrix
//! parsing, input digests, and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Exit code carrier. 2 is input validation, 3 a numeric warning with
/// outputs written, 64 usage.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<genscore::Error> for CliError {
    fn from(e: genscore::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

/// Warnings split by severity: notes go into the manifest only,
/// numeric warnings also flip the exit code to 3.
#[derive(Default)]
pub struct Warnings {
    pub notes: Vec<String>,
    pub numeric: Vec<String>,
}

impl Warnings {
    pub fn all(&self) -> Vec<String> {
        let mut v = self.notes.clone();
        v.extend(self.numeric.iter().cloned());
        v
    }
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Parse a numeric CSV matrix. A single leading non-numeric line is
/// treated as a header; every other malformed line aborts with its
/// 1-based line number.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                let w = *width.get_or_insert(vals.len());
                if vals.len() != w {
                    return Err(CliError::validation(format!(
                        "{}: line {} has {} fields, expected {w}",
                        path.display(),
                        i + 1,
                        vals.len()
                    )));
                }
                rows.push(vals);
            }
            Err(_) if i == 0 => {} // header line
            Err(_) => {
                return Err(CliError::validation(format!(
                    "{}: line {} is not numeric",
                    path.display(),
                    i + 1
                )));
            }
        }
    }
    let m = width.unwrap_or(0);
    let n = rows.len();
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Full round-trip precision matrix CSV, optional `x1,..,xm` header.
pub fn matrix_csv(data: &DMatrix<f64>, header: bool) -> String {
    let mut s = String::new();
    if header {
        let names: Vec<String> = (1..=data.ncols()).map(|j| format!("x{j}")).collect();
        let _ = writeln!(s, "{}", names.join(","));
    }
    for i in 0..data.nrows() {
        let fields: Vec<String> = (0..data.ncols()).map(|j| data[(i, j)].to_string()).collect();
        let _ = writeln!(s, "{}", fields.join(","));
    }
    s
}

/// Content hash over every input that shapes the outputs: labeled file
/// bytes and resolved parameter strings.
pub struct DigestBuilder {
    hasher: Sha256,
}

impl DigestBuilder {
    pub fn new(command: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update([0]);
        DigestBuilder { hasher }
    }

    pub fn file(&mut self, role: &str, bytes: &[u8]) -> &mut Self {
        self.hasher.update(role.as_bytes());
        self.hasher.update([0]);
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
        self
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.hasher.update(key.as_bytes());
        self.hasher.update([1]);
        let v = value.to_string();
        self.hasher.update((v.len() as u64).to_le_bytes());
        self.hasher.update(v.as_bytes());
        self
    }

    pub fn finish(self) -> String {
        let out = self.hasher.finalize();
        let mut s = String::with_capacity(64);
        for b in out {
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed_cells: Option<Vec<(usize, usize)>>,
}

pub struct ManifestWriter {
    command: String,
    digest: String,
    seed: Option<u64>,
    started_at: String,
    out_dir: PathBuf,
    outputs: Vec<String>,
}

impl ManifestWriter {
    pub fn start(command: &str, digest: String, seed: Option<u64>, out_dir: &Path) -> Self {
        ManifestWriter {
            command: command.to_string(),
            digest,
            seed,
            started_at: chrono::Utc::now().to_rfc3339(),
            out_dir: out_dir.to_path_buf(),
            outputs: Vec::new(),
        }
    }

    /// Write one output file under the out dir and record it.
    pub fn emit(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(
        mut self,
        warnings: &Warnings,
        completed_cells: Option<Vec<(usize, usize)>>,
    ) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command.clone(),
            config_digest: self.digest.clone(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at.clone(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: {
                let mut o = self.outputs.clone();
                o.push("manifest.json".to_string());
                o
            },
            warnings: warnings.all(),
            completed_cells,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        self.outputs.clear();
        self.emit("manifest.json", &text)
    }
}

/// Comma-separated floats.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| CliError::validation(format!("bad number in list: {f:?}")))
        })
        .collect()
}
