use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use polar_coded::sim::{RuntimeModel, RuntimeModelConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Where a command's data file goes.
#[derive(Debug, Clone)]
pub struct Sink(pub Option<PathBuf>);

impl Sink {
    pub fn write(&self, bytes: &[u8]) -> CliResult<()> {
        match &self.0 {
            Some(p) => fs::write(p, bytes)?,
            None => io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }
}

/// Runtime model plus a JSON value identifying it, for the config hash.
pub struct LoadedModel {
    pub model: RuntimeModel,
    pub identity: Value,
}

/// Reads the `--config` runtime model, or the default shifted exponential.
pub fn load_model(path: Option<&Path>) -> CliResult<LoadedModel> {
    let Some(path) = path else {
        let cfg = RuntimeModelConfig::default();
        return Ok(LoadedModel {
            model: cfg.resolve(None)?,
            identity: serde_json::to_value(&cfg).map_err(polar_coded::Error::from)?,
        });
    };
    let text = fs::read_to_string(path)?;
    let cfg: RuntimeModelConfig = serde_json::from_str(&text).map_err(polar_coded::Error::from)?;
    let base = path.parent();
    let model = cfg.resolve(base)?;
    let mut identity = serde_json::to_value(&cfg).map_err(polar_coded::Error::from)?;
    if let Some(file) = &cfg.samples_file {
        let full = match base {
            Some(dir) if file.is_relative() => dir.join(file),
            _ => file.clone(),
        };
        identity["samples_sha256"] = Value::String(sha256_hex(&fs::read(full)?));
    }
    Ok(LoadedModel { model, identity })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First 16 hex digits of the SHA-256 of the command, its arguments and the
/// runtime model.
pub fn config_hash<A: Serialize>(command: &str, args: &A, model: &Value) -> String {
    let doc = json!({ "command": command, "args": args, "model": model });
    sha256_hex(doc.to_string().as_bytes())[..16].to_string()
}

pub fn stamp(seed: u64, hash: &str) -> String {
    format!("# seed={seed} config_hash={hash}\n")
}

pub fn require_seed(seed: Option<u64>, command: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Usage(format!("{command} is stochastic and needs --seed")))
}

/// Parses a `# seed=.. config_hash=..` header line.
pub fn parse_stamp(line: &str) -> Option<(u64, String)> {
    let rest = line.strip_prefix("# seed=")?;
    let (seed, hash) = rest.split_once(" config_hash=")?;
    Some((seed.trim().parse().ok()?, hash.trim().to_string()))
}

/// A numeric CSV with a header row. Comment lines start with `#`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub comments: Vec<String>,
}

impl Table {
    pub fn parse(text: &str) -> CliResult<Table> {
        let mut comments = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            match &columns {
                None => columns = Some(fields),
                Some(cols) if cols.len() != fields.len() => {
                    return Err(CliError::Usage(format!(
                        "row {line:?} has {} fields, header has {}",
                        fields.len(),
                        cols.len()
                    )))
                }
                Some(_) => rows.push(fields),
            }
        }
        let columns = columns.ok_or_else(|| CliError::Usage("table has no header".into()))?;
        Ok(Table { columns, rows, comments })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column `name` parsed as floats (`inf` and `NaN` included).
    pub fn floats(&self, name: &str) -> CliResult<Vec<f64>> {
        let i = self
            .column(name)
            .ok_or_else(|| CliError::Usage(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad number {:?} in column {name}", r[i])))
            })
            .collect()
    }
}

/// What `encode` writes next to the coded blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeManifest {
    pub construction: polar_coded::CodeConstruction,
    pub rows: usize,
    pub cols: usize,
    /// Block file of each worker, by worker index.
    pub blocks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matmul2dReport {
    pub seed: u64,
    pub config_hash: String,
    pub n1: usize,
    pub n2: usize,
    pub decodable_time: f64,
    pub cells_used: usize,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub kernel: [f64; 4],
    pub polarizing: bool,
    pub witness: bool,
    pub trials: usize,
    pub seed: u64,
    pub config_hash: String,
    pub additions: Option<usize>,
    pub multiplications: Option<usize>,
}
