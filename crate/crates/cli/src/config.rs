//! Config files, output directories and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use commitgym::sha256_hex;

pub const CONFIG_VERSION: u64 = 1;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config; exit code 1.
    Usage(String),
    /// Failure while running; exit code 2.
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Common {
    /// JSON config file; command-line flags override its fields
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Directory for outputs and the run manifest [default: out]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Format of tabular outputs [default: json]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Common {
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

fn is_unset(v: &Value) -> bool {
    matches!(v, Value::Null | Value::Bool(false))
}

/// Overlays the flags that were given on top of the config file, if any.
/// Returns the merged arguments and the config that reproduces them.
pub fn resolve<T>(command: &str, flags: &T, config: Option<&Path>) -> CliResult<(T, Value)>
where
    T: Serialize + DeserializeOwned + Default,
{
    let known = match serde_json::to_value(T::default()).expect("arguments serialize") {
        Value::Object(m) => m,
        _ => unreachable!("arguments are structs"),
    };
    let mut merged = Map::new();
    if let Some(path) = config {
        let text =
            fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| usage(format!("{}: invalid JSON: {e}", path.display())))?;
        let Value::Object(mut file) = value else {
            return Err(usage(format!(
                "{}: config must be a JSON object",
                path.display()
            )));
        };
        match file.remove("version") {
            None => {}
            Some(v) if v.as_u64() == Some(CONFIG_VERSION) => {}
            Some(v) => return Err(usage(format!("unsupported config version {v}"))),
        }
        match file.remove("command") {
            None => {}
            Some(Value::String(c)) if c == command => {}
            Some(c) => return Err(usage(format!("config is for command {c}, not {command:?}"))),
        }
        for (k, v) in file {
            if !known.contains_key(&k) {
                return Err(usage(format!("unknown config field {k:?} for {command}")));
            }
            merged.insert(k, v);
        }
    }
    if let Value::Object(given) = serde_json::to_value(flags).expect("arguments serialize") {
        for (k, v) in given {
            if !is_unset(&v) {
                merged.insert(k, v);
            }
        }
    }
    let resolved: T = serde_json::from_value(Value::Object(merged))
        .map_err(|e| usage(format!("invalid configuration: {e}")))?;
    let mut reproducible = Map::new();
    reproducible.insert("version".into(), CONFIG_VERSION.into());
    reproducible.insert("command".into(), command.into());
    if let Value::Object(fields) = serde_json::to_value(&resolved).expect("arguments serialize") {
        reproducible.extend(fields.into_iter().filter(|(_, v)| !v.is_null()));
    }
    Ok((resolved, Value::Object(reproducible)))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

/// Output directory of one invocation; `finish` writes `manifest.json`.
pub struct Run {
    dir: PathBuf,
    command: String,
    config: Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    pub fn new(command: &str, config: Value, dir: PathBuf) -> CliResult<Run> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run {
            dir,
            command: command.into(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn read_input(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()).into())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(name, bytes);
        Ok(path)
    }

    /// Registers a file that something else wrote under the run directory.
    pub fn record(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.push(FileDigest {
            path: name.into(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn record_digest(&mut self, name: &str, sha256: &str) {
        self.outputs.push(FileDigest {
            path: name.into(),
            sha256: sha256.into(),
        });
    }

    pub fn finish(self) -> CliResult<()> {
        let manifest = Manifest {
            tool: "commitgym",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: &self.config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn json_lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize");
    text.push('\n');
    text
}
