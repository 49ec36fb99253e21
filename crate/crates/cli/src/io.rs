use std::fs;
use std::path::{Path, PathBuf};

use matic_core::event::Trace;
use matic_core::implicature::ConditionalModel;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};

/// Whether a malformed file is a configuration problem or a data problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Config,
    Data,
}

fn malformed(role: Role, msg: String) -> CliError {
    match role {
        Role::Config => CliError::Config(msg),
        Role::Data => CliError::Data(msg),
    }
}

/// A missing input is always a configuration error: the run was pointed at
/// something that is not there.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, role: Role) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| malformed(role, format!("{}: {e}", path.display())))
}

/// A single trace object or an array of them.
pub fn load_traces(path: &Path) -> Result<Vec<Trace>> {
    let v: Value = read_json(path, Role::Data)?;
    let parsed = if v.is_array() {
        serde_json::from_value::<Vec<Trace>>(v)
    } else {
        serde_json::from_value::<Trace>(v).map(|t| vec![t])
    };
    parsed.map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn load_trace(path: &Path) -> Result<Trace> {
    let mut traces = load_traces(path)?;
    if traces.len() != 1 {
        return Err(CliError::data(format!(
            "{}: expected one trace, found {}",
            path.display(),
            traces.len()
        )));
    }
    Ok(traces.remove(0))
}

/// A saved model (an object with `records`) or a corpus to train on.
pub fn load_model(path: &Path, max_context: usize, lambda: f64) -> Result<ConditionalModel> {
    let v: Value = read_json(path, Role::Data)?;
    if v.get("records").is_some() {
        let model: ConditionalModel = serde_json::from_value(v)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        return Ok(model.with_lambda(lambda)?);
    }
    let corpus = load_traces(path)?;
    Ok(ConditionalModel::train(&corpus, max_context, lambda)?)
}

/// Files written by every subcommand.
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(header).map_err(internal)?;
    for row in rows {
        w.write_record(row).map_err(internal)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}
