use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use lbb::dataset::DATASET_FORMAT_VERSION;
use lbb::neuralnet::MODEL_FORMAT_VERSION;
use lbb::scene::SCENE_SCHEMA_VERSION;
use lbb::TOOL_VERSION;

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub threads: usize,
    pub tool_version: String,
    pub dataset_format_version: u32,
    pub model_format_version: u32,
    pub scene_schema_version: u32,
    pub duration_seconds: f64,
    /// Measurements that vary between runs (timings) or summarize outputs.
    #[serde(default)]
    pub results: serde_json::Value,
    /// First output registered; the manifest is written next to it.
    #[serde(skip)]
    pub primary: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, argv: Vec<String>, threads: usize) -> Self {
        RunManifest {
            command: command.to_string(),
            argv,
            config: serde_json::Value::Null,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            threads,
            tool_version: TOOL_VERSION.to_string(),
            dataset_format_version: DATASET_FORMAT_VERSION,
            model_format_version: MODEL_FORMAT_VERSION,
            scene_schema_version: SCENE_SCHEMA_VERSION,
            duration_seconds: 0.0,
            results: serde_json::Value::Null,
            primary: None,
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.to_string(), path.to_path_buf());
        self.primary.get_or_insert_with(|| path.to_path_buf());
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// `out.ext` → `out.ext.manifest.json`.
pub fn default_path(primary_output: &Path) -> PathBuf {
    let mut s = primary_output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
