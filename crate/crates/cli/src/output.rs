use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

pub const DEFAULT_OUT: &str = "flatsaddle-out";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command. Contains no timestamps, so a
/// replay reproduces every output byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub potential: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub eps: Vec<f64>,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub seed: u64,
    /// Arguments after the program name, without `--out`.
    pub args: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| usage(format!("bad manifest {}: {e}", path.display())))
    }
}

/// Files produced by one command, written together with the manifest.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: Option<&Path>) -> Self {
        Self {
            dir: dir.map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.add(name, s);
        Ok(())
    }

    pub fn add_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.add(name, String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(())
    }

    /// Write every file and the manifest; echo the first file to stdout.
    pub fn finish(self, mut manifest: RunManifest) -> CliResult<()> {
        fs::create_dir_all(&self.dir)?;
        manifest.outputs = self.files.iter().map(|(n, _)| n.clone()).collect();
        for (name, contents) in &self.files {
            fs::write(self.dir.join(name), contents)?;
        }
        let mut m = serde_json::to_string_pretty(&manifest)?;
        m.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), m)?;
        if let Some((_, first)) = self.files.first() {
            print!("{first}");
        }
        Ok(())
    }
}
