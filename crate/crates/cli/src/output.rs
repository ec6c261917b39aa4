//! Run directories: every invocation writes its outputs and a manifest that
//! records the inputs verbatim, the parameters and the tool version.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kstab::rational::Rational;
use serde::Serialize;
use serde_json::{json, Value};

pub struct Run {
    dir: PathBuf,
    command: &'static str,
    parameters: Value,
    inputs: Vec<Value>,
    outputs: Vec<String>,
    seed: u64,
    threads: usize,
}

impl Run {
    pub fn new(dir: &Path, command: &'static str, parameters: Value, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            parameters,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            threads: rayon::current_num_threads(),
        })
    }

    /// Reads an input file and records its contents in the manifest.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(json!({ "path": path.display().to_string(), "contents": text }));
        Ok(text)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(mut self) -> Result<()> {
        let manifest = json!({
            "tool": "kstab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "threads": self.threads,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.clear();
        Ok(())
    }
}

/// Exact rationals are written as strings `p/q` in machine-readable output.
pub fn q(x: &Rational) -> String {
    x.to_string()
}

pub fn qv(v: &[Rational]) -> Vec<String> {
    v.iter().map(q).collect()
}

/// Shortest round-trip representation of a float, for CSV files.
pub fn f(x: f64) -> String {
    format!("{x:e}")
}
