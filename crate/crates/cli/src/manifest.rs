//! Run manifest: effective settings plus digests of every input and output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Settings;
use crate::Failure;

pub const DATA_DIR_ENV: &str = "CONCEPTFORGE_DATA_DIR";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub role: &'static str,
    /// `None` for standard output.
    pub path: Option<String>,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Settings,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: Value,
}

/// Reads inputs and writes outputs for one command, recording digests.
pub struct Run {
    command: &'static str,
    pub settings: Settings,
    data_dir: Option<PathBuf>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    manifest_path: Option<PathBuf>,
}

impl Run {
    pub fn new(command: &'static str, settings: Settings) -> Self {
        Self {
            command,
            settings,
            data_dir: std::env::var_os(DATA_DIR_ENV).map(PathBuf::from),
            inputs: Vec::new(),
            outputs: Vec::new(),
            manifest_path: None,
        }
    }

    /// Relative input paths resolve against the data directory when set.
    pub fn input_path(&self, path: &Path) -> PathBuf {
        match &self.data_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn read(&mut self, role: &'static str, path: &Path) -> Result<String, Failure> {
        let resolved = self.input_path(path);
        let text = std::fs::read_to_string(&resolved)
            .map_err(|e| Failure::Runtime(anyhow::anyhow!("reading {}: {e}", resolved.display())))?;
        self.inputs.push(FileDigest {
            role,
            path: Some(resolved.display().to_string()),
            sha256: conceptforge::sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    /// Writes to `out`, or standard output without one. The first file
    /// output decides where the manifest goes.
    pub fn write(&mut self, role: &'static str, out: Option<&Path>, content: &str) -> Result<(), Failure> {
        let sha256 = conceptforge::sha256_hex(content.as_bytes());
        match out {
            Some(path) => {
                std::fs::write(path, content)
                    .map_err(|e| Failure::Runtime(anyhow::anyhow!("writing {}: {e}", path.display())))?;
                if self.manifest_path.is_none() {
                    let mut name = path.as_os_str().to_owned();
                    name.push(".manifest.json");
                    self.manifest_path = Some(PathBuf::from(name));
                }
                self.outputs.push(FileDigest {
                    role,
                    path: Some(path.display().to_string()),
                    sha256,
                });
            }
            None => {
                use std::io::Write;
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(content.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| Failure::Runtime(anyhow::anyhow!("writing standard output: {e}")))?;
                self.outputs.push(FileDigest {
                    role,
                    path: None,
                    sha256,
                });
            }
        }
        Ok(())
    }

    /// Writes the manifest next to the first file output, else to stderr.
    pub fn finish(self, summary: Value) -> Result<(), Failure> {
        let path = self.manifest_path.clone();
        let manifest = Manifest {
            tool: "conceptforge",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: self.settings,
            inputs: self.inputs,
            outputs: self.outputs,
            summary,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        match path {
            Some(p) => std::fs::write(&p, text)
                .map_err(|e| Failure::Runtime(anyhow::anyhow!("writing {}: {e}", p.display()))),
            None => {
                eprint!("{text}");
                Ok(())
            }
        }
    }
}
