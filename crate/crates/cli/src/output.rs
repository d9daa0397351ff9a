//! Artifact collection with atomic writes and the `meta.json` block.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use conelab_core::cone::ConeDescriptor;
use serde::Serialize;
use serde_json::Value;

use crate::{CliError, CliResult};

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    cone: Option<&'a ConeDescriptor>,
    seed: u64,
    options: &'a Value,
    files: Vec<&'a str>,
}

/// Files produced by one run, written together once the command succeeds.
pub struct Artifacts {
    dir: Option<PathBuf>,
    subcommand: &'static str,
    cone: Option<ConeDescriptor>,
    seed: u64,
    options: Value,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(dir: Option<PathBuf>, subcommand: &'static str, cone: Option<ConeDescriptor>, seed: u64, options: Value) -> Self {
        Self { dir, subcommand, cone, seed, options, files: Vec::new() }
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, v: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Validation(e.to_string()))?;
        s.push('\n');
        self.add(name, s.into_bytes());
        Ok(())
    }

    /// Writes every artifact plus `meta.json`; a no-op without an output directory.
    pub fn commit(self) -> CliResult<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let meta = Meta {
            tool: "conelab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            cone: self.cone.as_ref(),
            seed: self.seed,
            options: &self.options,
            files: self.files.iter().map(|(n, _)| n.as_str()).collect(),
        };
        let mut m = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Validation(e.to_string()))?;
        m.push('\n');
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
        }
        write_atomic(&dir.join("meta.json"), m.as_bytes())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| io_error(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_error(&tmp, e))?;
    f.sync_all().map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}
