//! Per-invocation output directory. Nothing is ever overwritten: a name
//! already taken gets a numeric suffix, and files are created exclusively.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Resolved;
use crate::error::CliError;

pub struct RunDir {
    path: PathBuf,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: &'a [String],
    resolved: BTreeMap<&'a str, &'a str>,
    seed: u64,
    threads: usize,
    created_unix: u64,
    outputs: &'a [String],
}

fn config_hash(resolved: &Resolved) -> String {
    let digest = Sha256::digest(resolved.canonical_text().as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

impl RunDir {
    pub fn create(base: &Path, label: Option<&str>, resolved: &Resolved) -> Result<Self, CliError> {
        let stem = match label {
            Some(l) if l.is_empty() || l.contains(['/', '\\']) || l == "." || l == ".." => {
                return Err(CliError::Usage(format!(
                    "--label must be a plain directory name (got {l:?})"
                )));
            }
            Some(l) => l.to_string(),
            None => format!("{}-{}", resolved.command, config_hash(resolved)),
        };
        fs::create_dir_all(base).map_err(|e| CliError::io(base, e))?;
        for n in 1.. {
            let name = if n == 1 {
                stem.clone()
            } else {
                format!("{stem}-{n}")
            };
            let path = base.join(name);
            match fs::create_dir(&path) {
                Ok(()) => {
                    return Ok(RunDir {
                        path,
                        outputs: Vec::new(),
                    })
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(CliError::io(path, e)),
            }
        }
        unreachable!("the suffix search is unbounded")
    }

    #[cfg(test)]
    pub fn path(&self) -> &Path {
        &self.path
    }

    fn create_file(&self, name: &str) -> Result<(PathBuf, File), CliError> {
        let path = self.path.join(name);
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| CliError::io(&path, e))?;
        Ok((path, file))
    }

    /// Writes one output file and prints its one-line summary.
    pub fn write(
        &mut self,
        name: &str,
        summary: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let (path, file) = self.create_file(name)?;
        let mut out = BufWriter::new(file);
        body(&mut out)
            .and_then(|()| out.flush())
            .map_err(|e| CliError::io(&path, e))?;
        println!("{}: {summary}", path.display());
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes the sidecar manifest: the only file carrying a timestamp.
    pub fn finish(
        self,
        resolved: &Resolved,
        argv: &[String],
        threads: usize,
    ) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: resolved.command,
            argv,
            resolved: resolved
                .doc
                .keys()
                .map(|k| (k, resolved.doc.get(k).unwrap_or_default()))
                .collect(),
            seed: resolved.u64("seed")?.unwrap_or(0),
            threads,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            outputs: &self.outputs,
        };
        let (path, file) = self.create_file("manifest.json")?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, &manifest)
            .map_err(std::io::Error::from)
            .and_then(|()| writeln!(out))
            .and_then(|()| out.flush())
            .map_err(|e| CliError::io(&path, e))?;
        Ok(self.path)
    }
}
