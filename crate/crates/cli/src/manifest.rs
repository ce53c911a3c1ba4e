//! Run manifests: parameters, input and output digests, duration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use trajdiff_core::seed::fnv1a64;

use crate::error::{CliError, PathContext, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the manifest's directory when possible.
    pub path: String,
    /// 64-bit FNV-1a of the file bytes, 16 hex digits.
    pub fnv1a64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub params: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_s: f64,
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).at(path)?;
    Ok(format!("{:016x}", fnv1a64(&bytes)))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    path.canonicalize().at(path)
}

/// `target` relative to directory `base`, both resolved on disk.
pub fn relative_to(target: &Path, base: &Path) -> Result<PathBuf> {
    let (t, b) = (absolute(target)?, absolute(base)?);
    let tc: Vec<Component> = t.components().collect();
    let bc: Vec<Component> = b.components().collect();
    let common = tc.iter().zip(&bc).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..bc.len() {
        out.push("..");
    }
    for c in &tc[common..] {
        out.push(c);
    }
    Ok(out)
}

/// Every regular file under `path` (or `path` itself), sorted, skipping manifests.
pub fn collect_files(path: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .at(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()
            .at(path)?;
        entries.sort();
        for e in entries {
            if e.is_dir() {
                out.extend(collect_files(&e)?);
            } else if e.file_name().is_some_and(|n| n != MANIFEST_NAME) {
                out.push(e);
            }
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(out)
}

impl RunManifest {
    pub fn new(subcommand: &str, params: BTreeMap<String, String>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            params,
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_s: 0.0,
        }
    }

    fn entries(dir: &Path, files: &[PathBuf]) -> Result<Vec<FileDigest>> {
        files
            .iter()
            .map(|f| {
                Ok(FileDigest {
                    path: relative_to(f, dir)?.to_string_lossy().into_owned(),
                    fnv1a64: digest_file(f)?,
                })
            })
            .collect()
    }

    /// Writes `dir/manifest.json` with digests of `inputs` and `outputs`
    /// (directories are expanded to their files).
    pub fn write(mut self, dir: &Path, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<PathBuf> {
        fs::create_dir_all(dir).at(dir)?;
        let expand = |paths: &[PathBuf]| -> Result<Vec<PathBuf>> {
            let mut all = Vec::new();
            for p in paths {
                all.extend(collect_files(p)?);
            }
            Ok(all)
        };
        self.inputs = Self::entries(dir, &expand(inputs)?)?;
        self.outputs = Self::entries(dir, &expand(outputs)?)?;
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, serde_json::to_string_pretty(&self)?).at(&path)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One file whose digest no longer matches its manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub manifest: PathBuf,
    pub path: PathBuf,
    pub reason: String,
}

/// Recomputes every digest listed in the manifest at `path`.
pub fn verify_manifest(path: &Path) -> Result<Vec<Mismatch>> {
    let m = RunManifest::read(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    for (kind, entry) in m
        .inputs
        .iter()
        .map(|e| ("input", e))
        .chain(m.outputs.iter().map(|e| ("output", e)))
    {
        let file = dir.join(&entry.path);
        let reason = match fs::read(&file) {
            Err(e) => Some(format!("{kind} unreadable: {e}")),
            Ok(bytes) => {
                let got = format!("{:016x}", fnv1a64(&bytes));
                (got != entry.fnv1a64).then(|| format!("{kind} digest {got}, manifest has {}", entry.fnv1a64))
            }
        };
        if let Some(reason) = reason {
            bad.push(Mismatch {
                manifest: path.to_path_buf(),
                path: file,
                reason,
            });
        }
    }
    Ok(bad)
}

/// Manifests at or under `path`.
pub fn find_manifests(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(CliError::domain(format!("{} does not exist", path.display())));
    }
    let mut found = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&d)
            .at(&d)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()
            .at(&d)?;
        entries.sort();
        for e in entries {
            if e.is_dir() {
                stack.push(e);
            } else if e.file_name().is_some_and(|n| n == MANIFEST_NAME) {
                found.push(e);
            }
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(CliError::domain(format!("no {MANIFEST_NAME} under {}", path.display())));
    }
    Ok(found)
}
