//! Outputs are written under `<target>.partial` and renamed into place once
//! the whole command succeeds, so a failed run leaves only `.partial` paths.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{PathContext, Result};

#[derive(Debug, Clone)]
pub struct Staged {
    pub target: PathBuf,
    pub partial: PathBuf,
}

pub fn partial_path(target: &Path) -> PathBuf {
    let mut name: OsString = target.as_os_str().to_owned();
    name.push(".partial");
    PathBuf::from(name)
}

fn remove(path: &Path) -> Result<()> {
    if path.is_dir() {
        fs::remove_dir_all(path).at(path)?;
    } else if path.exists() {
        fs::remove_file(path).at(path)?;
    }
    Ok(())
}

impl Staged {
    /// Staging for a single output file.
    pub fn file(target: &Path) -> Result<Self> {
        let partial = partial_path(target);
        remove(&partial)?;
        if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).at(parent)?;
        }
        Ok(Self {
            target: target.to_path_buf(),
            partial,
        })
    }

    /// Staging for an output directory; the partial directory is created empty.
    pub fn dir(target: &Path) -> Result<Self> {
        let s = Self::file(target)?;
        fs::create_dir_all(&s.partial).at(&s.partial)?;
        Ok(s)
    }

    /// Path to write to while the command runs.
    pub fn path(&self) -> &Path {
        &self.partial
    }

    /// Replaces the target with the staged output.
    pub fn commit(self) -> Result<PathBuf> {
        remove(&self.target)?;
        fs::rename(&self.partial, &self.target).at(&self.target)?;
        Ok(self.target)
    }
}
