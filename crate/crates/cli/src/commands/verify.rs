use std::path::PathBuf;

use clap::Args;

use crate::error::{CliError, Result};
use crate::manifest::{find_manifests, verify_manifest};

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// A manifest, or a directory searched recursively for manifests.
    pub path: PathBuf,
}

/// Recomputes every listed digest; fails if any file changed or vanished.
pub fn execute(args: &VerifyArgs) -> Result<()> {
    let mut bad = 0;
    for manifest in find_manifests(&args.path)? {
        let mismatches = verify_manifest(&manifest)?;
        if mismatches.is_empty() {
            println!("ok {}", manifest.display());
        }
        for m in &mismatches {
            println!("MISMATCH {} ({}): {}", m.path.display(), manifest.display(), m.reason);
        }
        bad += mismatches.len();
    }
    if bad > 0 {
        return Err(CliError::Verify(bad));
    }
    Ok(())
}
