//! Input digests and manifest assembly.

use std::path::Path;

use sha2::{Digest, Sha256};
use spikesim_core::report::RunManifest;

use crate::CliError;

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

pub fn new_manifest(command: &str) -> RunManifest {
    RunManifest::new(command, crate::TOOL_VERSION)
}

pub fn add_input(
    manifest: &mut RunManifest,
    role: &'static str,
    path: &Path,
) -> Result<(), CliError> {
    manifest.input(role, &path.display().to_string(), sha256_file(path)?);
    Ok(())
}
