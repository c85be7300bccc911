pub mod count;
pub mod features;
pub mod fit;
pub mod report;
pub mod select;
pub mod synth;
pub mod tile;

use std::path::Path;

use mound_core::{Error, Result};

/// Reject missing input files up front so the message names the path
/// and the process exits with the validation code.
pub fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::InvalidArgument(format!(
            "input file not found: {}",
            path.display()
        )));
    }
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    require_file(path)?;
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
