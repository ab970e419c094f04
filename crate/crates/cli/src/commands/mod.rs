pub mod analyze;
pub mod oracle;
pub mod profile;
pub mod rb_check;
pub mod replay;
pub mod simulate;

use std::path::{Path, PathBuf};

use rivw_core::Error;

/// Canonical absolute path of an input file; a missing file is an I/O error.
pub(crate) fn input_path(path: &Path) -> anyhow::Result<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| Error::io(path, e).into())
}
