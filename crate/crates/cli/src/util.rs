//! Small filesystem helpers shared by the commands.

use std::fs;
use std::io;
use std::path::Path;

/// Writes through a temp file in the same directory and renames into
/// place, so a crash never leaves a half-written output.
pub fn atomic_write(path: &Path, content: &str) -> io::Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
