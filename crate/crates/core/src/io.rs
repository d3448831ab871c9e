use std::io::Write;
use std::path::Path;

use crate::error::{PrismError, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PrismError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| PrismError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| PrismError::io(path, e))?;
    tmp.persist(path).map_err(|e| PrismError::io(path, e.error))?;
    Ok(())
}
