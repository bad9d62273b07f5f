//! Atomic artifact writes: data goes to a sibling temporary file that is
//! renamed into place, so readers never see a partial file.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::PipelineError;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let fail = |e: std::io::Error| PipelineError::Other(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(fail)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(fail)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Other(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
