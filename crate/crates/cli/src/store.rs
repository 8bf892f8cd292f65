//! Loading and persisting registry documents on disk.
//!
//! Writes go through a temp-file-then-rename sequence so a crash mid-write
//! never leaves a half-written registry behind: readers see either the old
//! document or the new one.

use std::io::Write;
use std::path::Path;

use anyhow::Context;

use piqos_core::{load_registry, save_registry, LoadMode, RegistrySnapshot};

/// Reads and strictly validates the registry document at `path`.
pub fn load_snapshot(path: &Path) -> anyhow::Result<RegistrySnapshot> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read registry {}", path.display()))?;
    load_registry(&text, LoadMode::Strict)
        .with_context(|| format!("invalid registry {}", path.display()))
}

/// Renders the canonical document for `snapshot` and writes it atomically.
pub fn save_snapshot(path: &Path, snapshot: &RegistrySnapshot) -> anyhow::Result<()> {
    write_atomic(path, &save_registry(snapshot))
        .with_context(|| format!("cannot write registry {}", path.display()))
}

/// Writes `contents` to `path` via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    write_atomic_with_hook(path, contents, || Ok(()))
}

/// Like [`write_atomic`], with a hook that runs after the temp file is
/// complete but before the rename. Tests inject failures there to check
/// that an interrupted write leaves the original file intact.
pub fn write_atomic_with_hook(
    path: &Path,
    contents: &str,
    before_rename: impl FnOnce() -> std::io::Result<()>,
) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| std::io::Error::other("registry path has no file name"))?;
    let tmp_name = format!(".{file_name}.{}.tmp", std::process::id());
    let tmp = match dir {
        Some(dir) => dir.join(tmp_name),
        None => std::path::PathBuf::from(tmp_name),
    };

    let result = (|| {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
        drop(file);
        before_rename()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}
