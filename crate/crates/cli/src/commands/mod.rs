pub mod analyze;
pub mod cards;
pub mod pipeline;
pub mod serve;

use std::path::Path;

use foresight_core::domain::SystemicRisk;

/// Reads risks from JSONL, reporting the file and line of the first bad row.
pub fn read_risks(path: &Path) -> Result<Vec<SystemicRisk>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1)))
        .collect()
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>, written: &mut Vec<std::path::PathBuf>) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    written.push(path.to_path_buf());
    Ok(())
}
