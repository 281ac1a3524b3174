use std::path::{Path, PathBuf};

use blockipm::model::{dualize, parse_mps, to_standard_form, StandardFormLP};

use crate::error::CliError;

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// Whether a directory entry is read by `survey`.
pub fn is_problem_file(path: &Path) -> bool {
    matches!(extension(path).as_deref(), Some("mps" | "json"))
}

/// Problem name shown in reports: the file name without its extension.
pub fn problem_name(path: &Path) -> String {
    path.file_stem()
        .unwrap_or(path.as_os_str())
        .to_string_lossy()
        .into_owned()
}

/// Reads instance JSON (`.json`) or MPS (anything else) in standard form,
/// optionally replaced by its LP dual.
pub fn load(path: &Path, dual: bool) -> Result<StandardFormLP, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let lp = if extension(path).as_deref() == Some("json") {
        StandardFormLP::from_json(&text).map_err(|e| CliError::model(path, e))?
    } else {
        let general = parse_mps(&text).map_err(|e| CliError::model(path, e))?;
        to_standard_form(&general)
            .map_err(|e| CliError::model(path, e))?
            .lp
    };
    Ok(if dual { dualize(&lp) } else { lp })
}

/// Expands directories one level deep into their problem files, sorted by
/// name; plain files are kept in the given order.
pub fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| CliError::io(input, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_problem_file(p))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}
