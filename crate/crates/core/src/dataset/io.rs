use std::fs;
use std::path::Path;

use super::{validate::check_integrity, Dataset};
use crate::{Error, Result};

/// Serializes a dataset as pretty JSON with a trailing newline.
///
/// Field order is fixed by the type definitions, so identical datasets
/// always produce identical bytes.
pub fn to_json_string(dataset: &Dataset) -> String {
    let mut out = serde_json::to_string_pretty(dataset).expect("dataset serialization is infallible");
    out.push('\n');
    out
}

/// Parses and integrity-checks a dataset.
pub fn from_json_str(json: &str, context: &str) -> Result<Dataset> {
    let dataset: Dataset = serde_json::from_str(json).map_err(|e| Error::parse(context, e))?;
    check_integrity(&dataset)?;
    Ok(dataset)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json_str(&json, &path.display().to_string())
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json_string(dataset)).map_err(|e| Error::io(path, e))
}
