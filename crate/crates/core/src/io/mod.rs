//! File formats: XYZ and PLY point input, OBJ and PLY mesh input/output.

pub mod obj;
pub mod ply;
pub mod xyz;

use std::path::Path;

use crate::error::{Error, Result};

/// Reads 3D positions from an `.xyz`, `.ply` or `.obj` file (by extension).
pub fn read_points(path: &Path) -> Result<Vec<[f64; 3]>> {
    match extension(path).as_str() {
        "ply" => Ok(ply::read(path)?.vertices),
        "obj" => Ok(obj::read(path)?.vertices),
        "xyz" | "txt" | "pts" => xyz::read(path),
        other => Err(Error::format(
            path,
            format!("unsupported point file extension `{other}`"),
        )),
    }
}

/// Lowercased file extension, empty if none.
pub fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}
