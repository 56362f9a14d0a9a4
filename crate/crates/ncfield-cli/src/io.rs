//! File formats and atomic writes.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

/// Writes through a sibling temp file and renames, so partial output is
/// never observed at the target path.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
        )),
        None => Path::new(&format!(
            ".{}.tmp",
            path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
        ))
        .to_path_buf(),
    };
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `[[re,im],...]` lists, the eta interchange format.
pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, serde_json::Error> {
    let pairs: Vec<(f64, f64)> = serde_json::from_str(text)?;
    Ok(pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

/// `[x,...]` real lists, the nu interchange format.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>, serde_json::Error> {
    Vec::<f64>::deserialize(&mut serde_json::Deserializer::from_str(text))
}
