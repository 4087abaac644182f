use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a one-column CSV: one observation per line, optional non-numeric
/// header on the first line, blank lines ignored.
pub fn parse_sequence_csv(text: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(format!("line {}: non-finite value {field:?}", i + 1)),
            Err(_) if i == 0 => {} // header
            Err(_) => return Err(format!("line {}: cannot parse {field:?}", i + 1)),
        }
    }
    if out.is_empty() {
        return Err("no observations found".into());
    }
    Ok(out)
}

pub fn read_sequence_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequence_csv(&text).map_err(|msg| Error::io(path, io::Error::new(io::ErrorKind::InvalidData, msg)))
}

pub fn sequence_csv(header: &str, values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24 + header.len() + 1);
    s.push_str(header);
    s.push('\n');
    for v in values {
        s.push_str(&fmt_f64(*v));
        s.push('\n');
    }
    s
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".out.tmp".into());
    tmp.set_file_name(name);
    let write = || -> io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
