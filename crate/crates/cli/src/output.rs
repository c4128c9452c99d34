//! Output directory handling: guarded writes, CSV and PGM encoders, manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub struct OutputDir {
    dir: PathBuf,
    force: bool,
    files: Vec<FileEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: Option<u64>,
    build: &'a str,
    config: serde_json::Value,
    files: &'a [FileEntry],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

impl OutputDir {
    /// Refuses a directory holding a previous manifest unless `force` is set.
    pub fn create(dir: &Path, force: bool) -> Result<Self> {
        if dir.join(MANIFEST).exists() && !force {
            bail!("{} already holds results; pass --force to overwrite", dir.display());
        }
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputDir { dir: dir.to_path_buf(), force, files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if path.exists() && !self.force {
            bail!("{} exists; pass --force to overwrite", path.display());
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry { name: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        self.write(name, csv.text.as_bytes())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, command: &str, seed: Option<u64>, config: serde_json::Value) -> Result<Vec<FileEntry>> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let m = Manifest { command, seed, build: env!("TLG_GIT_DESCRIBE"), config, files: &self.files };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.files)
    }
}

/// Minimal CSV builder; fields are numbers or plain identifiers.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

/// Formats a float in shortest round-trip form, `nan` for missing values.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

/// Plain PGM (`P2`) of a row-major grid. Gray level `g = round(255 (v − lo)/(hi − lo))` with
/// `lo`, `hi` the finite extremes; both are recorded in a comment. Non-finite cells are 0.
pub fn pgm(width: usize, height: usize, values: &[f64]) -> String {
    assert_eq!(values.len(), width * height);
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut s = String::new();
    writeln!(s, "P2").unwrap();
    writeln!(s, "# value = {} + gray * {} / 255", num(if lo.is_finite() { lo } else { 0.0 }), num(if span.is_finite() { span } else { 0.0 })).unwrap();
    writeln!(s, "{width} {height}").unwrap();
    writeln!(s, "255").unwrap();
    for row in values.chunks(width) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                let g = if !v.is_finite() {
                    0
                } else if span > 0.0 {
                    (255.0 * (v - lo) / span).round() as u8
                } else {
                    128
                };
                g.to_string()
            })
            .collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_maps_extremes_to_black_and_white() {
        let p = pgm(3, 1, &[-1.0, 0.0, 1.0]);
        assert!(p.ends_with("0 128 255\n"));
        assert!(p.starts_with("P2\n"));
    }

    #[test]
    fn constant_image_is_mid_gray() {
        assert!(pgm(2, 1, &[4.0, 4.0]).ends_with("128 128\n"));
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
