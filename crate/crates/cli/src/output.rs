//! CSV emission and the file manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

pub fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError { path: path.to_path_buf(), source }
}

/// Optional numbers are written as empty cells.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { name: name.into(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(f64::to_string).collect());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestFile {
    pub name: String,
    pub rows: usize,
    pub zero_rows: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub mode: String,
    pub created_unix_seconds: u64,
    pub elapsed_seconds: f64,
    pub files: Vec<ManifestFile>,
    /// Sections that could not be produced, with the reason.
    pub gaps: Vec<String>,
}

/// Collects output files under one directory.
#[derive(Debug)]
pub struct OutputDir {
    pub root: PathBuf,
    pub files: Vec<ManifestFile>,
    pub gaps: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, IoError> {
        fs::create_dir_all(root).map_err(io_error(root))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), gaps: Vec::new() })
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), IoError> {
        let path = self.root.join(name);
        let mut f = fs::File::create(&path).map_err(io_error(&path))?;
        f.write_all(bytes).map_err(io_error(&path))
    }

    pub fn write_table(&mut self, t: &Table) -> Result<(), IoError> {
        self.write_bytes(&t.name, &t.to_bytes())?;
        self.files.push(ManifestFile { name: t.name.clone(), rows: t.rows.len(), zero_rows: t.rows.is_empty() });
        Ok(())
    }

    /// Extra files (reports, checkpoints) that have no row structure.
    pub fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<(), IoError> {
        self.write_bytes(name, bytes)?;
        self.files.push(ManifestFile { name: name.to_string(), rows: 0, zero_rows: false });
        Ok(())
    }

    pub fn gap(&mut self, note: impl Into<String>) {
        self.gaps.push(note.into());
    }

    pub fn write_manifest(&mut self, mode: &str, elapsed_seconds: f64) -> Result<Manifest, IoError> {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Manifest {
            mode: mode.to_string(),
            created_unix_seconds: created,
            elapsed_seconds,
            files: self.files.clone(),
            gaps: self.gaps.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        self.write_bytes("manifest.json", text.as_bytes())?;
        Ok(manifest)
    }
}
