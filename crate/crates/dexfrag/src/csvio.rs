//! CSV emission with reproducibility trailers.
//!
//! Every file gets a header row, rows of 6-significant-digit numerics, and a
//! trailing comment line carrying the configuration fingerprint and master
//! seed. Files are written to a temporary sibling and renamed into place so
//! interrupted runs never leave a truncated artifact behind.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

/// Formats with six significant digits, the fixed precision of all emitted
/// numeric fields.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub struct CsvFile {
    final_path: PathBuf,
    tmp_path: PathBuf,
    writer: BufWriter<File>,
}

impl CsvFile {
    pub fn create(path: PathBuf, header: &[&str]) -> Result<Self, CliError> {
        let tmp_path = path.with_extension("csv.tmp");
        let file = File::create(&tmp_path)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", tmp_path.display())))?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "{}", header.join(","))?;
        Ok(CsvFile {
            final_path: path,
            tmp_path,
            writer,
        })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        let mut first = true;
        for field in fields {
            if !first {
                self.writer.write_all(b",")?;
            }
            self.writer.write_all(field.as_ref().as_bytes())?;
            first = false;
        }
        self.writer.write_all(b"\n")?;
        Ok(())
    }

    /// Appends the metadata trailer and atomically moves the file into place.
    pub fn finish(mut self, fingerprint: u64, seed: u64) -> Result<PathBuf, CliError> {
        writeln!(self.writer, "# fingerprint={fingerprint:016x} seed={seed}")?;
        self.writer.flush()?;
        drop(self.writer);
        std::fs::rename(&self.tmp_path, &self.final_path).map_err(|e| {
            CliError::Io(format!(
                "cannot move {} into place: {e}",
                self.final_path.display()
            ))
        })?;
        Ok(self.final_path)
    }
}

/// Reads a CSV emitted by this crate, skipping the metadata trailer.
pub fn open_reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file))
}

pub fn parse_f64(field: &str, context: &str) -> Result<f64, CliError> {
    field
        .parse::<f64>()
        .map_err(|e| CliError::Runtime(format!("{context}: bad numeric field {field:?}: {e}")))
}

pub fn parse_usize(field: &str, context: &str) -> Result<usize, CliError> {
    field
        .parse::<usize>()
        .map_err(|e| CliError::Runtime(format!("{context}: bad integer field {field:?}: {e}")))
}
