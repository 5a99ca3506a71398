//! CSV tables and text summaries.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// A CSV table built in memory and written in one go.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let err = |e: csv::Error| CliError::Io(format!("csv encoding: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("csv encoding: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        write_text(path, &self.to_csv_string()?)
    }
}

/// Shortest round-trip form (exponent notation at the extremes), so tables
/// are reproducible byte for byte.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-300, 2.5681, f64::INFINITY, -0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
