use std::path::Path;

use crate::error::{Error, Result};

/// Version written into every table header; bump when columns change.
pub const SCHEMA_VERSION: u32 = 1;

/// Rows of plain CSV under a `# <name> schema v<N>` comment line.
pub struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn nums(&mut self, cells: &[f64]) {
        self.row(cells.iter().map(|v| num(*v)).collect());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        let body = out.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        let mut text = format!("# {} schema v{SCHEMA_VERSION}\n", self.name).into_bytes();
        text.extend_from_slice(&body);
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Shortest round-trip form, in exponent notation for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
