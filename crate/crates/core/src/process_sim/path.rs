use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One simulated realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub values: Vec<f64>,
    pub spec_fingerprint: String,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    pub burn_in: usize,
}

impl Path {
    /// Wraps externally supplied data.
    pub fn from_values(values: Vec<f64>) -> Self {
        Path {
            values,
            spec_fingerprint: String::new(),
            seed: 0,
            stream: 0,
            burn_in: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Single-column CSV with header `x`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_column(w, &self.values)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Path> {
        Ok(Path::from_values(read_column(r)?))
    }
}

pub fn write_column<W: Write>(w: W, values: &[f64]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(["x"]).map_err(csv_err)?;
    for v in values {
        wr.write_record([v.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_column<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "x")
        .ok_or_else(|| Error::Parse("CSV input needs a column named 'x'".into()))?;
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = rec.get(col).unwrap_or("").trim();
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: '{field}' is not a number", line + 2)))?;
        out.push(v);
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
