//! CSV tables with a header row. Missing values are written as empty fields.

use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::integrators::TimeSeries;

/// A rectangular table of optional numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row.into_iter().map(Some).collect());
    }

    pub fn push_optional(&mut self, row: Vec<Option<f64>>) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Values of a named column; missing entries are skipped.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .column_index(name)
            .ok_or_else(|| invalid("column", format!("no column `{name}`")))?;
        Ok(self
            .rows
            .iter()
            .filter_map(|r| r.get(j).copied().flatten())
            .collect())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            if row.len() != self.headers.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.headers.len(),
                    got: row.len(),
                });
            }
            w.write_record(
                row.iter()
                    .map(|v| v.map(|x| format!("{x:.17e}")).unwrap_or_default()),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    let f = f.trim();
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>()
                            .map(Some)
                            .map_err(|e| Error::Io(format!("bad number `{f}`: {e}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }
}

/// `t,x,xp,y,yp`
pub fn trajectory_table(ts: &TimeSeries) -> Result<Table> {
    if ts.dimension() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: ts.dimension(),
        });
    }
    let mut t = Table::new(&["t", "x", "xp", "y", "yp"]);
    for (i, row) in ts.rows().enumerate() {
        let mut r = Vec::with_capacity(5);
        r.push(ts.time(i));
        r.extend_from_slice(row);
        t.push(r);
    }
    Ok(t)
}
