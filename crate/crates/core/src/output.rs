//! CSV tables and atomic file writes.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::DomainMask;

/// A table whose column names carry their units, e.g. `lambda [1/length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Fixed-width scientific notation so reruns are byte-identical.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| num(v)).collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Writes to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Nodal field as `x, y, value` rows.
pub fn field_table(name: &str, value_column: &str, mask: &DomainMask, values: &[&[f64]], labels: &[&str]) -> Table {
    let grid = mask.grid();
    let mut cols = vec!["x [length]", "y [length]", "inside [flag]"];
    let named: Vec<String> = labels.iter().map(|l| format!("{l} [{value_column}]")).collect();
    cols.extend(named.iter().map(|s| s.as_str()));
    let mut t = Table::new(name, &cols);
    for node in 0..grid.len() {
        let [x, y] = grid.position(node);
        let mut row = vec![num(x), num(y), (mask.is_inside(node) as u8).to_string()];
        row.extend(values.iter().map(|v| num(v[node])));
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_quotes() {
        let mut t = Table::new("t", &["lambda [1/length]", "note"]);
        t.push(vec![num(0.5), "a,b".into()]);
        let s = t.to_csv().unwrap();
        assert_eq!(s, "lambda [1/length],note\n5.000000000000e-1,\"a,b\"\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
