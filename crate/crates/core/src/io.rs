//! CSV tables with a commented TOML header.
//!
//! A file starts with `# `-prefixed lines holding TOML (typically the fully
//! resolved run configuration), then one column-name line and numeric rows.
//! Numbers use Rust's shortest round-trip formatting, so identical inputs
//! give identical bytes: integers are written plainly, other values in
//! exponent form. Missing values (NaN) are written as empty cells.

use std::io::Write;

use crate::error::{Error, Result};

/// Integers as such, everything else in shortest round-trip exponent form.
fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write(&self, out: &mut impl Write, header: &str) -> Result<()> {
        for line in header.lines() {
            if line.is_empty() {
                writeln!(out, "#")?;
            } else {
                writeln!(out, "# {line}")?;
            }
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_cell(v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_string_with_header(&self, header: &str) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, header).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parse text written by [`CsvTable::write`]; returns the header text and
    /// the table.
    pub fn parse(text: &str) -> Result<(String, Self)> {
        let mut header = String::new();
        let mut lines = text.lines();
        let columns = loop {
            let line = lines.next().ok_or_else(|| Error::Parse("csv: no column line".into()))?;
            if let Some(rest) = line.strip_prefix('#') {
                header.push_str(rest.strip_prefix(' ').unwrap_or(rest));
                header.push('\n');
            } else {
                break line.split(',').map(str::to_string).collect::<Vec<_>>();
            }
        };
        let mut table = CsvTable {
            columns,
            rows: Vec::new(),
        };
        for (k, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    if c.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        c.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("csv row {}: {e}", k + 1)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != table.columns.len() {
                return Err(Error::Parse(format!("csv row {}: wrong number of cells", k + 1)));
            }
            table.rows.push(row);
        }
        Ok((header, table))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let mut t = CsvTable::new(["tau[s]", "g2"]);
        t.push(vec![0.0, 1.25]);
        t.push(vec![1e-9, f64::NAN]);
        t.push(vec![0.1 + 0.2, -3.5e-300]);
        let header = "[model]\nn_emitters = 2\n\nname = \"x\"\n";
        let text = t.to_string_with_header(header);
        let (h, back) = CsvTable::parse(&text).unwrap();
        assert_eq!(h, header);
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.rows[0], t.rows[0]);
        assert!(back.rows[1][1].is_nan());
        assert_eq!(back.rows[2], t.rows[2]);
    }
}
