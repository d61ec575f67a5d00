//! Minimal CSV reading/writing.
//!
//! Every file format in this project is plain comma-separated text with a
//! mandatory header row and no quoting, so a full CSV dependency is not
//! needed. Lines starting with `#` are treated as comments and skipped on
//! read; writers use them for provenance headers (schema version, config
//! hash, seed).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// `# key=value` comment lines seen before the header.
    pub comments: Vec<String>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_table(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn parse_table(text: &str) -> std::result::Result<Table, String> {
    let mut comments = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            comments.push(trimmed.trim_start_matches('#').trim().to_string());
            continue;
        }
        let fields: Vec<String> = trimmed.split(',').map(|f| f.trim().to_string()).collect();
        match &header {
            None => header = Some(fields),
            Some(_) => rows.push(fields),
        }
    }
    let header = header.ok_or("missing header row")?;
    Ok(Table {
        header,
        rows,
        comments,
    })
}

pub fn parse_f64(field: &str, context: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{context}: not a number: {field:?}")))
}

/// Format a float so that round-tripping through text is lossless.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        // 17 significant digits are enough to reconstruct any f64 exactly.
        format!("{v:.17e}")
    }
}

pub struct TableWriter {
    out: std::io::BufWriter<std::fs::File>,
    path: String,
    columns: usize,
}

impl TableWriter {
    pub fn create(path: &Path, comments: &[String], header: &[&str]) -> Result<Self> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = Self {
            out: std::io::BufWriter::new(file),
            path: path.display().to_string(),
            columns: header.len(),
        };
        for c in comments {
            w.write_line(&format!("# {c}"))?;
        }
        let line = header.join(",");
        w.write_line(&line)?;
        Ok(w)
    }

    pub fn write_row(&mut self, fields: &[String]) -> Result<()> {
        if fields.len() != self.columns {
            return Err(Error::Data(format!(
                "{}: row has {} fields, header has {}",
                self.path,
                fields.len(),
                self.columns
            )));
        }
        self.write_line(&fields.join(","))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(|e| Error::io(self.path.clone(), e))
    }

    fn write_line(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}").map_err(|e| Error::io(self.path.clone(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_comments_and_rows() {
        let t = parse_table("# schema_version=v1\na,b\n1,2\n3,4\n").unwrap();
        assert_eq!(t.header, vec!["a", "b"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.comments, vec!["schema_version=v1"]);
        assert_eq!(t.column("b"), Some(1));
    }

    #[test]
    fn fmt_round_trips() {
        for v in [0.0, 1.0, -3.5, 1.0 / 3.0, 2148.1, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
