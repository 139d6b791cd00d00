//! Per-step run records and their CSV form.
//!
//! File layout: a block of `# key=value` header lines, one row of column
//! names, then one comma-separated row per recorded step. The `t` column is
//! written as an integer; every other value uses 17 significant digits so
//! that parsing a trace back reproduces it exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::vecmath::ParamVector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    header: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(columns: Vec<String>) -> Self {
        Trace {
            header: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> &[(String, String)] {
        &self.header
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Inserts or replaces a header entry, keeping first-insertion order.
    pub fn set_header(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        debug_assert!(!key.contains('=') && !key.contains('\n') && !value.contains('\n'));
        match self.header.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.header.push((key, value)),
        }
    }

    /// Prepends entries ahead of the existing header.
    pub fn prepend_header(&mut self, entries: Vec<(String, String)>) {
        let mut merged = entries;
        for (k, v) in self.header.drain(..) {
            if !merged.iter().any(|(mk, _)| *mk == k) {
                merged.push((k, v));
            }
        }
        self.header = merged;
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "trace row width mismatch");
        self.rows.push(row);
    }

    /// Appends a column holding one value per existing row.
    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.rows.len() {
            return Err(Error::Trace(format!(
                "column `{name}` has {} values for {} rows",
                values.len(),
                self.rows.len()
            )));
        }
        if self.has_column(&name) {
            return Err(Error::Trace(format!("column `{name}` already exists")));
        }
        self.columns.push(name);
        for (row, v) in self.rows.iter_mut().zip(values) {
            row.push(v);
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Column indices for `names`, or the list of those that are absent.
    pub fn require_columns(&self, names: &[String]) -> Result<Vec<usize>> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| !self.has_column(n))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingColumns(missing));
        }
        Ok(names.iter().filter_map(|n| self.column_index(n)).collect())
    }

    /// Step indices of the recorded rows.
    pub fn steps(&self) -> Vec<usize> {
        self.column("t")
            .map(|c| c.into_iter().map(|t| t as usize).collect())
            .unwrap_or_default()
    }

    /// Coordinates `j` for which a column `{prefix}_{j}` exists, in file order.
    pub fn coords_with_prefix(&self, prefix: &str) -> Vec<usize> {
        let p = format!("{prefix}_");
        self.columns
            .iter()
            .filter_map(|c| c.strip_prefix(&p)?.parse().ok())
            .collect()
    }

    /// Whether rows cover every step `1..=T` without gaps.
    pub fn is_contiguous(&self) -> bool {
        self.steps().iter().enumerate().all(|(i, &t)| t == i + 1)
    }

    pub fn header_f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .header_value(key)
            .ok_or_else(|| Error::Trace(format!("header has no `{key}` entry")))?;
        raw.trim()
            .parse()
            .map_err(|_| Error::Trace(format!("header `{key}` is not a number: {raw}")))
    }

    pub fn header_vector(&self, key: &str) -> Result<ParamVector> {
        let raw = self
            .header_value(key)
            .ok_or_else(|| Error::Trace(format!("header has no `{key}` entry")))?;
        parse_vector(raw).ok_or_else(|| Error::Trace(format!("header `{key}` is not a vector")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        let t_col = self.column_index("t");
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if Some(i) == t_col {
                    let _ = write!(out, "{}", *v as u64);
                } else {
                    out.push_str(&fmt_f64(*v));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Trace> {
        let mut header = Vec::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let columns = loop {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::Trace("no column row".into()))?;
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim_start()
                    .split_once('=')
                    .ok_or_else(|| Error::Trace(format!("line {}: header without `=`", n + 1)))?;
                header.push((k.trim().to_string(), v.to_string()));
            } else {
                break line.split(',').map(|c| c.trim().to_string()).collect::<Vec<_>>();
            }
        };
        let mut rows = Vec::new();
        for (n, line) in lines {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Trace(format!("line {}: {e}", n + 1)))?;
            if row.len() != columns.len() {
                return Err(Error::Trace(format!(
                    "line {}: {} fields for {} columns",
                    n + 1,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(Trace {
            header,
            columns,
            rows,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Trace> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Trace::parse_csv(&text)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
    format!("[{}]", parts.join(";"))
}

pub fn parse_vector(s: &str) -> Option<ParamVector> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    if inner.trim().is_empty() {
        return Some(ParamVector::default());
    }
    inner
        .split(';')
        .map(|p| p.trim().parse::<f64>().ok())
        .collect::<Option<Vec<_>>>()
        .map(ParamVector::new)
}
