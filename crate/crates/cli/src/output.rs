//! CSV tables with `#` header lines.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::{SystemTime, UNIX_EPOCH};

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub command: String,
    /// Resolved configuration, in the order it should be printed.
    pub config: Vec<(String, String)>,
    /// Diagnostics gathered while computing the rows.
    pub notes: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&'static str]) -> Self {
        Self { command: command.into(), columns: columns.to_vec(), ..Self::default() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.into(), value.to_string()));
    }

    /// Shortest text that reads back to the same `f64`.
    pub fn set_num(&mut self, key: &str, value: f64) {
        self.set(key, value);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, stamp: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tacnode {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# command: {}", self.command);
        if stamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let _ = writeln!(out, "# stamp: {secs}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "# config {k} = {v}");
        }
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn write_to(&self, sink: &mut dyn Write, stamp: bool) -> io::Result<()> {
        sink.write_all(self.render(stamp).as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn header_then_rows() {
        let mut t = Table::new("demo", &["u", "label"]);
        t.set("nu", 0.75);
        t.note("max_imag", num(1e-12));
        t.push(vec![1.0.into(), "x".into()]);
        let text = t.render(false);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tacnode "));
        assert_eq!(lines[2], "# config nu = 0.75");
        assert_eq!(lines[4], "u,label");
        assert_eq!(lines[5], "1.0000000000000000e0,x");
        assert!(!text.contains("stamp"));
        assert!(t.render(true).contains("# stamp: "));
    }
}
