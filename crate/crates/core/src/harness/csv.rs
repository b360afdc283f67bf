//! CSV emission: optional `# config:` comment block, one header line, rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Sentinel written for undefined values such as the first observed order.
pub const UNDEFINED: &str = "—";

/// Shortest round-trip scientific form, or [`UNDEFINED`] for NaN.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        UNDEFINED.to_string()
    } else {
        format!("{x:e}")
    }
}

/// In-memory table rendered by [`CsvTable::render`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub config: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { config: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn with_config(mut self, lines: Vec<String>) -> Self {
        self.config = lines;
        self
    }

    pub fn push_values(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&x| format_value(x)).collect());
    }

    pub fn push_row(&mut self, fields: Vec<String>) {
        self.rows.push(fields);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.config.is_empty() {
            out.push_str("# config:\n");
            for line in &self.config {
                let _ = writeln!(out, "#   {line}");
            }
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut t = CsvTable::new(["a", "b"]).with_config(vec!["alpha = 1".into()]);
        t.push_values(&[0.5, f64::NAN]);
        assert_eq!(t.render(), "# config:\n#   alpha = 1\na,b\n5e-1,—\n");
    }

    #[test]
    fn values_round_trip() {
        for x in [2.379e-4, 1.0 / 3.0, -7.25e300, 0.0] {
            assert_eq!(format_value(x).parse::<f64>().unwrap(), x);
        }
    }
}
