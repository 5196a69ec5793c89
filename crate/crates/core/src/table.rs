//! Versioned CSV tables with 17-significant-digit floats.

use std::fmt::Write as _;

/// Version tag written in the first line of every table.
pub const SCHEMA_VERSION: u32 = 1;

/// Round-trip float formatting (17 significant digits).
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// A CSV table with a `# <kind> schema v<version>` comment line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self { kind: kind.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Append a row; panics on a column-count mismatch.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# canonical-dpp {} schema v{}", self.kind, SCHEMA_VERSION);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(fmt17(f64::INFINITY), "inf");
    }

    #[test]
    fn render_has_version_line() {
        let mut t = CsvTable::new("demo", &["a", "b"]);
        t.push(vec!["1".into(), fmt17(0.5)]);
        let s = t.render();
        assert!(s.starts_with("# canonical-dpp demo schema v1\na,b\n1,5.0000000000000000e-1\n"));
    }
}
