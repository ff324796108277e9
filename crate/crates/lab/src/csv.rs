//! Versioned CSV output.

pub const VERSION_LINE: &str = "# renormlab v1";

/// Accumulates a CSV body behind the version comment and one header line.
pub struct Csv {
    text: String,
    cols: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{VERSION_LINE}\n{}\n", header.join(",")), cols: header.len() }
    }

    /// Appends the body of an existing `header\nrows` table, checking its header.
    pub fn from_table(table: &str) -> Self {
        let cols = table.lines().next().map_or(0, |h| h.split(',').count());
        Self { text: format!("{VERSION_LINE}\n{table}"), cols }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.cols);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_line_comes_first() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[num(1.5), num(-2e-3)]);
        assert_eq!(c.finish(), "# renormlab v1\na,b\n1.5e0,-2e-3\n");
        assert!(Csv::from_table("x\n1\n").finish().starts_with("# renormlab v1\nx\n"));
    }
}
