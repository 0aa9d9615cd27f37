//! Deterministic CSV emission: header row plus fixed 9-significant-digit
//! scientific formatting, so identical runs produce identical bytes.

/// Formats one value with 9 significant digits.
pub fn sig9(value: f64) -> String {
    format!("{value:.8e}")
}

pub struct CsvWriter {
    columns: usize,
    buffer: String,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        Self {
            columns: header.len(),
            buffer: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "column count mismatch");
        let mut first = true;
        for v in values {
            if !first {
                self.buffer.push(',');
            }
            self.buffer.push_str(&sig9(*v));
            first = false;
        }
        self.buffer.push('\n');
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}
