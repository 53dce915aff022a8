//! Collects a command's result in the three output formats and writes the
//! selected one once at the end.

use std::path::Path;

use clap::ValueEnum;
use holo_core::Mat2;

use crate::Failure;

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

pub struct Output {
    format: Format,
    header: Option<Vec<String>>,
    records: Vec<Vec<String>>,
    text: String,
    json: Vec<serde_json::Value>,
    raw: Option<String>,
}

impl Output {
    pub fn new(format: Format) -> Self {
        Output { format, header: None, records: Vec::new(), text: String::new(), json: Vec::new(), raw: None }
    }

    /// Sets the CSV header; later calls are ignored.
    pub fn header(&mut self, cols: &[&str]) {
        if self.header.is_none() {
            self.header = Some(cols.iter().map(|c| c.to_string()).collect());
        }
    }

    pub fn record(&mut self, rec: Vec<String>) {
        self.records.push(rec);
    }

    pub fn text(&mut self, s: &str) {
        self.text.push_str(s);
    }

    pub fn json(&mut self, v: serde_json::Value) {
        self.json.push(v);
    }

    /// Pre-rendered body that replaces everything else.
    pub fn raw(&mut self, s: &str) {
        self.raw = Some(s.to_string());
    }

    fn render(self) -> Result<String, Failure> {
        if let Some(r) = self.raw {
            return Ok(r);
        }
        Ok(match self.format {
            Format::Text => {
                if self.text.is_empty() {
                    // fall back to the CSV body
                    return Output { format: Format::Csv, ..self }.render();
                }
                self.text
            }
            Format::Json => {
                let v = match self.json.len() {
                    1 => self.json.into_iter().next().expect("one value"),
                    _ => serde_json::Value::Array(self.json),
                };
                serde_json::to_string_pretty(&v).expect("json value serializes") + "\n"
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Failure { code: 2, msg: format!("csv: {e}") };
                if let Some(h) = &self.header {
                    w.write_record(h).map_err(io)?;
                }
                for r in &self.records {
                    w.write_record(r).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| Failure { code: 2, msg: format!("csv: {e}") })?;
                String::from_utf8(bytes).expect("csv output is utf-8")
            }
        })
    }

    pub fn finish(self, path: Option<&Path>) -> Result<(), Failure> {
        let body = self.render()?;
        match path {
            Some(p) => std::fs::write(p, body)
                .map_err(|e| Failure { code: 2, msg: format!("cannot write {}: {e}", p.display()) }),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }
}

pub fn mat_csv_record(label: &str, subspace: &str, method: &str, m: &Mat2) -> Vec<String> {
    let mut rec = vec![label.to_string(), subspace.to_string(), method.to_string()];
    for i in 0..2 {
        for j in 0..2 {
            rec.push(m[(i, j)].re.to_string());
            rec.push(m[(i, j)].im.to_string());
        }
    }
    rec
}

pub fn mat_text(m: &Mat2) -> String {
    let z = |i, j| {
        let c: holo_core::Complex = m[(i, j)];
        format!("{:+.9} {:+.9}i", c.re, c.im)
    };
    format!("  [ {}   {} ]\n  [ {}   {} ]\n", z(0, 0), z(0, 1), z(1, 0), z(1, 1))
}
