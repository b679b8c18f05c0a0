//! Versioned plain-text checkpoint format shared by every trained model.
//!
//! ```text
//! PDCKPT 1
//! kind <kind>
//! meta <key> <value>
//! tensor <name> <rows> <cols>
//! <cols space-separated floats, one line per row>
//! end
//! ```
//!
//! Floats are written in their shortest round-tripping form, so
//! save → load → save is byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    /// Tensors in insertion order.
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn new(kind: &str) -> Self {
        Checkpoint {
            kind: kind.to_string(),
            ..Default::default()
        }
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Invalid(format!("checkpoint lacks meta {key:?}")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta(key)?;
        raw.parse()
            .map_err(|_| Error::Invalid(format!("checkpoint meta {key} = {raw:?} is malformed")))
    }

    pub fn push(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) {
        assert_eq!(rows * cols, data.len(), "tensor {name} shape");
        self.tensors.push((name.to_string(), Tensor { rows, cols, data }));
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Invalid(format!("checkpoint lacks tensor {name:?}")))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Invalid(format!(
                "expected a {kind} checkpoint, found {}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("PDCKPT {CHECKPOINT_VERSION}\nkind {}\n", self.kind);
        for (k, v) in &self.meta {
            out.push_str(&format!("meta {k} {v}\n"));
        }
        for (name, t) in &self.tensors {
            out.push_str(&format!("tensor {name} {} {}\n", t.rows, t.cols));
            for r in 0..t.rows {
                let row: Vec<String> = t.data[r * t.cols..(r + 1) * t.cols]
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(content: &str) -> Result<Self> {
        let mut lines = content.lines().enumerate().map(|(i, l)| (i + 1, l));
        let bad = |line: usize, m: &str| Error::parse("checkpoint", line, m);
        match lines.next() {
            Some((_, l)) if l == format!("PDCKPT {CHECKPOINT_VERSION}") => {}
            _ => return Err(bad(1, "missing `PDCKPT 1` header")),
        }
        let kind = match lines.next() {
            Some((_, l)) if l.starts_with("kind ") => l[5..].to_string(),
            _ => return Err(bad(2, "missing kind line")),
        };
        let mut ckpt = Checkpoint::new(&kind);
        loop {
            let Some((n, line)) = lines.next() else {
                return Err(bad(0, "truncated checkpoint: missing `end`"));
            };
            if line == "end" {
                break;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                ckpt.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let parts: Vec<&str> = rest.split(' ').collect();
                if parts.len() != 3 {
                    return Err(bad(n, "expected `tensor <name> <rows> <cols>`"));
                }
                let rows: usize = parts[1].parse().map_err(|_| bad(n, "bad rows"))?;
                let cols: usize = parts[2].parse().map_err(|_| bad(n, "bad cols"))?;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (rn, row) = lines.next().ok_or_else(|| bad(n, "truncated tensor"))?;
                    let before = data.len();
                    for v in row.split_whitespace() {
                        let x: f64 = v.parse().map_err(|_| bad(rn, "bad float"))?;
                        if !x.is_finite() {
                            return Err(Error::NonFinite(format!("tensor {}", parts[0])));
                        }
                        data.push(x);
                    }
                    if data.len() - before != cols {
                        return Err(Error::DimMismatch {
                            expected: cols,
                            actual: data.len() - before,
                            context: format!("tensor {} line {rn}", parts[0]),
                        });
                    }
                }
                ckpt.tensors.push((parts[0].to_string(), Tensor { rows, cols, data }));
            } else {
                return Err(bad(n, "unexpected line"));
            }
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_text(&text)
    }
}
