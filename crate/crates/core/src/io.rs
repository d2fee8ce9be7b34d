//! Dataset text I/O: the LIBSVM sparse format (`<label> <index>:<value> ...`,
//! 1-based indices) plus a JSON sidecar describing synthetic generation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PdfpError, Result};
use crate::linalg::{RowMatrix, SparseRow};
use crate::problems::Dataset;

/// Parse LIBSVM text. The feature count is inferred as the highest index
/// seen; malformed tokens are rejected with their line and column.
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<SparseRow> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = lineno + 1;
        let col_of = |tok: &str| raw.find(tok).map_or(1, |c| c + 1);

        let mut parts = raw.split_whitespace();
        let label_tok = parts.next().expect("non-empty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| PdfpError::Parse {
            line,
            column: col_of(label_tok),
            message: format!("invalid label `{label_tok}`"),
        })?;
        if !label.is_finite() {
            return Err(PdfpError::Parse {
                line,
                column: col_of(label_tok),
                message: format!("label `{label_tok}` is not finite"),
            });
        }

        let mut entries: Vec<(usize, f64)> = Vec::new();
        for tok in parts {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| PdfpError::Parse {
                line,
                column: col_of(tok),
                message: format!("expected `index:value`, got `{tok}`"),
            })?;
            let idx: usize = idx_str.parse().map_err(|_| PdfpError::Parse {
                line,
                column: col_of(tok),
                message: format!("invalid feature index `{idx_str}`"),
            })?;
            if idx == 0 {
                return Err(PdfpError::Parse {
                    line,
                    column: col_of(tok),
                    message: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val_str.parse().map_err(|_| PdfpError::Parse {
                line,
                column: col_of(tok),
                message: format!("invalid feature value `{val_str}`"),
            })?;
            if !val.is_finite() {
                return Err(PdfpError::Parse {
                    line,
                    column: col_of(tok),
                    message: format!("feature value `{val_str}` is not finite"),
                });
            }
            entries.push((idx - 1, val));
        }
        entries.sort_by_key(|&(i, _)| i);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(PdfpError::Parse {
                line,
                column: 1,
                message: format!("duplicate feature index {}", w[0].0 + 1),
            });
        }
        if let Some(&(last, _)) = entries.last() {
            max_index = max_index.max(last + 1);
        }
        labels.push(label);
        rows.push(SparseRow {
            indices: entries.iter().map(|&(i, _)| i).collect(),
            values: entries.iter().map(|&(_, v)| v).collect(),
        });
    }

    if labels.is_empty() {
        return Err(PdfpError::Parse {
            line: 1,
            column: 1,
            message: "empty dataset file".into(),
        });
    }
    Dataset::new(
        RowMatrix::Sparse {
            rows,
            cols: max_index,
        },
        labels,
    )
}

pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    parse_libsvm(&std::fs::read_to_string(path)?)
}

/// Serialize a dataset as LIBSVM text, skipping exact zeros. Values print in
/// shortest round-trip form, so a write-read cycle reproduces them exactly.
pub fn write_libsvm(dataset: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..dataset.sample_count() {
        out.push_str(&format!("{}", dataset.labels[i]));
        let row = dataset.features.dense_row(i);
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                out.push_str(&format!(" {}:{}", j + 1, v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn save_libsvm(dataset: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, write_libsvm(dataset))?;
    Ok(())
}

/// Generation metadata written next to synthetic datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSidecar {
    pub seed: u64,
    pub m: usize,
    pub q: usize,
    pub sparsity: f64,
    pub noise: f64,
    pub ground_truth: Vec<f64>,
}

impl SyntheticSidecar {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
