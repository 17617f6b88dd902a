//! Cross-domain evaluation matrices.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::eval::ap::average_precision;
use crate::model::{init_params, sample_scores, ModelParams};

/// Mean per-sample AP of one parameter set on one test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainScore {
    pub ap: f64,
    pub samples_scored: usize,
    /// Samples with no positive cell, excluded from the mean.
    pub samples_skipped: usize,
}

/// Flatten each sample's score and target matrices row-major and compute its
/// AP; samples without positives are skipped and counted.
pub fn eval_on_domain(params: &ModelParams, test: &[Sample]) -> Result<DomainScore> {
    if test.is_empty() {
        return Err(Error::Dimension("empty test split".into()));
    }
    let mut sum = 0.0;
    let mut scored = 0usize;
    let mut skipped = 0usize;
    for sample in test {
        let s = sample_scores(params, sample)?;
        let scores: Vec<f64> = s.iter().copied().collect();
        let labels: Vec<u8> = sample.targets.iter().flatten().copied().collect();
        match average_precision(&scores, &labels) {
            Ok(ap) => {
                sum += ap;
                scored += 1;
            }
            Err(Error::UndefinedAp) => skipped += 1,
            Err(other) => return Err(other),
        }
    }
    if scored == 0 {
        return Err(Error::UndefinedAp);
    }
    Ok(DomainScore {
        ap: sum / scored as f64,
        samples_scored: scored,
        samples_skipped: skipped,
    })
}

/// A labelled (row x test-domain) AP grid with its per-row average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// AP fractions in [0, 1], row-major, without the AVG column.
    pub values: Vec<Vec<f64>>,
    /// Arithmetic mean of each row.
    pub avg: Vec<f64>,
    #[serde(default)]
    pub skipped_samples: u64,
}

impl EvalMatrix {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if row_labels.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} row labels vs {} rows",
                row_labels.len(),
                values.len()
            )));
        }
        for row in &values {
            if row.len() != col_labels.len() {
                return Err(Error::Dimension(format!(
                    "row width {} vs {} column labels",
                    row.len(),
                    col_labels.len()
                )));
            }
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Target("matrix values must lie in [0, 1]".into()));
            }
        }
        let avg = values.iter().map(|row| row_average(row)).collect();
        Ok(EvalMatrix {
            row_labels,
            col_labels,
            values,
            avg,
            skipped_samples: 0,
        })
    }

    pub fn value(&self, row_label: &str, col_label: &str) -> Option<f64> {
        let i = self.row_labels.iter().position(|l| l == row_label)?;
        let j = self.col_labels.iter().position(|l| l == col_label)?;
        Some(self.values[i][j])
    }

    /// CSV with a header of column labels, row labels in the first column,
    /// and AVG last; fractions printed with 6 decimals.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("train");
        for label in &self.col_labels {
            out.push(',');
            out.push_str(label);
        }
        out.push_str(",AVG\n");
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&self.row_labels[i]);
            for v in row {
                write!(out, ",{v:.6}").expect("writing to String cannot fail");
            }
            writeln!(out, ",{:.6}", self.avg[i]).expect("writing to String cannot fail");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn row_average(row: &[f64]) -> f64 {
    row.iter().sum::<f64>() / row.len() as f64
}

/// `value[i][j] = eval_on_domain(rows[i], testsets[j])`.
pub fn cross_matrix(
    rows: &[(String, &ModelParams)],
    testsets: &[(String, &[Sample])],
) -> Result<EvalMatrix> {
    if rows.is_empty() || testsets.is_empty() {
        return Err(Error::NoDomains);
    }
    let mut values = Vec::with_capacity(rows.len());
    let mut skipped = 0u64;
    for (_, params) in rows {
        let mut row = Vec::with_capacity(testsets.len());
        for (_, test) in testsets {
            let score = eval_on_domain(params, test)?;
            skipped += score.samples_skipped as u64;
            row.push(score.ap);
        }
        values.push(row);
    }
    let mut matrix = EvalMatrix::new(
        rows.iter().map(|(l, _)| l.clone()).collect(),
        testsets.iter().map(|(l, _)| l.clone()).collect(),
        values,
    )?;
    matrix.skipped_samples = skipped;
    Ok(matrix)
}

/// Evaluate a fresh initialization (no training) on every test set.
pub fn zero_shot_row(
    feature_dim: usize,
    vocab_size: usize,
    embed_dim: usize,
    seed: u64,
    testsets: &[(String, &[Sample])],
) -> Result<EvalMatrix> {
    let params = init_params(feature_dim, vocab_size, embed_dim, seed)?;
    cross_matrix(&[("zero-shot".to_string(), &params)], testsets)
}
