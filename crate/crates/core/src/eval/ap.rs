//! Non-interpolated all-point average precision over ranked scores.
//!
//! Ties are broken by ascending original index, so the metric is a pure
//! function of its inputs.

use crate::error::{Error, Result};

fn validate(scores: &[f64], labels: &[u8]) -> Result<usize> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Target(format!("non-finite score at index {pos}")));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Target("labels must be 0 or 1".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::UndefinedAp);
    }
    Ok(positives)
}

/// Indices sorted by descending score, ties by ascending index.
fn ranked_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores validated finite")
            .then(a.cmp(&b))
    });
    order
}

/// Mean over positives of precision at that positive's rank.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let positives = validate(scores, labels)?;
    let order = ranked_order(scores);
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank0, &idx) in order.iter().enumerate() {
        if labels[idx] == 1 {
            hits += 1;
            sum += hits as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Independent recomputation: materialize precision and recall at every rank
/// of the full ranked list and integrate precision over recall increments.
pub fn ap_bruteforce_oracle(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let positives = validate(scores, labels)?;
    let order = ranked_order(scores);
    let mut precision_at = Vec::with_capacity(order.len());
    let mut recall_at = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    for (rank0, &idx) in order.iter().enumerate() {
        if labels[idx] == 1 {
            tp += 1;
        }
        precision_at.push(tp as f64 / (rank0 + 1) as f64);
        recall_at.push(tp as f64 / positives as f64);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision_at.iter().zip(recall_at.iter()) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    Ok(ap)
}
