//! Forgetting and elasticity over step-indexed AP curves.
//!
//! A step curve tracks one test domain's AP after each training step of a
//! continual run. Forgetting is the drop from the post-learning peak to the
//! final value; elasticity is how far off-step performance strays from its
//! starting level.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// `F_j = max over t in [learn_step_j, T] of curve_j[t] - curve_j[T]`.
/// Steps are 1-based; the final step is included in the max, so F >= 0.
pub fn forgetting(
    curves: &BTreeMap<String, Vec<f64>>,
    learn_step: &BTreeMap<String, usize>,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (domain, curve) in curves {
        let steps = curve.len();
        if steps == 0 {
            return Err(Error::Index(format!("empty curve for domain {domain}")));
        }
        let learned = *learn_step
            .get(domain)
            .ok_or_else(|| Error::Index(format!("no learn step for domain {domain}")))?;
        if learned == 0 || learned > steps {
            return Err(Error::Index(format!(
                "learn step {learned} outside 1..={steps} for domain {domain}"
            )));
        }
        let peak = curve[learned - 1..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        out.insert(domain.clone(), peak - curve[steps - 1]);
    }
    Ok(out)
}

/// Largest deviation of the curve from its step-1 value over steps other
/// than `own_step` (1-based). Small values mean the off-domain performance
/// stayed flat while the domain's own step did the learning.
pub fn elasticity(curve: &[f64], own_step: usize) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::CurveTooShort { len: curve.len() });
    }
    if own_step == 0 || own_step > curve.len() {
        return Err(Error::Index(format!(
            "own step {own_step} outside 1..={}",
            curve.len()
        )));
    }
    let baseline = curve[0];
    Ok(curve
        .iter()
        .enumerate()
        .filter(|(t0, _)| t0 + 1 != own_step)
        .map(|(_, v)| (v - baseline).abs())
        .fold(0.0, f64::max))
}
