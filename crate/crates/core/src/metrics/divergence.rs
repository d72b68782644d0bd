//! Base-2 divergences between discrete distributions, so that JS lies in
//! [0, 1].

use crate::error::{Error, Result};

/// Floor applied to the second argument of KL before division.
pub const KL_EPSILON: f64 = 1e-12;
/// Allowed deviation of a distribution's total mass from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::EmptyData("probability vector"));
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::invalid(format!("probability entries must be finite and non-negative, found {v}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::invalid(format!("probability vector sums to {total}")));
    }
    Ok(())
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch { expected: p.len(), actual: q.len() });
    }
    check_distribution(p)?;
    check_distribution(q)
}

fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi.max(KL_EPSILON)).log2())
        .sum::<f64>()
        .max(0.0)
}

/// `Σ p_i log2(p_i / q_i)` with `0 · log(0/q) = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(kl_unchecked(p, q))
}

/// Jensen–Shannon divergence: mean KL of each input to their midpoint.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(js_unchecked(p, q))
}

pub(crate) fn js_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl_unchecked(p, &m) + 0.5 * kl_unchecked(q, &m)).clamp(0.0, 1.0)
}
