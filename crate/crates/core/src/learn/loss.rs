//! Log-softmax cross-entropy loss with L2 regularization.
//!
//! For a minibatch of score vectors s with truth labels t the loss is the
//! mean of -log(exp(C·s_t) / Σ_j exp(C·s_j)) plus (λ / 2N_b)·Σ w², computed
//! with max-subtraction stabilization.

use crate::error::{Error, Result};

/// Per-image cross entropy of scaled logits.
pub fn cross_entropy(scores: &[f64], truth: usize, logit_scale: f64) -> Result<f64> {
    if truth >= scores.len() {
        return Err(Error::Index(format!(
            "truth label {truth} out of range for {} scores",
            scores.len()
        )));
    }
    let max = scores
        .iter()
        .map(|&s| logit_scale * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = scores
        .iter()
        .map(|&s| (logit_scale * s - max).exp())
        .sum::<f64>()
        .ln();
    Ok(-(logit_scale * scores[truth] - max - log_sum))
}

/// Batch mean cross entropy plus the regularization term
/// (λ / 2N_b) · weight_sq_sum.
pub fn batch_loss(
    scores: &[Vec<f64>],
    truths: &[usize],
    logit_scale: f64,
    l2_strength: f64,
    weight_sq_sum: f64,
) -> Result<f64> {
    if scores.len() != truths.len() || scores.is_empty() {
        return Err(Error::Length(format!(
            "{} score vectors vs {} labels",
            scores.len(),
            truths.len()
        )));
    }
    let n_b = scores.len() as f64;
    let mut total = 0.0;
    for (s, &t) in scores.iter().zip(truths) {
        total += cross_entropy(s, t, logit_scale)?;
    }
    Ok(total / n_b + l2_strength / (2.0 * n_b) * weight_sq_sum)
}

/// Gradient of the per-image cross entropy w.r.t. the scores:
/// ∂L/∂s_j = C · (softmax(C·s)_j − δ_{j,t}).
pub fn softmax_residuals(scores: &[f64], truth: usize, logit_scale: f64) -> Vec<f64> {
    let max = scores
        .iter()
        .map(|&s| logit_scale * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (logit_scale * s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter()
        .enumerate()
        .map(|(j, &e)| logit_scale * (e / total - if j == truth { 1.0 } else { 0.0 }))
        .collect()
}

/// Mean of the top min(100, len) accuracies; the summary statistic reported
/// for every training run.
pub fn best100_accuracy(history: &[f64]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::Length("empty accuracy history".into()));
    }
    let mut sorted = history.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let take = sorted.len().min(100);
    Ok(sorted[..take].iter().sum::<f64>() / take as f64)
}
