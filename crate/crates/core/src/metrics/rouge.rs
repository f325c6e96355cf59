//! ROUGE-L sentence F-measure.

use super::MetricError;
use crate::model::Token;

pub const DEFAULT_BETA: f64 = 1.2;

/// Length of the longest common subsequence of surfaces, O(|a|·|b|) time and
/// O(|b|) space.
pub fn lcs_len(a: &[Token], b: &[Token]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x.surface == y.surface {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// `F = (1 + β²)·R·P / (R + β²·P)` with `R = LCS/|ref|`, `P = LCS/|hyp|`.
pub fn rouge_l(reference: &[Token], hypothesis: &[Token], beta: f64) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let lcs = lcs_len(reference, hypothesis) as f64;
    if lcs == 0.0 {
        return Ok(0.0);
    }
    let recall = lcs / reference.len() as f64;
    let precision = lcs / hypothesis.len() as f64;
    let b2 = beta * beta;
    Ok((1.0 + b2) * recall * precision / (recall + b2 * precision))
}
