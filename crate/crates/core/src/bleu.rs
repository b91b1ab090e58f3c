//! Sentence-level BLEU with add-epsilon smoothing, used by the synthetic
//! AMR filter.
//!
//! Score = 100 · BP · (∏ pₙ)^(1/max_n) for n-gram precisions p₁..p_max_n,
//! where a zero-match precision is smoothed to (0+ε)/(denominator+ε) with
//! ε = 0.1, and BP = exp(1 − r/c) when the candidate is shorter than the
//! reference. Single reference only.

use std::collections::HashMap;

const EPSILON: f64 = 0.1;

/// Clipped n-gram matches and candidate n-gram count for one order.
fn ngram_precision(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    if candidate.len() < n {
        return (0, 0);
    }
    let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
    if reference.len() >= n {
        for gram in reference.windows(n) {
            *ref_counts.entry(gram).or_insert(0) += 1;
        }
    }
    let mut cand_counts: HashMap<&[String], usize> = HashMap::new();
    for gram in candidate.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let matches = cand_counts
        .iter()
        .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    let total = candidate.len() - n + 1;
    (matches, total)
}

/// Sentence BLEU on a 0–100 scale. An empty candidate scores 0; the
/// reference is expected to be non-empty (an empty reference also yields 0).
pub fn sentence_bleu(candidate: &[String], reference: &[String], max_n: usize) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let max_n = max_n.max(1);
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (matches, total) = ngram_precision(candidate, reference, n);
        let p = if matches == 0 {
            (matches as f64 + EPSILON) / (total as f64 + EPSILON)
        } else {
            matches as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let brevity = if candidate.len() < reference.len() {
        (1.0 - reference.len() as f64 / candidate.len() as f64).exp()
    } else {
        1.0
    };
    100.0 * brevity * (log_sum / max_n as f64).exp()
}

/// Default n-gram order.
pub const DEFAULT_MAX_N: usize = 4;
