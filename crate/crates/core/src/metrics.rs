//! ROUGE-N / ROUGE-L over token lists and paired approximate-randomization
//! significance testing.

use std::collections::HashMap;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }

    pub(crate) fn from_counts(overlap: usize, hyp_total: usize, ref_total: usize) -> Self {
        let ratio = |total: usize| {
            if total == 0 {
                0.0
            } else {
                overlap as f64 / total as f64
            }
        };
        Self::from_pr(ratio(hyp_total), ratio(ref_total))
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap score.
///
/// # Panics
/// If `n == 0`.
pub fn rouge_n<T: Eq + Hash>(hypothesis: &[T], reference: &[T], n: usize) -> RougeScore {
    assert!(n >= 1, "ROUGE-N needs n >= 1");
    let hyp = ngram_counts(hypothesis, n);
    let reference = ngram_counts(reference, n);
    let overlap = hyp
        .iter()
        .map(|(gram, &c)| c.min(reference.get(gram).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(overlap, hyp.values().sum(), reference.values().sum())
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<T: Eq>(hypothesis: &[T], reference: &[T]) -> RougeScore {
    RougeScore::from_counts(
        lcs_len(hypothesis, reference),
        hypothesis.len(),
        reference.len(),
    )
}

/// ROUGE-1, ROUGE-2 and ROUGE-L for one hypothesis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeTriple {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

pub fn rouge_all<T: Eq + Hash>(hypothesis: &[T], reference: &[T]) -> RougeTriple {
    RougeTriple {
        rouge1: rouge_n(hypothesis, reference, 1),
        rouge2: rouge_n(hypothesis, reference, 2),
        rouge_l: rouge_l(hypothesis, reference),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigTestResult {
    pub p_value: f64,
    pub n_trials: usize,
    pub observed_delta: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Paired approximate randomization: each trial swaps every pair with
/// probability 1/2 and recomputes the difference of means.
///
/// `p = (#{trials with |delta| >= |observed|} + 1) / (n_trials + 1)`.
pub fn approx_randomization(
    scores_a: &[f64],
    scores_b: &[f64],
    n_trials: usize,
    seed: u64,
) -> Result<SigTestResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch {
            what: "paired scores",
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    if scores_a.is_empty() || n_trials == 0 {
        return Err(Error::Config(
            "significance test needs at least one pair and one trial".into(),
        ));
    }
    let n = scores_a.len() as f64;
    let observed_delta = mean(scores_a) - mean(scores_b);
    let diffs: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    // Sum of differences: mean(a') - mean(b') == sum(±diff) / n.
    let threshold = observed_delta.abs() - 1e-12 * (1.0 + observed_delta.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at_least = 0usize;
    for _ in 0..n_trials {
        let mut sum = 0.0;
        for &d in &diffs {
            if rng.gen::<bool>() {
                sum -= d;
            } else {
                sum += d;
            }
        }
        if (sum / n).abs() >= threshold {
            at_least += 1;
        }
    }
    Ok(SigTestResult {
        p_value: (at_least + 1) as f64 / (n_trials + 1) as f64,
        n_trials,
        observed_delta,
    })
}

/// Multiplies every p-value by `m`, capped at 1.
pub fn bonferroni(p_values: &[f64], m: usize) -> Vec<f64> {
    p_values.iter().map(|p| (p * m as f64).min(1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: RougeScore, p: f64, r: f64, f: f64) {
        assert!((a.precision - p).abs() < EPS, "{a:?}");
        assert!((a.recall - r).abs() < EPS, "{a:?}");
        assert!((a.f1 - f).abs() < EPS, "{a:?}");
    }

    #[test]
    fn rouge_n_worked_examples() {
        let x = ["the", "cat", "sat"];
        close(rouge_n(&x, &x, 1), 1.0, 1.0, 1.0);
        close(rouge_n(&x, &["the", "cat"], 1), 2.0 / 3.0, 1.0, 0.8);
        close(rouge_n(&["a", "b"], &["c", "d"], 2), 0.0, 0.0, 0.0);
    }

    #[test]
    fn rouge_n_clips_repeats() {
        // hyp: the×3 ; ref: the×1 cat → overlap 1
        close(
            rouge_n(&["the", "the", "the"], &["the", "cat"], 1),
            1.0 / 3.0,
            0.5,
            0.4,
        );
    }

    #[test]
    fn rouge_n_too_short_for_bigrams() {
        close(rouge_n(&["a"], &["a"], 2), 0.0, 0.0, 0.0);
    }

    #[test]
    fn rouge_l_worked_examples() {
        close(rouge_l(&["a", "b"], &["a", "b"]), 1.0, 1.0, 1.0);
        close(
            rouge_l(&["a", "b", "c", "d"], &["a", "c", "b", "d"]),
            0.75,
            0.75,
            0.75,
        );
        close(rouge_l::<&str>(&[], &["a"]), 0.0, 0.0, 0.0);
    }

    #[test]
    fn identical_scores_give_p_one() {
        let a = [0.3, 0.5, 0.1];
        let r = approx_randomization(&a, &a, 500, 7).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.observed_delta, 0.0);
    }

    #[test]
    fn single_pair_exhaustive() {
        let r = approx_randomization(&[1.0], &[0.0], 2, 1).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(matches!(
            approx_randomization(&[1.0], &[1.0, 2.0], 10, 0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn bonferroni_examples() {
        let close_all = |got: Vec<f64>, want: &[f64]| {
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < EPS, "{got:?}");
            }
        };
        close_all(bonferroni(&[0.004], 3), &[0.012]);
        close_all(bonferroni(&[0.5], 4), &[1.0]);
        close_all(bonferroni(&[0.01, 0.002], 2), &[0.02, 0.004]);
    }
}
