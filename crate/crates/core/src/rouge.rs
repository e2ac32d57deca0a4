//! ROUGE-1, ROUGE-2 and ROUGE-L over token sequences.
//!
//! All functions are generic over the token type so callers can score
//! strings directly or interned ids.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RougeError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Scores from a match count and the two sequence sizes. Zero
    /// denominators give zero for that component.
    pub fn from_counts(matched: usize, candidate_total: usize, reference_total: usize) -> Self {
        let precision = if candidate_total == 0 {
            0.0
        } else {
            matched as f64 / candidate_total as f64
        };
        let recall = if reference_total == 0 {
            0.0
        } else {
            matched as f64 / reference_total as f64
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts<T: Eq + Hash> {
    pub n: usize,
    pub counts: HashMap<Vec<T>, usize>,
    pub total: usize,
}

impl<T: Eq + Hash + Clone> NgramCounts<T> {
    /// Σ_g min(self[g], other[g]).
    pub fn overlap(&self, other: &NgramCounts<T>) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(g, &c)| c.min(large.counts.get(g).copied().unwrap_or(0)))
            .sum()
    }
}

pub fn ngram_counts<T: Eq + Hash + Clone>(
    tokens: &[T],
    n: usize,
) -> Result<NgramCounts<T>, RougeError> {
    if n == 0 {
        return Err(RougeError::InvalidOrder(n));
    }
    let mut counts = HashMap::new();
    let mut total = 0;
    for gram in tokens.windows(n) {
        *counts.entry(gram.to_vec()).or_insert(0) += 1;
        total += 1;
    }
    Ok(NgramCounts { n, counts, total })
}

pub fn rouge_n<T: Eq + Hash + Clone>(
    candidate: &[T],
    reference: &[T],
    n: usize,
) -> Result<RougeScore, RougeError> {
    let cand = ngram_counts(candidate, n)?;
    let refr = ngram_counts(reference, n)?;
    Ok(RougeScore::from_counts(
        cand.overlap(&refr),
        cand.total,
        refr.total,
    ))
}

/// LCS length with two rows sized to the shorter input.
pub fn lcs_length<T: Eq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; short.len() + 1];
    let mut curr = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> RougeScore {
    RougeScore::from_counts(
        lcs_length(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

/// Mean F1 of ROUGE-1, ROUGE-2 and ROUGE-L.
pub fn rouge_avg<T: Eq + Hash + Clone>(candidate: &[T], reference: &[T]) -> f64 {
    let r1 = rouge_n(candidate, reference, 1).expect("order 1");
    let r2 = rouge_n(candidate, reference, 2).expect("order 2");
    let rl = rouge_l(candidate, reference);
    mean_f1(&[r1, r2, rl])
}

pub(crate) fn mean_f1(scores: &[RougeScore]) -> f64 {
    scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64
}

/// Bit-parallel LCS against a fixed reference (Hyyrö's row update).
///
/// Each candidate token costs O(|reference| / 64) word operations, which is
/// what makes per-window ROUGE-L over long transcripts affordable. Memory is
/// one bit-vector per distinct reference token.
#[derive(Debug, Clone)]
pub struct LcsIndex<T: Eq + Hash> {
    masks: HashMap<T, Vec<u64>>,
    len: usize,
    words: usize,
}

impl<T: Eq + Hash + Clone> LcsIndex<T> {
    pub fn new(reference: &[T]) -> Self {
        let words = reference.len().div_ceil(64);
        let mut masks: HashMap<T, Vec<u64>> = HashMap::new();
        for (j, tok) in reference.iter().enumerate() {
            let m = masks
                .entry(tok.clone())
                .or_insert_with(|| vec![0u64; words]);
            m[j / 64] |= 1u64 << (j % 64);
        }
        LcsIndex {
            masks,
            len: reference.len(),
            words,
        }
    }

    pub fn reference_len(&self) -> usize {
        self.len
    }

    /// LCS length of `candidate` against the indexed reference.
    pub fn lcs_length<'a, I>(&self, candidate: I) -> usize
    where
        I: IntoIterator<Item = &'a T>,
        T: 'a,
    {
        if self.len == 0 {
            return 0;
        }
        let mut v = vec![u64::MAX; self.words];
        for tok in candidate {
            let Some(m) = self.masks.get(tok) else {
                continue;
            };
            let mut carry = false;
            for (vk, &mk) in v.iter_mut().zip(m) {
                let u = *vk & mk;
                let (s1, c1) = vk.overflowing_add(u);
                let (s2, c2) = s1.overflowing_add(carry as u64);
                carry = c1 || c2;
                *vk = s2 | (*vk & !mk);
            }
        }
        let tail = self.len % 64;
        let zeros: usize = v
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let w = if k + 1 == self.words && tail != 0 {
                    w | !((1u64 << tail) - 1)
                } else {
                    w
                };
                w.count_zeros() as usize
            })
            .sum();
        zeros
    }
}
