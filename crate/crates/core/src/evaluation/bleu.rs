//! Corpus-level BLEU.
//!
//! Four n-gram orders with uniform weights and a brevity penalty. Text is
//! tokenized by putting every punctuation character in its own token and
//! splitting on whitespace; matching is case-sensitive.
//!
//! Smoothing: when an order has n-grams in the hypotheses but no clipped
//! matches, its count is replaced by [`BLEU_EPSILON`]. Orders for which the
//! hypotheses contain no n-grams at all are left out and the remaining
//! weights renormalized. With no unigram match the score is 0.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;
pub const BLEU_EPSILON: f64 = 0.1;
/// Identifies the tokenization and smoothing rules above.
pub const BLEU_VARIANT: &str = "corpus-bleu4-eps0.1-v1";

pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else if c.is_alphanumeric() {
            cur.push(c);
        } else {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Sufficient statistics of a corpus; summing them over pairs is what makes
/// the score corpus-level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn of_pair(hypothesis: &str, reference: &str) -> Self {
        let h = tokenize(hypothesis);
        let r = tokenize(reference);
        let mut s = Self {
            hyp_len: h.len(),
            ref_len: r.len(),
            ..Self::default()
        };
        for n in 1..=MAX_ORDER {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            s.totals[n - 1] = h.len().saturating_sub(n - 1);
            s.matches[n - 1] = hc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum();
        }
        s
    }

    pub fn add(&mut self, other: &Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Score in [0, 100].
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut orders = 0usize;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                continue;
            }
            let m = if self.matches[n] == 0 {
                BLEU_EPSILON
            } else {
                self.matches[n] as f64
            };
            log_sum += (m / self.totals[n] as f64).ln();
            orders += 1;
        }
        let bp = if self.hyp_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        (100.0 * bp * (log_sum / orders as f64).exp()).clamp(0.0, 100.0)
    }
}

/// Corpus BLEU of paired hypotheses and single references.
pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyInput("BLEU needs at least one pair".into()));
    }
    let mut s = BleuStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        s.add(&BleuStats::of_pair(h.as_ref(), r.as_ref()));
    }
    Ok(s.score())
}
