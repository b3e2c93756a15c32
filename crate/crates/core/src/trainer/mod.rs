//! Two-stage training: multi-task pretext pretraining of the encoder, then
//! summarization fine-tuning of the whole model, plus the pretext-task
//! ablation.

mod ablation;
mod config;
mod finetune;
mod pretrain;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use ablation::{
    ablation_variants, run_ablation, AblationReport, AblationRun, AblationVariant, VariantSummary,
};
pub use config::{LevelMode, OptimizerKind, Stage, TrainConfig};
pub use finetune::{build_vocab, finetune, finetune_step, summary_sequences, FinetuneExample};
pub use pretrain::{
    make_optimizer, preload, pretext_meta, pretext_step, pretrain, pretrain_from, save_pretext,
    PretextOptimizers, TrainOutcome,
};

use crate::corpus::{ChartRecord, Corpus, Split};
use crate::error::Result;
use crate::fsutil::write_atomic;

/// Progress of a run. The RNG state is fully determined by `seed`, `epoch`
/// and `step`, so it is not stored separately.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState<R> {
    pub step: usize,
    pub epoch: usize,
    pub seed: u64,
    pub history: Vec<R>,
}

impl<R> TrainState<R> {
    pub fn new(seed: u64) -> Self {
        Self {
            step: 0,
            epoch: 0,
            seed,
            history: Vec::new(),
        }
    }

    pub fn push(&mut self, r: R) {
        self.history.push(r);
        self.step += 1;
    }
}

/// Record order for one epoch.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx
}

/// Sample seed for a training step.
pub fn batch_seed(seed: u64, step: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed
        ^ (step as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn write_log(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Records used for training: the train split, or every record when the
/// corpus has not been split.
pub fn training_records(corpus: &Corpus) -> Vec<&ChartRecord> {
    let train = corpus.split(Split::Train);
    if train.is_empty() {
        corpus.records.iter().collect()
    } else {
        train
    }
}

/// Held-out records: validation and test splits, falling back to the
/// training records when there are none.
pub fn held_out_records(corpus: &Corpus) -> Vec<&ChartRecord> {
    let held: Vec<&ChartRecord> = corpus
        .records
        .iter()
        .filter(|r| matches!(r.split, Split::Val | Split::Test))
        .collect();
    if held.is_empty() {
        training_records(corpus)
    } else {
        held
    }
}

/// Trailing moving average with the given window (shorter at the start).
pub fn smoothed(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_orders_are_permutations() {
        let a = epoch_order(10, 3, 0);
        let b = epoch_order(10, 3, 1);
        let mut s = a.clone();
        s.sort();
        assert_eq!(s, (0..10).collect::<Vec<_>>());
        assert_ne!(a, b);
        assert_eq!(a, epoch_order(10, 3, 0));
    }

    #[test]
    fn batch_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|s| batch_seed(7, s)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(batch_seed(0, 0), batch_seed(1, 0));
    }

    #[test]
    fn moving_average() {
        let s = smoothed(&[4.0, 2.0, 0.0, 2.0], 2);
        assert_eq!(s, vec![4.0, 3.0, 1.0, 1.0]);
    }
}
