//! Summary scoring by semantic level, pretext-task accuracy and report
//! files.

mod accuracy;
mod bleu;
mod report;
mod summaries;

use pretext_forge_autograd::Scalar;

pub use accuracy::{pretext_accuracy, PretextAccuracy, PretextClassifier};
pub use bleu::{corpus_bleu, tokenize, BleuStats, BLEU_EPSILON, BLEU_VARIANT, MAX_ORDER};
pub use report::{emit_report, EvalReport, EvalReportBuilder};
pub use summaries::{fit_image, level_split_eval, token_accuracy, LevelScores, SummaryGenerator};

use crate::corpus::ChartRecord;
use crate::error::Result;
use crate::models::ChartModel;
use crate::pretext::{make_batch, BatchContext, PermutationCodebook, PretextSample};
use crate::trainer::LevelMode;

/// Pretext samples for held-out records, drawn with `seed`.
pub fn eval_samples<T: Scalar>(
    records: &[&ChartRecord],
    codebook: &PermutationCodebook,
    resolution: usize,
    seed: u64,
) -> Result<Vec<PretextSample<T>>> {
    let ctx = BatchContext::new(codebook.clone(), resolution);
    Ok(make_batch::<T>(records, seed, &ctx)?
        .into_iter()
        .map(|item| item.sample)
        .collect())
}

/// Scores a model on `records` and returns a builder holding everything
/// except the identity fields (checkpoint, corpus, config).
pub fn evaluate<T: Scalar>(
    model: &ChartModel<T>,
    records: &[&ChartRecord],
    codebook: &PermutationCodebook,
    mode: LevelMode,
    seed: u64,
) -> Result<EvalReportBuilder> {
    let scores = level_split_eval(model, records, mode)?;
    let samples = eval_samples::<T>(records, codebook, model.config.resolution, seed)?;
    let acc = pretext_accuracy(model, &samples)?;
    Ok(EvalReport::builder()
        .bleu(scores.l1, scores.l2l3)
        .accuracy(acc)
        .sample_count(records.len())
        .level_mode(mode.as_str()))
}
