use std::fmt::Write as _;

use pretext_forge_autograd::Scalar;

use super::config::TrainConfig;
use super::finetune::finetune;
use super::pretrain::pretrain;
use super::{held_out_records, training_records};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::evaluation::{eval_samples, pretext_accuracy, token_accuracy};
use crate::fsutil::write_atomic;
use crate::losses::LossWeights;
use crate::models::{save_checkpoint, CheckpointMeta};
use crate::pretext::PermutationCodebook;

#[derive(Clone, Debug, PartialEq)]
pub struct AblationVariant {
    pub name: &'static str,
    pub weights: LossWeights,
}

/// Self-supervised only (no category term), supervised only (category term
/// alone) and all four tasks.
pub fn ablation_variants(base: &LossWeights) -> [AblationVariant; 3] {
    [
        AblationVariant {
            name: "self_supervised",
            weights: base.self_supervised(),
        },
        AblationVariant {
            name: "supervised",
            weights: base.supervised(),
        },
        AblationVariant {
            name: "combined",
            weights: *base,
        },
    ]
}

/// Held-out measurements of one variant trained with one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationRun {
    pub variant: String,
    pub seed: u64,
    /// Mean accuracy over rotation, puzzle and category prediction.
    pub pretext_accuracy: f64,
    /// Teacher-forced next-token accuracy after fine-tuning.
    pub token_accuracy: f64,
    pub final_pretext_loss: f64,
    pub final_finetune_loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariantSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl VariantSummary {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    pub fn half_range(&self) -> f64 {
        (self.max - self.min) / 2.0
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AblationReport {
    pub runs: Vec<AblationRun>,
}

impl AblationReport {
    pub fn runs_of<'a>(&'a self, variant: &'a str) -> impl Iterator<Item = &'a AblationRun> + 'a {
        self.runs.iter().filter(move |r| r.variant == variant)
    }

    pub fn run(&self, variant: &str, seed: u64) -> Option<&AblationRun> {
        self.runs
            .iter()
            .find(|r| r.variant == variant && r.seed == seed)
    }

    /// Pretext and token accuracy summaries of one variant.
    pub fn summary(&self, variant: &str) -> Option<(VariantSummary, VariantSummary)> {
        let p: Vec<f64> = self.runs_of(variant).map(|r| r.pretext_accuracy).collect();
        let t: Vec<f64> = self.runs_of(variant).map(|r| r.token_accuracy).collect();
        Some((VariantSummary::of(&p)?, VariantSummary::of(&t)?))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "variant          seed  pretext_acc  token_acc  pretext_loss  finetune_loss"
        );
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{:<16} {:>4}  {:>11.4}  {:>9.4}  {:>12.4}  {:>13.4}",
                r.variant,
                r.seed,
                r.pretext_accuracy,
                r.token_accuracy,
                r.final_pretext_loss,
                r.final_finetune_loss
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "variant          pretext_acc (mean ± half-range)  token_acc (mean ± half-range)"
        );
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.runs {
            if seen.contains(&r.variant.as_str()) {
                continue;
            }
            seen.push(&r.variant);
            if let Some((p, t)) = self.summary(&r.variant) {
                let _ = writeln!(
                    s,
                    "{:<16} {:.4} ± {:.4}                  {:.4} ± {:.4}",
                    r.variant,
                    p.mean,
                    p.half_range(),
                    t.mean,
                    t.half_range()
                );
            }
        }
        s
    }
}

/// Trains each variant with each seed: pretext pretraining with the
/// variant's weights, then identical fine-tuning, then held-out scoring.
///
/// When `config.checkpoint_dir` is set, the fine-tuned model of every run is
/// saved as `<variant>-seed<seed>.ckpt` next to `ablation.txt`.
pub fn run_ablation<T: Scalar>(
    corpus: &Corpus,
    codebook: &PermutationCodebook,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<AblationReport> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let train = training_records(corpus);
    let held = held_out_records(corpus);
    let mut report = AblationReport::default();
    for &seed in seeds {
        for variant in ablation_variants(&config.weights) {
            let mut c = config.clone();
            c.seed = seed;
            c.weights = variant.weights;
            c.checkpoint_dir = None;
            let pre = pretrain::<T>(&train, codebook, &c)?;
            let samples = eval_samples::<T>(&held, codebook, c.model.resolution, seed ^ 0xA11CE)?;
            let pretext_acc = pretext_accuracy(&pre.model, &samples)?
                .mean()
                .unwrap_or(0.0);
            // identical fine-tuning for every variant of a seed
            let mut f = config.clone();
            f.seed = seed;
            f.checkpoint_dir = None;
            let fine = finetune(&train, &pre.model, &f)?;
            let tok = token_accuracy(&fine.model, &held, f.level_mode)?;
            if let Some(dir) = &config.checkpoint_dir {
                let meta = CheckpointMeta {
                    stage: "finetune".into(),
                    step: fine.state.step,
                    epoch: fine.state.epoch,
                    seed,
                    extra: [
                        ("config_hash".to_string(), f.hash()),
                        ("variant".to_string(), variant.name.to_string()),
                    ]
                    .into(),
                };
                save_checkpoint(
                    &dir.join(format!("{}-seed{seed}.ckpt", variant.name)),
                    &fine.model,
                    &meta,
                )?;
            }
            report.runs.push(AblationRun {
                variant: variant.name.into(),
                seed,
                pretext_accuracy: pretext_acc,
                token_accuracy: tok,
                final_pretext_loss: pre.state.history.last().map_or(f64::NAN, |r| r.total),
                final_finetune_loss: fine.state.history.last().copied().unwrap_or(f64::NAN),
            });
        }
    }
    if let Some(dir) = &config.checkpoint_dir {
        write_atomic(&dir.join("ablation.txt"), report.to_text().as_bytes())?;
    }
    Ok(report)
}
