use std::time::Instant;

use pretext_forge_autograd::{Optimizer, Scalar, Tape, Var};

use super::config::{LevelMode, TrainConfig};
use super::pretrain::{make_optimizer, preload, TrainOutcome};
use super::{epoch_order, write_log, TrainState};
use crate::corpus::{ChartRecord, ImageRef, Level, TaggedSummary};
use crate::error::{Error, Result};
use crate::evaluation::fit_image;
use crate::models::{save_checkpoint, ChartModel, CheckpointMeta, Vocab, BOS, SUMMARIZER_PREFIX};
use crate::raster::RgbImage;

/// Target sequences of one summary as `(start token, text)` pairs.
///
/// Token mode yields one sequence per level that has sentences, started from
/// the level's control token. Filtered mode yields the whole summary after
/// BOS.
pub fn summary_sequences(summary: &TaggedSummary, mode: LevelMode) -> Vec<(usize, String)> {
    match mode {
        LevelMode::Token => [Level::L1, Level::L2L3]
            .into_iter()
            .filter_map(|l| {
                let text = summary.level_text(l);
                (!text.is_empty()).then(|| (Vocab::level_token(l), text))
            })
            .collect(),
        LevelMode::Filtered => {
            let text = summary.text.trim();
            if text.is_empty() {
                vec![]
            } else {
                vec![(BOS, text.to_string())]
            }
        }
    }
}

/// Character vocabulary of the records' summaries.
pub fn build_vocab(records: &[&ChartRecord]) -> Vocab {
    Vocab::from_texts(records.iter().map(|r| r.summary.text.as_str()))
}

/// An image at model resolution with its target sequences.
pub struct FinetuneExample {
    pub id: String,
    pub image: RgbImage,
    pub sequences: Vec<(usize, String)>,
}

/// One teacher-forced update. Returns the mean sequence loss.
pub fn finetune_step<T: Scalar>(
    model: &mut ChartModel<T>,
    opt: &mut dyn Optimizer<T>,
    batch: &[&FinetuneExample],
    step: usize,
) -> Result<f64> {
    let sum = model
        .summarizer()
        .ok_or_else(|| Error::Config("model has no summarizer".into()))?
        .clone();
    let max_len = model.config.max_len;
    let mut t = Tape::new();
    let mut losses: Vec<Var> = Vec::new();
    for ex in batch {
        let x = model
            .image_input(&mut t, &ex.image)
            .map_err(|e| Error::in_record(&ex.id, e))?;
        let f = model.features_var(&mut t, x)?;
        for (start, text) in &ex.sequences {
            let (loss, _, _) = sum.sequence_loss(&mut t, &model.store, f, *start, text, max_len)?;
            losses.push(loss);
        }
    }
    if losses.is_empty() {
        return Err(Error::EmptyInput(
            "fine-tuning batch has no summaries".into(),
        ));
    }
    let w = T::lit(1.0 / losses.len() as f64);
    let terms: Vec<(Var, T)> = losses.iter().map(|&l| (l, w)).collect();
    let total = t.weighted_sum(&terms)?;
    let value = t.item(total).as_f64();
    if !value.is_finite() {
        return Err(Error::NonFiniteFinetuneLoss { step });
    }
    let grads = t.backward(total);
    if !grads.all_finite() {
        return Err(Error::NonFiniteFinetuneLoss { step });
    }
    opt.step(&mut model.store, &grads);
    Ok(value)
}

fn finetune_meta(config: &TrainConfig, state: &TrainState<f64>) -> CheckpointMeta {
    CheckpointMeta {
        stage: "finetune".into(),
        step: state.step,
        epoch: state.epoch,
        seed: config.seed,
        extra: [("config_hash".to_string(), config.hash())].into(),
    }
}

/// Summarization fine-tuning of every component, starting from a pretext
/// model. The summarizer is created fresh with a vocabulary drawn from the
/// records; all other parameters are copied from `pretext`.
pub fn finetune<T: Scalar>(
    records: &[&ChartRecord],
    pretext: &ChartModel<T>,
    config: &TrainConfig,
) -> Result<TrainOutcome<T, f64>> {
    config.validate()?;
    let data = preload(records)?;
    let examples: Vec<FinetuneExample> = data
        .iter()
        .map(|r| {
            let ImageRef::Raster(img) = &r.image else {
                unreachable!("preloaded")
            };
            FinetuneExample {
                id: r.id.clone(),
                image: fit_image(img, pretext.config.resolution),
                sequences: summary_sequences(&r.summary, config.level_mode),
            }
        })
        .filter(|e| !e.sequences.is_empty())
        .collect();
    if examples.is_empty() {
        return Err(Error::EmptyInput("no records with summaries".into()));
    }
    let refs: Vec<&ChartRecord> = data.iter().collect();
    let mut model = ChartModel::<T>::new(
        pretext.config.clone(),
        config.seed,
        Some(build_vocab(&refs)),
    )?;
    model.copy_params_from(&pretext.store, |name| !name.starts_with(SUMMARIZER_PREFIX))?;

    let mut opt = make_optimizer::<T>(config.optimizer, config.learning_rate);
    let mut state = TrainState::new(config.seed);
    let mut log = Vec::new();
    let started = Instant::now();
    let dir = config.checkpoint_dir.as_deref();
    for epoch in 0..config.finetune_epochs {
        for chunk in epoch_order(examples.len(), config.seed, epoch).chunks(config.batch_size) {
            let batch: Vec<&FinetuneExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let loss = finetune_step(&mut model, opt.as_mut(), &batch, state.step)?;
            log.push(format!(
                "step={} loss={loss:?} batch_size={} wall={:.3}",
                state.step,
                batch.len(),
                started.elapsed().as_secs_f64()
            ));
            state.push(loss);
        }
        state.epoch = epoch + 1;
        if let Some(dir) = dir {
            let path = dir.join(format!("finetune-epoch{}.ckpt", epoch + 1));
            save_checkpoint(&path, &model, &finetune_meta(config, &state))?;
            write_log(&dir.join("finetune.log"), &log)?;
        }
    }
    if let Some(dir) = dir {
        save_checkpoint(
            &dir.join("finetune.ckpt"),
            &model,
            &finetune_meta(config, &state),
        )?;
        write_log(&dir.join("finetune.log"), &log)?;
    }
    Ok(TrainOutcome { model, state })
}
