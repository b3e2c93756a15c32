use pretext_forge_autograd::{Scalar, Tape};

use super::bleu::corpus_bleu;
use crate::corpus::{ChartRecord, Level};
use crate::error::{Error, Result};
use crate::models::{argmax, ChartModel};
use crate::raster::RgbImage;
use crate::trainer::{summary_sequences, LevelMode};

/// Produces a summary for a record, optionally conditioned on a level.
pub trait SummaryGenerator {
    fn generate(&self, record: &ChartRecord, level: Option<Level>) -> Result<String>;
}

/// Resizes to the model's input side when needed.
pub fn fit_image(img: &RgbImage, side: usize) -> RgbImage {
    if img.width() == side && img.height() == side {
        img.clone()
    } else {
        img.resize_bilinear(side, side)
    }
}

impl<T: Scalar> SummaryGenerator for ChartModel<T> {
    fn generate(&self, record: &ChartRecord, level: Option<Level>) -> Result<String> {
        let img = fit_image(&record.load_image()?, self.config.resolution);
        self.summarize_text(&img, level, self.config.max_len)
            .map_err(|e| Error::in_record(&record.id, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelScores {
    pub l1: f64,
    pub l2l3: f64,
}

/// BLEU per semantic level.
///
/// In token mode each record gets one generation per level, started from
/// that level's control token and scored against the record's sentences of
/// that level. In filtered mode one unconditioned generation per record is
/// scored against each level's sentences. Records without sentences of a
/// level do not contribute to that level's score.
pub fn level_split_eval<G: SummaryGenerator + ?Sized>(
    generator: &G,
    records: &[&ChartRecord],
    mode: LevelMode,
) -> Result<LevelScores> {
    let mut hyps: [Vec<String>; 2] = Default::default();
    let mut refs: [Vec<String>; 2] = Default::default();
    for r in records {
        let shared = match mode {
            LevelMode::Filtered => Some(generator.generate(r, None)?),
            LevelMode::Token => None,
        };
        for (i, level) in [Level::L1, Level::L2L3].into_iter().enumerate() {
            let reference = r.summary.level_text(level);
            if reference.is_empty() {
                continue;
            }
            let hyp = match &shared {
                Some(h) => h.clone(),
                None => generator.generate(r, Some(level))?,
            };
            hyps[i].push(hyp);
            refs[i].push(reference);
        }
    }
    let score = |i: usize, name: &str| {
        if refs[i].is_empty() {
            return Err(Error::EmptyInput(format!("no {name} reference sentences")));
        }
        corpus_bleu(&hyps[i], &refs[i])
    };
    Ok(LevelScores {
        l1: score(0, "L1")?,
        l2l3: score(1, "L2/L3")?,
    })
}

/// Teacher-forced next-token accuracy of the summarizer over the records'
/// training sequences (EOS included).
pub fn token_accuracy<T: Scalar>(
    model: &ChartModel<T>,
    records: &[&ChartRecord],
    mode: LevelMode,
) -> Result<f64> {
    let sum = model
        .summarizer()
        .ok_or_else(|| Error::Config("model has no summarizer".into()))?;
    let (mut correct, mut total) = (0usize, 0usize);
    for r in records {
        let img = fit_image(&r.load_image()?, model.config.resolution);
        for (start, text) in summary_sequences(&r.summary, mode) {
            let mut t = Tape::new();
            let x = model.image_input(&mut t, &img)?;
            let f = model.features_var(&mut t, x)?;
            let (_, logits, targets) =
                sum.sequence_loss(&mut t, &model.store, f, start, &text, model.config.max_len)?;
            for (l, &y) in logits.iter().zip(&targets) {
                correct += usize::from(argmax(t.value(*l).data()) == y);
                total += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput("no summary tokens".into()));
    }
    Ok(correct as f64 / total as f64)
}
