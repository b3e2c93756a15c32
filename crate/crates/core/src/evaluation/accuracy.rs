use pretext_forge_autograd::{Scalar, Tape};

use crate::error::{Error, Result};
use crate::models::{argmax, ChartModel};
use crate::pretext::{PretextSample, TaskKind};

/// Fraction of correct predictions per classification task. `None` when a
/// task had no samples.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PretextAccuracy {
    pub rotation: Option<f64>,
    pub puzzle: Option<f64>,
    pub categ: Option<f64>,
}

impl PretextAccuracy {
    pub fn entries(&self) -> [(&'static str, Option<f64>); 3] {
        [
            ("rotation", self.rotation),
            ("puzzle", self.puzzle),
            ("categ", self.categ),
        ]
    }

    /// Mean over the tasks that were measured.
    pub fn mean(&self) -> Option<f64> {
        let v: Vec<f64> = self.entries().iter().filter_map(|e| e.1).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Anything that predicts a class for a classification pretext sample.
pub trait PretextClassifier<T> {
    /// `Ok(None)` for samples that are not classification tasks.
    fn predict(&self, sample: &PretextSample<T>) -> Result<Option<usize>>;
}

impl<T: Scalar> PretextClassifier<T> for ChartModel<T> {
    fn predict(&self, sample: &PretextSample<T>) -> Result<Option<usize>> {
        let mut t = Tape::new();
        let logits = match sample {
            PretextSample::Rotation(s) => {
                let x = self.image_input(&mut t, &s.image)?;
                let f = self.features_var(&mut t, x)?;
                self.rotation_logits(&mut t, f)?
            }
            PretextSample::Category(s) => {
                let x = self.image_input(&mut t, &s.image)?;
                let f = self.features_var(&mut t, x)?;
                self.categ_logits(&mut t, f)?
            }
            PretextSample::Jigsaw(s) => {
                let mut feats = Vec::with_capacity(s.tiles.len());
                for tile in &s.tiles {
                    let x = self.tile_input(&mut t, tile)?;
                    feats.push(self.features_var(&mut t, x)?);
                }
                self.puzzle_logits(&mut t, &feats)?
            }
            PretextSample::Colorization(_) => return Ok(None),
        };
        Ok(Some(argmax(t.value(logits).data())))
    }
}

/// Per-task ratio of correct predictions. Colorization samples are ignored.
pub fn pretext_accuracy<T, M: PretextClassifier<T> + ?Sized>(
    model: &M,
    samples: &[PretextSample<T>],
) -> Result<PretextAccuracy> {
    let mut tally = [(0usize, 0usize); 3];
    for s in samples {
        let slot = match s.kind() {
            TaskKind::Rotation => 0,
            TaskKind::Jigsaw => 1,
            TaskKind::Category => 2,
            TaskKind::Colorization => continue,
        };
        let pred = model.predict(s)?;
        tally[slot].1 += 1;
        if pred.is_some() && pred == s.label() {
            tally[slot].0 += 1;
        }
    }
    if tally.iter().all(|t| t.1 == 0) {
        return Err(Error::EmptyInput("no classification samples".into()));
    }
    let ratio = |(c, n): (usize, usize)| (n > 0).then(|| c as f64 / n as f64);
    Ok(PretextAccuracy {
        rotation: ratio(tally[0]),
        puzzle: ratio(tally[1]),
        categ: ratio(tally[2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretext::{CategorySample, RotationSample};
    use crate::raster::RgbImage;

    /// Predicts a fixed class per sample position, keyed by image width.
    struct Lookup(Vec<usize>);

    impl PretextClassifier<f64> for Lookup {
        fn predict(&self, s: &PretextSample<f64>) -> Result<Option<usize>> {
            Ok(match s {
                PretextSample::Rotation(r) => Some(self.0[r.image.width() - 1]),
                PretextSample::Category(c) => Some(self.0[c.image.width() - 1]),
                _ => None,
            })
        }
    }

    fn rotations(labels: &[usize]) -> Vec<PretextSample<f64>> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                PretextSample::Rotation(RotationSample {
                    image: RgbImage::new(i + 1, 1),
                    label: l,
                })
            })
            .collect()
    }

    #[test]
    fn counted_fixture() {
        let labels = [0, 1, 2, 3, 0, 1, 2, 3, 0, 1];
        let mut preds = labels.to_vec();
        for p in &mut preds[7..] {
            *p = (*p + 1) % 4;
        }
        let acc = pretext_accuracy(&Lookup(preds), &rotations(&labels)).unwrap();
        assert_eq!(acc.rotation, Some(0.7));
        assert_eq!(acc.puzzle, None);
        assert_eq!(acc.mean(), Some(0.7));
    }

    #[test]
    fn all_right_and_all_wrong() {
        let labels = [3, 1, 2];
        let right = pretext_accuracy(&Lookup(labels.to_vec()), &rotations(&labels)).unwrap();
        assert_eq!(right.rotation, Some(1.0));
        let wrong: Vec<usize> = labels.iter().map(|l| (l + 1) % 4).collect();
        let acc = pretext_accuracy(&Lookup(wrong), &rotations(&labels)).unwrap();
        assert_eq!(acc.rotation, Some(0.0));
    }

    #[test]
    fn order_invariant_and_empty() {
        let labels = [0, 1, 1, 2, 3];
        let mut samples = rotations(&labels);
        samples.push(PretextSample::Category(CategorySample {
            image: RgbImage::new(6, 1),
            label: 5,
        }));
        let preds = vec![0, 2, 1, 2, 0, 5];
        let a = pretext_accuracy(&Lookup(preds.clone()), &samples).unwrap();
        samples.reverse();
        assert_eq!(pretext_accuracy(&Lookup(preds), &samples).unwrap(), a);
        assert_eq!(a.categ, Some(1.0));
        assert!(matches!(
            pretext_accuracy::<f64, _>(&Lookup(vec![]), &[]),
            Err(Error::EmptyInput(_))
        ));
    }
}
