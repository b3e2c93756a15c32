use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pretext_forge_autograd::Scalar;

use super::codebook::PermutationCodebook;
use super::transforms::{
    colorization_pair, jigsaw_with, rotate, CategorySample, ColorizationSample, JigsawGeometry,
    JigsawSample, RotationSample,
};
use crate::corpus::ChartRecord;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    Rotation,
    Jigsaw,
    Colorization,
    Category,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Rotation => "rotation",
            TaskKind::Jigsaw => "jigsaw",
            TaskKind::Colorization => "colorization",
            TaskKind::Category => "category",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PretextSample<T> {
    Rotation(RotationSample),
    Jigsaw(JigsawSample),
    Colorization(ColorizationSample<T>),
    Category(CategorySample),
}

impl<T> PretextSample<T> {
    pub fn kind(&self) -> TaskKind {
        match self {
            PretextSample::Rotation(_) => TaskKind::Rotation,
            PretextSample::Jigsaw(_) => TaskKind::Jigsaw,
            PretextSample::Colorization(_) => TaskKind::Colorization,
            PretextSample::Category(_) => TaskKind::Category,
        }
    }

    /// Class label for the classification tasks.
    pub fn label(&self) -> Option<usize> {
        match self {
            PretextSample::Rotation(s) => Some(s.label),
            PretextSample::Jigsaw(s) => Some(s.label),
            PretextSample::Category(s) => Some(s.label),
            PretextSample::Colorization(_) => None,
        }
    }
}

/// A sample and the record it was generated from.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchItem<T> {
    pub source: String,
    pub sample: PretextSample<T>,
}

/// Random choices for one record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleLabels {
    pub rotation: usize,
    pub perm_index: usize,
    pub jitter_seed: u64,
}

/// Draws the per-record labels. Record `i` of a batch uses stream `i` of a
/// ChaCha8 generator seeded with the batch seed, so labels do not depend on
/// how many records precede it.
#[derive(Clone, Debug)]
pub struct LabelSampler {
    seed: u64,
    perm_count: usize,
}

impl LabelSampler {
    pub fn new(seed: u64, perm_count: usize) -> Self {
        Self { seed, perm_count }
    }

    pub fn labels(&self, record_index: usize) -> SampleLabels {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(record_index as u64);
        SampleLabels {
            rotation: rng.random_range(0..4),
            perm_index: rng.random_range(0..self.perm_count),
            jitter_seed: rng.random(),
        }
    }
}

/// Shared settings for turning images into pretext samples.
#[derive(Clone, Debug)]
pub struct BatchContext {
    pub codebook: PermutationCodebook,
    pub geometry: JigsawGeometry,
    /// Square side length for rotation, colorization and category inputs.
    pub resolution: usize,
}

impl BatchContext {
    pub fn new(codebook: PermutationCodebook, resolution: usize) -> Self {
        Self {
            codebook,
            geometry: JigsawGeometry::default(),
            resolution,
        }
    }

    pub fn fit(&self, img: &RgbImage) -> RgbImage {
        if img.width() == self.resolution && img.height() == self.resolution {
            img.clone()
        } else {
            img.resize_bilinear(self.resolution, self.resolution)
        }
    }

    /// The four samples of one image, in task order.
    pub fn samples_for<T: Scalar>(
        &self,
        img: &RgbImage,
        labels: SampleLabels,
        category: usize,
    ) -> Result<[PretextSample<T>; 4]> {
        let fitted = self.fit(img);
        Ok([
            PretextSample::Rotation(rotate(&fitted, labels.rotation)?),
            PretextSample::Jigsaw(jigsaw_with(
                img,
                labels.perm_index,
                labels.jitter_seed,
                &self.codebook,
                &self.geometry,
            )?),
            PretextSample::Colorization(colorization_pair(&fitted)),
            PretextSample::Category(CategorySample {
                image: fitted,
                label: category,
            }),
        ])
    }
}

/// Four samples per record (rotation, jigsaw, colorization, category), in
/// record order.
pub fn make_batch<T: Scalar>(
    records: &[&ChartRecord],
    rng_seed: u64,
    ctx: &BatchContext,
) -> Result<Vec<BatchItem<T>>> {
    let sampler = LabelSampler::new(rng_seed, ctx.codebook.len());
    let mut out = Vec::with_capacity(records.len() * 4);
    for (i, r) in records.iter().enumerate() {
        let img = r.load_image()?;
        let samples = ctx
            .samples_for(&img, sampler.labels(i), r.chart_type.index())
            .map_err(|e| Error::in_record(&r.id, e))?;
        out.extend(samples.into_iter().map(|sample| BatchItem {
            source: r.id.clone(),
            sample,
        }));
    }
    Ok(out)
}
