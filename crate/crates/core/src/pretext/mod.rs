//! Pretext-task sample generation: rotation, jigsaw, colorization and
//! category labels derived from chart images.

mod batch;
mod codebook;
mod transforms;

pub use batch::{
    make_batch, BatchContext, BatchItem, LabelSampler, PretextSample, SampleLabels, TaskKind,
};
pub use codebook::{
    hamming, PermutationCodebook, ALGORITHM, CACHE_ENV, DEFAULT_COUNT, DEFAULT_GRID,
};
pub use transforms::{
    colorization_pair, jigsaw, jigsaw_with, reassemble, rotate, rotate_image, CategorySample,
    ColorizationSample, JigsawGeometry, JigsawSample, RotationSample,
};
