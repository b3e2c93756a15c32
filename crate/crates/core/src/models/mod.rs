//! Toy vision encoder, pretext heads, colorization generator and
//! discriminator, and a character-level summarizer, all sharing one
//! parameter store.

mod checkpoint;
mod config;
mod layers;
mod summarizer;
mod vision;

use pretext_forge_autograd::{ParamStore, Scalar, Tape, Tensor, Var};

use crate::colorspace::{AbImage, GrayImage};
use crate::corpus::Level;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointMeta,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::ModelConfig;
pub use layers::{Conv, Dense, ResBlock};
pub use summarizer::{
    argmax, DecoderState, Summarizer, Vocab, BOS, EOS, L1_TOKEN, L2L3_TOKEN, UNK,
};
pub use vision::{ClassHead, Discriminator, Encoder, Generator, PuzzleHead};

pub const ROTATION_CLASSES: usize = 4;
pub const CATEGORY_CLASSES: usize = 8;
/// Side length of jigsaw tiles.
pub const TILE_SIZE: usize = 64;

/// Classification heads over encoder features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeadTask {
    Rotation,
    Puzzle,
    Categ,
}

impl HeadTask {
    pub const ALL: [HeadTask; 3] = [HeadTask::Rotation, HeadTask::Puzzle, HeadTask::Categ];

    pub fn as_str(self) -> &'static str {
        match self {
            HeadTask::Rotation => "rotation",
            HeadTask::Puzzle => "puzzle",
            HeadTask::Categ => "categ",
        }
    }
}

/// Every trainable component, with parameters in one named store.
#[derive(Clone, Debug)]
pub struct ChartModel<T> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    encoder: Encoder,
    rotation: ClassHead,
    puzzle: PuzzleHead,
    categ: ClassHead,
    generator: Generator,
    discriminator: Discriminator,
    summarizer: Option<Summarizer>,
}

pub const ENCODER_PREFIX: &str = "encoder.";
pub const DISCRIMINATOR_PREFIX: &str = "discriminator.";
pub const SUMMARIZER_PREFIX: &str = "summarizer.";

impl<T: Scalar> ChartModel<T> {
    /// Fresh model. The summarizer is only built when a vocabulary is given.
    pub fn new(config: ModelConfig, seed: u64, vocab: Option<Vocab>) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new(seed);
        let c = config.feature_channels();
        let encoder = Encoder::new(&mut store, &config.encoder_channels);
        let rotation = ClassHead::new(&mut store, "head.rotation", c, ROTATION_CLASSES);
        let puzzle = PuzzleHead::new(
            &mut store,
            "head.puzzle",
            c,
            config.tiles,
            config.puzzle_classes,
        );
        let categ = ClassHead::new(&mut store, "head.categ", c, CATEGORY_CLASSES);
        let generator = Generator::new(&mut store, &config.encoder_channels);
        let discriminator = Discriminator::new(&mut store, &config.disc_channels);
        let summarizer = vocab.map(|v| {
            Summarizer::new(
                &mut store,
                v,
                c,
                config.embed_dim,
                config.hidden_dim,
                config.context_dim,
            )
        });
        Ok(Self {
            config,
            store,
            encoder,
            rotation,
            puzzle,
            categ,
            generator,
            discriminator,
            summarizer,
        })
    }

    pub fn param_count(&self) -> usize {
        self.store.numel()
    }

    /// Parameter count of the components whose names start with `prefix`.
    pub fn param_count_with_prefix(&self, prefix: &str) -> usize {
        self.store
            .ids_with_prefix(prefix)
            .map(|id| self.store.get(id).len())
            .sum()
    }

    pub fn summarizer(&self) -> Option<&Summarizer> {
        self.summarizer.as_ref()
    }

    pub fn vocab(&self) -> Option<&Vocab> {
        self.summarizer.as_ref().map(Summarizer::vocab)
    }

    /// Copies every parameter of `other` whose name passes `keep` and exists
    /// here with the same shape. Returns the number copied.
    pub fn copy_params_from(
        &mut self,
        other: &ParamStore<T>,
        keep: impl Fn(&str) -> bool,
    ) -> Result<usize> {
        let mut n = 0;
        for (name, t) in other.iter() {
            if keep(name) && self.store.find(name).is_some() {
                self.store.assign(name, t.clone())?;
                n += 1;
            }
        }
        Ok(n)
    }

    fn check_side(&self, w: usize, h: usize) -> Result<()> {
        if w != self.config.resolution || h != self.config.resolution {
            return Err(Error::ResolutionMismatch {
                expected: self.config.resolution,
                width: w,
                height: h,
            });
        }
        Ok(())
    }

    /// Constant `[3, R, R]` input; fails unless the image is `R x R`.
    pub fn image_input(&self, t: &mut Tape<T>, img: &RgbImage) -> Result<Var> {
        self.check_side(img.width(), img.height())?;
        Ok(t.input(img.to_tensor()))
    }

    /// Constant input for a jigsaw tile.
    pub fn tile_input(&self, t: &mut Tape<T>, tile: &RgbImage) -> Result<Var> {
        if tile.width() != TILE_SIZE || tile.height() != TILE_SIZE {
            return Err(Error::Shape(format!(
                "jigsaw tiles must be {TILE_SIZE}x{TILE_SIZE}, got {}x{}",
                tile.width(),
                tile.height()
            )));
        }
        Ok(t.input(tile.to_tensor()))
    }

    /// The gray image as `[1, R, R]` and replicated to `[3, R, R]` for the
    /// encoder.
    pub fn gray_inputs(&self, t: &mut Tape<T>, gray: &GrayImage<T>) -> Result<(Var, Var)> {
        self.check_side(gray.width, gray.height)?;
        let g1 = t.input(gray.to_tensor());
        let rep = gray.data.repeat(3);
        let g3 = t.input(Tensor::from_vec(&[3, gray.height, gray.width], rep)?);
        Ok((g1, g3))
    }

    /// Every encoder stage output; the last is the feature map.
    pub fn encode_var(&self, t: &mut Tape<T>, x: Var) -> Result<Vec<Var>> {
        self.encoder.forward(t, &self.store, x)
    }

    pub fn features_var(&self, t: &mut Tape<T>, x: Var) -> Result<Var> {
        Ok(*self.encode_var(t, x)?.last().expect("encoder has stages"))
    }

    pub fn rotation_logits(&self, t: &mut Tape<T>, features: Var) -> Result<Var> {
        self.rotation.forward(t, &self.store, features)
    }

    pub fn categ_logits(&self, t: &mut Tape<T>, features: Var) -> Result<Var> {
        self.categ.forward(t, &self.store, features)
    }

    pub fn puzzle_logits(&self, t: &mut Tape<T>, tile_features: &[Var]) -> Result<Var> {
        self.puzzle.forward(t, &self.store, tile_features)
    }

    /// Normalized ab prediction `[2, R, R]` in `[-1, 1]`.
    pub fn generator_var(&self, t: &mut Tape<T>, skips: &[Var], gray1: Var) -> Result<Var> {
        self.generator.forward(t, &self.store, skips, gray1)
    }

    /// Discriminator probability for a gray `[1, R, R]` and ab `[2, R, R]` pair.
    pub fn discriminator_var(&self, t: &mut Tape<T>, gray1: Var, ab: Var) -> Result<Var> {
        let pair = t.concat(&[gray1, ab])?;
        self.discriminator.forward(t, &self.store, pair)
    }

    /// Same as [`ChartModel::discriminator_var`] but reading parameters from
    /// another store (used for the discriminator's own update).
    pub fn discriminator_var_with(
        &self,
        t: &mut Tape<T>,
        store: &ParamStore<T>,
        gray1: Var,
        ab: Var,
    ) -> Result<Var> {
        let pair = t.concat(&[gray1, ab])?;
        self.discriminator.forward(t, store, pair)
    }

    /// Encoder feature map of an `R x R` image.
    pub fn encode(&self, img: &RgbImage) -> Result<Tensor<T>> {
        let mut t = Tape::new();
        let x = self.image_input(&mut t, img)?;
        let f = self.features_var(&mut t, x)?;
        Ok(t.value(f).clone())
    }

    /// Feature maps of several images stacked to `[B, C, H', W']`.
    pub fn encode_batch(&self, imgs: &[RgbImage]) -> Result<Tensor<T>> {
        let mut t = Tape::new();
        let mut feats = Vec::with_capacity(imgs.len());
        for img in imgs {
            let x = self.image_input(&mut t, img)?;
            feats.push(self.features_var(&mut t, x)?);
        }
        let stacked = t.stack(&feats)?;
        Ok(t.value(stacked).clone())
    }

    /// Logits of a classification head. For the puzzle head, `features`
    /// holds the tile feature maps concatenated along channels.
    pub fn head_forward(&self, task: HeadTask, features: &Tensor<T>) -> Result<Tensor<T>> {
        let (c, h, w) = self.config.feature_shape_for(TILE_SIZE);
        let mut t = Tape::new();
        let logits = match task {
            HeadTask::Rotation | HeadTask::Categ => {
                let s = features.shape();
                if s.len() != 3 || s[0] != c {
                    return Err(Error::Shape(format!(
                        "head input {s:?}, expected [{c}, H, W]"
                    )));
                }
                let f = t.input(features.clone());
                if task == HeadTask::Rotation {
                    self.rotation_logits(&mut t, f)?
                } else {
                    self.categ_logits(&mut t, f)?
                }
            }
            HeadTask::Puzzle => {
                let n = self.config.tiles;
                if features.shape() != [n * c, h, w] {
                    return Err(Error::Shape(format!(
                        "puzzle head input {:?}, expected [{}, {h}, {w}]",
                        features.shape(),
                        n * c
                    )));
                }
                let tiles = features
                    .data()
                    .chunks(c * h * w)
                    .map(|d| Ok(t.input(Tensor::from_vec(&[c, h, w], d.to_vec())?)))
                    .collect::<Result<Vec<_>>>()?;
                self.puzzle_logits(&mut t, &tiles)?
            }
        };
        Ok(t.value(logits).clone())
    }

    /// Feature maps of jigsaw tiles concatenated along channels.
    pub fn encode_tiles(&self, tiles: &[RgbImage]) -> Result<Tensor<T>> {
        let mut t = Tape::new();
        let mut feats = Vec::with_capacity(tiles.len());
        for tile in tiles {
            let x = self.tile_input(&mut t, tile)?;
            feats.push(self.features_var(&mut t, x)?);
        }
        let cat = t.concat(&feats)?;
        Ok(t.value(cat).clone())
    }

    /// Normalized ab map predicted from a gray image.
    pub fn generate_ab(&self, gray: &GrayImage<T>) -> Result<AbImage<T>> {
        let mut t = Tape::new();
        let (g1, g3) = self.gray_inputs(&mut t, gray)?;
        let skips = self.encode_var(&mut t, g3)?;
        let ab = self.generator_var(&mut t, &skips, g1)?;
        AbImage::from_tensor(t.value(ab))
    }

    pub fn discriminate(&self, gray: &GrayImage<T>, ab: &AbImage<T>) -> Result<T> {
        if gray.width != ab.width || gray.height != ab.height {
            return Err(Error::Shape(format!(
                "gray {}x{} vs ab {}x{}",
                gray.width, gray.height, ab.width, ab.height
            )));
        }
        let mut t = Tape::new();
        let (g1, _) = self.gray_inputs(&mut t, gray)?;
        let abv = t.input(ab.to_tensor());
        let p = self.discriminator_var(&mut t, g1, abv)?;
        Ok(t.item(p))
    }

    fn summarizer_or_err(&self) -> Result<&Summarizer> {
        self.summarizer
            .as_ref()
            .ok_or_else(|| Error::Config("model has no summarizer".into()))
    }

    /// Greedy token sequence for an image. `level` selects the control token
    /// used as the first input; `None` starts from BOS.
    pub fn summarize(
        &self,
        img: &RgbImage,
        level: Option<Level>,
        max_len: usize,
    ) -> Result<Vec<usize>> {
        let sum = self.summarizer_or_err()?;
        let mut t = Tape::new();
        let x = self.image_input(&mut t, img)?;
        let f = self.features_var(&mut t, x)?;
        let start = level.map_or(BOS, Vocab::level_token);
        sum.greedy(&self.store, &mut t, f, start, max_len)
    }

    pub fn summarize_text(
        &self,
        img: &RgbImage,
        level: Option<Level>,
        max_len: usize,
    ) -> Result<String> {
        let tokens = self.summarize(img, level, max_len)?;
        Ok(self.summarizer_or_err()?.vocab().decode(&tokens))
    }
}

pub type ChartModel32 = ChartModel<f32>;
pub type ChartModel64 = ChartModel<f64>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::to_grayscale;
    use proptest::prelude::*;

    fn model(vocab: Option<Vocab>) -> ChartModel<f64> {
        ChartModel::new(ModelConfig::desk(), 7, vocab).unwrap()
    }

    fn image(side: usize, seed: u8) -> RgbImage {
        let mut img = RgbImage::new(side, side);
        for y in 0..side {
            for x in 0..side {
                let v = (x * 3 + y * 5) as u8;
                img.put(x, y, [v.wrapping_add(seed), (x * 4) as u8, (y * 4) as u8]);
            }
        }
        img
    }

    #[test]
    fn shapes_and_determinism() {
        let m = model(None);
        let img = image(64, 1);
        let f = m.encode(&img).unwrap();
        assert_eq!(f.shape(), &[32, 4, 4]);
        assert_eq!(f, m.encode(&img).unwrap());
        assert!(matches!(
            m.encode(&image(32, 0)),
            Err(Error::ResolutionMismatch { .. })
        ));
        let b = m
            .encode_batch(&[image(64, 1), image(64, 2), image(64, 3)])
            .unwrap();
        assert_eq!(b.shape(), &[3, 32, 4, 4]);
        assert_eq!(&b.data()[..f.len()], f.data());
        assert_eq!(m.head_forward(HeadTask::Rotation, &f).unwrap().len(), 4);
        assert_eq!(m.head_forward(HeadTask::Categ, &f).unwrap().len(), 8);
        let tiles: Vec<RgbImage> = (0..9).map(|i| image(64, i)).collect();
        let tf = m.encode_tiles(&tiles).unwrap();
        let p = m.head_forward(HeadTask::Puzzle, &tf).unwrap();
        assert_eq!(p.len(), 100);
        assert!(p.all_finite());
        assert!(m.head_forward(HeadTask::Puzzle, &f).is_err());
    }

    #[test]
    fn default_resolution_feature_shape() {
        let m: ChartModel<f32> = ChartModel::new(ModelConfig::default(), 1, None).unwrap();
        assert_eq!(m.encode(&image(224, 0)).unwrap().shape(), &[32, 14, 14]);
    }

    #[test]
    fn generator_and_discriminator_contracts() {
        let m = model(None);
        let gray = to_grayscale::<f64>(&image(64, 3));
        let ab = m.generate_ab(&gray).unwrap();
        assert_eq!((ab.width, ab.height), (64, 64));
        assert!(ab.data.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(ab, m.generate_ab(&gray).unwrap());
        let p = m.discriminate(&gray, &ab).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(p, m.discriminate(&gray, &ab).unwrap());
    }

    #[test]
    fn toy_budget() {
        let m: ChartModel<f32> = ChartModel::new(
            ModelConfig::default(),
            0,
            Some(Vocab::from_texts([
                "abcdefghijklmnopqrstuvwxyz ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,%",
            ])),
        )
        .unwrap();
        assert!(m.param_count() <= 2_000_000, "{}", m.param_count());
        assert!(m.param_count_with_prefix(ENCODER_PREFIX) > 0);
    }

    #[test]
    fn summarizer_contracts() {
        let m = model(Some(Vocab::from_texts(["abc ."])));
        let img = image(64, 2);
        assert!(m.summarize(&img, None, 0).unwrap().is_empty());
        let a = m.summarize(&img, Some(Level::L1), 20).unwrap();
        assert!(a.len() <= 20);
        assert_eq!(a, m.summarize(&img, Some(Level::L1), 20).unwrap());
        assert!(model(None).summarize(&img, None, 5).is_err());
    }

    #[test]
    fn combined_step_reaches_every_parameter() {
        use crate::losses::{batch_cross_entropy_node, generator_adv_node, l1_node, GanMode};
        let m = model(Some(Vocab::from_texts(["ab"])));
        let mut t = Tape::new();
        let img = image(64, 4);
        let x = m.image_input(&mut t, &img).unwrap();
        let f = m.features_var(&mut t, x).unwrap();
        let rot = m.rotation_logits(&mut t, f).unwrap();
        let cat = m.categ_logits(&mut t, f).unwrap();
        let tiles: Vec<Var> = (0..9)
            .map(|i| {
                let v = m.tile_input(&mut t, &image(64, i)).unwrap();
                m.features_var(&mut t, v).unwrap()
            })
            .collect();
        let puz = m.puzzle_logits(&mut t, &tiles).unwrap();
        let gray = to_grayscale::<f64>(&img);
        let (g1, g3) = m.gray_inputs(&mut t, &gray).unwrap();
        let skips = m.encode_var(&mut t, g3).unwrap();
        let ab = m.generator_var(&mut t, &skips, g1).unwrap();
        let p = m.discriminator_var(&mut t, g1, ab).unwrap();
        let adv = generator_adv_node(&mut t, p, GanMode::NonSaturating).unwrap();
        let target = Tensor::zeros(&[2, 64, 64]);
        let l1 = l1_node(&mut t, ab, &target).unwrap();
        let ce = batch_cross_entropy_node(&mut t, &[rot, cat, puz], &[1, 2, 3]).unwrap();
        let sum = m.summarizer().unwrap();
        let (seq, _, _) = sum
            .sequence_loss(&mut t, &m.store, f, L1_TOKEN, "ab", 10)
            .unwrap();
        let total = t
            .weighted_sum(&[(adv, 1.0), (l1, 1.0), (ce, 1.0), (seq, 1.0)])
            .unwrap();
        let g = t.backward(total);
        for id in m.store.ids() {
            let grad = g
                .get(id)
                .unwrap_or_else(|| panic!("no gradient for {}", m.store.name(id)));
            assert!(grad.all_finite(), "{}", m.store.name(id));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn shape_contracts_hold(
            c0 in 1usize..6, c1 in 1usize..6, c2 in 1usize..6, c3 in 1usize..8,
            res_mult in 4usize..7, seed in any::<u64>(),
        ) {
            let config = ModelConfig {
                resolution: 16 * res_mult,
                encoder_channels: vec![c0, c1, c2, c3],
                disc_channels: vec![c1, c3],
                ..ModelConfig::default()
            };
            let m: ChartModel<f32> = ChartModel::new(config.clone(), seed, None).unwrap();
            let img = image(config.resolution, 0);
            let f = m.encode(&img).unwrap();
            let (c, h, w) = config.feature_shape();
            prop_assert_eq!(f.shape(), &[c, h, w]);
            prop_assert_eq!(m.head_forward(HeadTask::Rotation, &f).unwrap().len(), 4);
            let gray = to_grayscale::<f32>(&img);
            let ab = m.generate_ab(&gray).unwrap();
            prop_assert_eq!((ab.width, ab.height), (config.resolution, config.resolution));
            let p = m.discriminate(&gray, &ab).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }
}
