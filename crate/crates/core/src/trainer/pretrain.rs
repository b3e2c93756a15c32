use std::path::Path;
use std::time::Instant;

use pretext_forge_autograd::{Adam, Optimizer, Scalar, Sgd, Tape, Tensor, Var};

use super::config::{OptimizerKind, TrainConfig};
use super::{batch_seed, epoch_order, write_log, TrainState};
use crate::corpus::ChartRecord;
use crate::error::{Error, Result};
use crate::losses::{
    batch_cross_entropy_node, discriminator_loss_node, generator_adv_node, l1_node, LossReport,
};
use crate::models::{save_checkpoint, ChartModel, CheckpointMeta, DISCRIMINATOR_PREFIX};
use crate::pretext::{make_batch, BatchContext, BatchItem, PermutationCodebook, PretextSample};

pub fn make_optimizer<T: Scalar>(kind: OptimizerKind, lr: f64) -> Box<dyn Optimizer<T>> {
    match kind {
        OptimizerKind::Sgd => Box::new(Sgd { lr: T::lit(lr) }),
        OptimizerKind::Adam => Box::new(Adam::new(T::lit(lr))),
    }
}

/// Result of a training stage.
pub struct TrainOutcome<T, R> {
    pub model: ChartModel<T>,
    pub state: TrainState<R>,
}

/// Optimizers for one pretraining run: one for the discriminator, one for
/// everything else.
pub struct PretextOptimizers<T> {
    pub disc: Box<dyn Optimizer<T>>,
    pub main: Box<dyn Optimizer<T>>,
}

impl<T: Scalar> PretextOptimizers<T> {
    pub fn new(config: &TrainConfig) -> Self {
        Self {
            disc: make_optimizer(config.optimizer, config.learning_rate),
            main: make_optimizer(config.optimizer, config.learning_rate),
        }
    }
}

fn is_disc(model: &ChartModel<impl Scalar>, id: pretext_forge_autograd::ParamId) -> bool {
    model.store.name(id).starts_with(DISCRIMINATOR_PREFIX)
}

/// Forward graphs of one pretext batch on a tape.
struct Forward<T> {
    rotation: Vec<Var>,
    rotation_y: Vec<usize>,
    puzzle: Vec<Var>,
    puzzle_y: Vec<usize>,
    categ: Vec<Var>,
    categ_y: Vec<usize>,
    gray: Vec<Var>,
    fake_ab: Vec<Var>,
    real_ab: Vec<Tensor<T>>,
}

fn forward<T: Scalar>(
    t: &mut Tape<T>,
    model: &ChartModel<T>,
    items: &[BatchItem<T>],
) -> Result<Forward<T>> {
    let mut f = Forward {
        rotation: vec![],
        rotation_y: vec![],
        puzzle: vec![],
        puzzle_y: vec![],
        categ: vec![],
        categ_y: vec![],
        gray: vec![],
        fake_ab: vec![],
        real_ab: vec![],
    };
    for item in items {
        let wrap = |e| Error::in_record(&item.source, e);
        match &item.sample {
            PretextSample::Rotation(s) => {
                let x = model.image_input(t, &s.image).map_err(wrap)?;
                let feat = model.features_var(t, x)?;
                f.rotation.push(model.rotation_logits(t, feat)?);
                f.rotation_y.push(s.label);
            }
            PretextSample::Jigsaw(s) => {
                let mut feats = Vec::with_capacity(s.tiles.len());
                for tile in &s.tiles {
                    let x = model.tile_input(t, tile).map_err(wrap)?;
                    feats.push(model.features_var(t, x)?);
                }
                f.puzzle.push(model.puzzle_logits(t, &feats)?);
                f.puzzle_y.push(s.label);
            }
            PretextSample::Colorization(s) => {
                let (g1, g3) = model.gray_inputs(t, &s.input).map_err(wrap)?;
                let skips = model.encode_var(t, g3)?;
                f.fake_ab.push(model.generator_var(t, &skips, g1)?);
                f.gray.push(g1);
                f.real_ab.push(s.target.to_tensor());
            }
            PretextSample::Category(s) => {
                let x = model.image_input(t, &s.image).map_err(wrap)?;
                let feat = model.features_var(t, x)?;
                f.categ.push(model.categ_logits(t, feat)?);
                f.categ_y.push(s.label);
            }
        }
    }
    Ok(f)
}

/// One discriminator update on real pairs and detached generator output.
/// Returns the discriminator loss before the update.
fn discriminator_step<T: Scalar>(
    model: &mut ChartModel<T>,
    opt: &mut dyn Optimizer<T>,
    main: &Tape<T>,
    f: &Forward<T>,
    update: bool,
) -> Result<f64> {
    let mut t = Tape::new();
    let mut real = Vec::new();
    let mut fake = Vec::new();
    for ((&g, &ab), target) in f.gray.iter().zip(&f.fake_ab).zip(&f.real_ab) {
        let g = t.input(main.value(g).clone());
        let fake_ab = t.input(main.value(ab).clone());
        let real_ab = t.input(target.clone());
        real.push(model.discriminator_var(&mut t, g, real_ab)?);
        fake.push(model.discriminator_var(&mut t, g, fake_ab)?);
    }
    let pr = t.concat(&real)?;
    let pf = t.concat(&fake)?;
    let loss = discriminator_loss_node(&mut t, pr, pf)?;
    let value = t.item(loss).as_f64();
    if update && value.is_finite() {
        let mut grads = t.backward(loss);
        grads.retain(|id| is_disc(model, id));
        opt.step(&mut model.store, &grads);
    }
    Ok(value)
}

/// A single pretraining step over prepared samples.
pub fn pretext_step<T: Scalar>(
    model: &mut ChartModel<T>,
    opts: &mut PretextOptimizers<T>,
    items: &[BatchItem<T>],
    config: &TrainConfig,
    step: usize,
) -> Result<LossReport> {
    let w = &config.weights;
    let mut t = Tape::new();
    let f = forward(&mut t, model, items)?;
    if f.fake_ab.is_empty() {
        return Err(Error::EmptyInput("pretext batch".into()));
    }
    let train_color = w.gamma[0] > 0.0;
    let disc = discriminator_step(model, opts.disc.as_mut(), &t, &f, train_color)?;

    // adversarial and L1 terms against the freshly updated discriminator
    let mut probs = Vec::with_capacity(f.fake_ab.len());
    for (&g, &ab) in f.gray.iter().zip(&f.fake_ab) {
        probs.push(model.discriminator_var(&mut t, g, ab)?);
    }
    let pf = t.concat(&probs)?;
    let adv = generator_adv_node(&mut t, pf, config.gan_mode)?;
    let fake_all = t.concat(&f.fake_ab)?;
    let real_all: Vec<T> = f
        .real_ab
        .iter()
        .flat_map(|r| r.data().iter().copied())
        .collect();
    let real_all = Tensor::from_vec(t.shape(fake_all), real_all)?;
    let l1 = l1_node(&mut t, fake_all, &real_all)?;
    let color = t.weighted_sum(&[(adv, T::one()), (l1, T::lit(w.alpha))])?;
    let rotation = batch_cross_entropy_node(&mut t, &f.rotation, &f.rotation_y)?;
    let puzzle = batch_cross_entropy_node(&mut t, &f.puzzle, &f.puzzle_y)?;
    let categ = batch_cross_entropy_node(&mut t, &f.categ, &f.categ_y)?;

    let comps = [color, rotation, puzzle, categ];
    let report = LossReport::new(
        comps.map(|v| t.item(v).as_f64()),
        t.item(adv).as_f64(),
        t.item(l1).as_f64(),
        disc,
        w,
        f.fake_ab.len(),
    );
    if !report.is_finite() {
        return Err(Error::NonFiniteLoss {
            step,
            report: Box::new(report),
        });
    }
    let terms: Vec<(Var, T)> = comps
        .iter()
        .zip(w.gamma)
        .filter(|(_, g)| *g > 0.0)
        .map(|(&v, g)| (v, T::lit(g)))
        .collect();
    if !terms.is_empty() {
        let total = t.weighted_sum(&terms)?;
        let mut grads = t.backward(total);
        grads.retain(|id| !is_disc(model, id));
        if !grads.all_finite() {
            return Err(Error::NonFiniteLoss {
                step,
                report: Box::new(report),
            });
        }
        opts.main.step(&mut model.store, &grads);
    }
    Ok(report)
}

/// Loads each record's image once so steps do not re-decode files.
pub fn preload(records: &[&ChartRecord]) -> Result<Vec<ChartRecord>> {
    records
        .iter()
        .map(|r| {
            let img = r.load_image()?;
            let mut r = (*r).clone();
            r.image = crate::corpus::ImageRef::Raster(img);
            Ok(r)
        })
        .collect()
}

/// Multi-task pretraining of the encoder, heads and GAN pair.
pub fn pretrain<T: Scalar>(
    records: &[&ChartRecord],
    codebook: &PermutationCodebook,
    config: &TrainConfig,
) -> Result<TrainOutcome<T, LossReport>> {
    config.validate()?;
    let model = ChartModel::<T>::new(config.model.clone(), config.seed, None)?;
    pretrain_from(model, records, codebook, config)
}

/// Pretraining starting from a given model.
pub fn pretrain_from<T: Scalar>(
    mut model: ChartModel<T>,
    records: &[&ChartRecord],
    codebook: &PermutationCodebook,
    config: &TrainConfig,
) -> Result<TrainOutcome<T, LossReport>> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyInput("no training records".into()));
    }
    if codebook.len() != model.config.puzzle_classes || codebook.grid() != model.config.tiles {
        return Err(Error::Config(format!(
            "codebook ({} x {}) does not match the puzzle head ({} x {})",
            codebook.len(),
            codebook.grid(),
            model.config.puzzle_classes,
            model.config.tiles
        )));
    }
    let data = preload(records)?;
    let ctx = BatchContext::new(codebook.clone(), model.config.resolution);
    let mut opts = PretextOptimizers::new(config);
    let mut state = TrainState::new(config.seed);
    let mut log = Vec::new();
    let started = Instant::now();
    let dir = config.checkpoint_dir.as_deref();
    let epochs = match config.max_steps {
        Some(_) => usize::MAX,
        None => config.pretext_epochs,
    };
    'outer: for epoch in 0..epochs {
        for chunk in epoch_order(data.len(), config.seed, epoch).chunks(config.batch_size) {
            if config.max_steps.is_some_and(|m| state.step >= m) {
                break 'outer;
            }
            let batch: Vec<&ChartRecord> = chunk.iter().map(|&i| &data[i]).collect();
            let items = make_batch::<T>(&batch, batch_seed(config.seed, state.step), &ctx)?;
            let report = pretext_step(&mut model, &mut opts, &items, config, state.step)?;
            log.push(report.to_line(state.step, Some(started.elapsed().as_secs_f64())));
            state.push(report);
        }
        state.epoch = epoch + 1;
        if config.max_steps.is_some_and(|m| state.step >= m) {
            break;
        }
        if let Some(dir) = dir {
            let meta = pretext_meta(config, &state);
            save_checkpoint(
                &dir.join(format!("pretext-epoch{}.ckpt", epoch + 1)),
                &model,
                &meta,
            )?;
            write_log(&dir.join("pretext.log"), &log)?;
        }
    }
    if let Some(dir) = dir {
        save_checkpoint(
            &dir.join("pretext.ckpt"),
            &model,
            &pretext_meta(config, &state),
        )?;
        write_log(&dir.join("pretext.log"), &log)?;
    }
    Ok(TrainOutcome { model, state })
}

pub fn pretext_meta<R>(config: &TrainConfig, state: &TrainState<R>) -> CheckpointMeta {
    CheckpointMeta {
        stage: "pretext".into(),
        step: state.step,
        epoch: state.epoch,
        seed: config.seed,
        extra: [("config_hash".to_string(), config.hash())].into(),
    }
}

/// Writes the final pretraining checkpoint of an outcome to `path`.
pub fn save_pretext<T: Scalar>(
    path: &Path,
    out: &TrainOutcome<T, LossReport>,
    config: &TrainConfig,
) -> Result<()> {
    save_checkpoint(path, &out.model, &pretext_meta(config, &out.state))
}
