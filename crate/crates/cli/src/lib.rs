//! Command definitions and dispatch for the `pretext-forge` binary.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use pretext_forge::corpus::{
    accept_record, corpus_stats, load_corpus, save_corpus, split_corpus, ChartRecord, Corpus,
    CorpusError, Split, INDEX_FILE,
};
use pretext_forge::evaluation::{emit_report, evaluate};
use pretext_forge::fsutil::{sha256_hex, write_atomic};
use pretext_forge::models::load_checkpoint;
use pretext_forge::pretext::{
    make_batch, BatchContext, PermutationCodebook, PretextSample, DEFAULT_GRID,
};
use pretext_forge::raster::RgbImage;
use pretext_forge::synth::mini_corpus;
use pretext_forge::trainer::{
    finetune, pretrain, run_ablation, training_records, LevelMode, Stage, TrainConfig,
};
use pretext_forge::{Error, Model, Real};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pretext-forge",
    version,
    about = "Multi-pretext-task pretraining and evaluation for chart vision encoders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the jigsaw permutation codebook
    BuildCodebook {
        /// Number of permutations
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter a corpus by the acceptance rules, assign splits and write it out
    Prepare {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Split seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output corpus directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Print corpus statistics
    Stats {
        #[command(flatten)]
        corpus: CorpusArg,
    },
    /// Print the seeded 80/10/10 split of a corpus
    Split {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write pretext samples of the first records as PNG files for inspection
    GenPretext {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of records to sample
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Multi-task pretext pretraining
    Pretrain {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        seed: Option<u64>,
        /// Pretext epochs (overrides the config)
        #[arg(long)]
        epochs: Option<usize>,
        /// Checkpoint and log directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarization fine-tuning from a pretext checkpoint
    Finetune {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        config: ConfigArg,
        /// Pretext checkpoint
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Fine-tuning epochs (overrides the config)
        #[arg(long)]
        epochs: Option<usize>,
        /// token or filtered
        #[arg(long)]
        level_mode: Option<LevelMode>,
        /// Checkpoint and log directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a fine-tuned checkpoint on the test split
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        config: ConfigArg,
        /// Fine-tuned checkpoint
        #[arg(long)]
        checkpoint: PathBuf,
        /// Seed for the held-out pretext samples
        #[arg(long)]
        seed: Option<u64>,
        /// token or filtered
        #[arg(long)]
        level_mode: Option<LevelMode>,
        /// Report prefix; writes <out>.txt and <out>.records
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretext-task ablation: self-supervised, supervised and combined
    Ablate {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Output directory for checkpoints and the report
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic chart corpus
    Synth {
        /// Number of records
        #[arg(long, default_value_t = 40)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output corpus directory
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    /// Corpus directory or index file
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// key=value training config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> pretext_forge::Result<TrainConfig> {
        match &self.config {
            Some(p) => TrainConfig::load(p),
            None => Ok(TrainConfig::default()),
        }
    }
}

/// Runs a parsed command, writing normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> anyhow::Result<()> {
    match cli.command {
        Command::BuildCodebook { count, out: path } => {
            let cb = PermutationCodebook::build(count, DEFAULT_GRID)?;
            match path {
                Some(p) => cb.save(&p)?,
                None => out.write_all(cb.to_text().as_bytes())?,
            }
        }
        Command::Prepare {
            corpus,
            seed,
            out: dir,
        } => {
            let c = load_corpus(&corpus.corpus)?;
            let mut kept = Vec::new();
            for r in &c.records {
                let v = accept_record(r);
                if v.accepted {
                    kept.push(r.clone());
                } else {
                    let reasons: Vec<String> = v.reasons.iter().map(ToString::to_string).collect();
                    writeln!(out, "rejected {} {}", r.id, reasons.join(","))?;
                }
            }
            let ids: Vec<String> = kept.iter().map(|r| r.id.clone()).collect();
            let splits = split_corpus(&ids, seed)?;
            for r in &mut kept {
                r.split = splits[&r.id];
            }
            let n = kept.len();
            save_corpus(&Corpus::new(c.vocab.clone(), kept)?, &dir)?;
            writeln!(out, "kept {n} of {}", c.records.len())?;
        }
        Command::Stats { corpus } => {
            let c = load_corpus(&corpus.corpus)?;
            writeln!(out, "{}", corpus_stats(&c.records)?)?;
        }
        Command::Split {
            corpus,
            seed,
            out: path,
        } => {
            let c = load_corpus(&corpus.corpus)?;
            let ids: Vec<String> = c.records.iter().map(|r| r.id.clone()).collect();
            let text: String = split_corpus(&ids, seed)?
                .iter()
                .map(|(id, s)| format!("{id}\t{s}\n"))
                .collect();
            match path {
                Some(p) => write_atomic(&p, text.as_bytes())?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::GenPretext {
            corpus,
            seed,
            count,
            out: dir,
            config,
        } => {
            let c = load_corpus(&corpus.corpus)?;
            let cfg = config.load()?;
            let cb = codebook_for(&cfg)?;
            let recs: Vec<&ChartRecord> = c.records.iter().take(count).collect();
            gen_pretext(&recs, &cb, cfg.model.resolution, seed, &dir, out)?;
        }
        Command::Pretrain {
            corpus,
            config,
            seed,
            epochs,
            out: dir,
        } => {
            let c = load_corpus(&corpus.corpus)?;
            let mut cfg = config.load()?;
            cfg.stage = Stage::Pretext;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.pretext_epochs = epochs.unwrap_or(cfg.pretext_epochs);
            cfg.checkpoint_dir = Some(dir.clone());
            let cb = codebook_for(&cfg)?;
            let res = pretrain::<Real>(&training_records(&c), &cb, &cfg)?;
            if let Some(last) = res.state.history.last() {
                writeln!(out, "steps {} final {last}", res.state.step)?;
            } else {
                writeln!(out, "steps 0")?;
            }
            writeln!(out, "checkpoint {}", dir.join("pretext.ckpt").display())?;
        }
        Command::Finetune {
            corpus,
            config,
            checkpoint,
            seed,
            epochs,
            level_mode,
            out: dir,
        } => {
            let c = load_corpus(&corpus.corpus)?;
            let mut cfg = config.load()?;
            cfg.stage = Stage::Finetune;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.finetune_epochs = epochs.unwrap_or(cfg.finetune_epochs);
            cfg.level_mode = level_mode.unwrap_or(cfg.level_mode);
            cfg.checkpoint_dir = Some(dir.clone());
            let (pre, _) = load_checkpoint::<Real>(&checkpoint)?;
            cfg.model = pre.config.clone();
            let res = finetune(&training_records(&c), &pre, &cfg)?;
            writeln!(
                out,
                "steps {} final loss {}",
                res.state.step,
                res.state
                    .history
                    .last()
                    .map_or("none".into(), |l| format!("{l:.6}"))
            )?;
            writeln!(out, "checkpoint {}", dir.join("finetune.ckpt").display())?;
        }
        Command::Evaluate {
            corpus,
            config,
            checkpoint,
            seed,
            level_mode,
            out: prefix,
        } => {
            let c = load_corpus(&corpus.corpus)?;
            let mut cfg = config.load()?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.level_mode = level_mode.unwrap_or(cfg.level_mode);
            let bytes = std::fs::read(&checkpoint).map_err(|e| Error::io(&checkpoint, e))?;
            let (model, _): (Model, _) = pretext_forge::models::decode_checkpoint(&bytes)?;
            cfg.model = model.config.clone();
            let cb = codebook_for(&cfg)?;
            let mut test = c.split(Split::Test);
            if test.is_empty() {
                test = c.records.iter().collect();
            }
            let report = evaluate(&model, &test, &cb, cfg.level_mode, cfg.seed)?
                .checkpoint_id(&sha256_hex(&bytes)[..16])
                .corpus_id(corpus_id(&corpus.corpus)?)
                .config_hash(cfg.hash())
                .build()?;
            let (table, _) = emit_report(&report, &prefix)?;
            out.write_all(report.to_table().as_bytes())?;
            writeln!(out, "report {}", table.display())?;
        }
        Command::Ablate {
            corpus,
            config,
            seeds,
            out: dir,
        } => {
            let c = load_corpus(&corpus.corpus)?;
            let mut cfg = config.load()?;
            cfg.checkpoint_dir = Some(dir);
            let cb = codebook_for(&cfg)?;
            let report = run_ablation::<Real>(&c, &cb, &cfg, &seeds)?;
            out.write_all(report.to_text().as_bytes())?;
        }
        Command::Synth {
            count,
            seed,
            out: dir,
        } => {
            if count == 0 {
                bail!(Error::EmptyInput("--count must be at least 1".into()));
            }
            save_corpus(&mini_corpus(count, seed)?, &dir)?;
            writeln!(out, "wrote {count} records to {}", dir.display())?;
        }
    }
    Ok(())
}

fn codebook_for(cfg: &TrainConfig) -> pretext_forge::Result<PermutationCodebook> {
    PermutationCodebook::from_env(cfg.model.puzzle_classes, cfg.model.tiles)
}

/// Short hash of the corpus index file.
fn corpus_id(path: &Path) -> anyhow::Result<String> {
    let index = if path.is_dir() {
        path.join(INDEX_FILE)
    } else {
        path.to_path_buf()
    };
    let bytes = std::fs::read(&index).map_err(|e| Error::io(&index, e))?;
    Ok(sha256_hex(&bytes)[..16].to_string())
}

fn mosaic(tiles: &[RgbImage]) -> RgbImage {
    let side = (tiles.len() as f64).sqrt().ceil() as usize;
    let t = tiles.first().map_or(0, RgbImage::width);
    let mut m = RgbImage::filled(side * (t + 2), side * (t + 2), [255, 255, 255]);
    for (i, tile) in tiles.iter().enumerate() {
        let (ox, oy) = ((i % side) * (t + 2), (i / side) * (t + 2));
        for y in 0..tile.height() {
            for x in 0..tile.width() {
                m.put(ox + x, oy + y, tile.get(x, y));
            }
        }
    }
    m
}

fn gen_pretext(
    recs: &[&ChartRecord],
    cb: &PermutationCodebook,
    resolution: usize,
    seed: u64,
    dir: &Path,
    out: &mut dyn std::io::Write,
) -> anyhow::Result<()> {
    let ctx = BatchContext::new(cb.clone(), resolution);
    let items = make_batch::<Real>(recs, seed, &ctx)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut labels = String::new();
    for item in &items {
        let name = item
            .source
            .replace(|c: char| !c.is_ascii_alphanumeric() && c != '-', "_");
        let kind = item.sample.kind().as_str();
        let img = match &item.sample {
            PretextSample::Rotation(s) => s.image.clone(),
            PretextSample::Jigsaw(s) => mosaic(&s.tiles),
            PretextSample::Colorization(s) => {
                pretext_forge::colorspace::render_colorization(&s.input, &s.target)?
            }
            PretextSample::Category(s) => s.image.clone(),
        };
        let file = format!("{name}-{kind}.png");
        img.save_png(&dir.join(&file))?;
        let label = item.sample.label().map_or("-".into(), |l| l.to_string());
        labels.push_str(&format!("{file}\t{kind}\t{label}\n"));
    }
    write_atomic(&dir.join("labels.tsv"), labels.as_bytes())?;
    writeln!(out, "wrote {} samples to {}", items.len(), dir.display())?;
    Ok(())
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_data_error() => EXIT_DATA,
        Some(_) => EXIT_RUNTIME,
        None if err.is::<CorpusError>() || err.is::<std::io::Error>() => EXIT_DATA,
        None => EXIT_RUNTIME,
    }
}

/// One-line rendering of an error chain.
pub fn one_line(err: &anyhow::Error) -> String {
    let mut s = format!("{err:#}");
    s.retain(|c| c != '\n');
    s
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with<I, S>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("usage error");
            let _ = writeln!(err, "usage: {}", first.trim_start_matches("error: "));
            return EXIT_USAGE;
        }
    };
    match run(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == EXIT_DATA { "data" } else { "runtime" };
            let _ = writeln!(err, "{kind} error: {}", one_line(&e));
            code
        }
    }
}
