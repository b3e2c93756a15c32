use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fsutil::sha256_hex;
use crate::losses::{GanMode, LossWeights};
use crate::models::ModelConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Stage {
    #[default]
    Pretext,
    Finetune,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Pretext => "pretext",
            Stage::Finetune => "finetune",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretext" => Ok(Stage::Pretext),
            "finetune" => Ok(Stage::Finetune),
            _ => Err(Error::Config(format!("unknown stage `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::Config(format!("unknown optimizer `{s}`"))),
        }
    }
}

/// How summaries are tied to semantic levels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LevelMode {
    /// One generation per level, started from that level's control token.
    #[default]
    Token,
    /// One level-agnostic generation scored against each level's sentences.
    Filtered,
}

impl LevelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelMode::Token => "token",
            LevelMode::Filtered => "filtered",
        }
    }
}

impl fmt::Display for LevelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LevelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(LevelMode::Token),
            "filtered" => Ok(LevelMode::Filtered),
            _ => Err(Error::Config(format!("unknown level mode `{s}`"))),
        }
    }
}

/// Everything a training run depends on. Serialized as flat `key=value`
/// lines; see [`TrainConfig::to_text`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub pretext_epochs: usize,
    pub finetune_epochs: usize,
    /// When set, pretraining runs exactly this many steps, cycling over
    /// epochs as needed, and writes only the final checkpoint.
    pub max_steps: Option<usize>,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub weights: LossWeights,
    pub gan_mode: GanMode,
    pub checkpoint_dir: Option<PathBuf>,
    pub stage: Stage,
    pub level_mode: LevelMode,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            pretext_epochs: 3,
            finetune_epochs: 2,
            max_steps: None,
            learning_rate: 0.01,
            optimizer: OptimizerKind::Sgd,
            seed: 0,
            weights: LossWeights::default(),
            gan_mode: GanMode::NonSaturating,
            checkpoint_dir: None,
            stage: Stage::Pretext,
            level_mode: LevelMode::Token,
            model: ModelConfig::default(),
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid value `{value}`")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        self.weights.validate()?;
        self.model.validate()
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "batch_size" => self.batch_size = parse(key, value)?,
            "pretext_epochs" => self.pretext_epochs = parse(key, value)?,
            "finetune_epochs" => self.finetune_epochs = parse(key, value)?,
            "max_steps" => {
                self.max_steps = if value == "none" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "optimizer" => self.optimizer = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "alpha" => self.weights.alpha = parse(key, value)?,
            "gamma" => {
                let g: Vec<f64> = value
                    .split(',')
                    .map(|v| parse(key, v))
                    .collect::<Result<_>>()?;
                self.weights.gamma = g
                    .try_into()
                    .map_err(|_| Error::Config("gamma needs four comma-separated values".into()))?;
            }
            "gan_mode" => self.gan_mode = value.parse()?,
            "checkpoint_dir" => {
                self.checkpoint_dir = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "stage" => self.stage = value.parse()?,
            "level_mode" => self.level_mode = value.parse()?,
            _ => {
                if !self.model.apply(key, value)? {
                    return Err(Error::Config(format!("unknown config key `{key}`")));
                }
            }
        }
        Ok(())
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    /// Keys not given keep their defaults.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        self.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text)
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let g = self.weights.gamma.map(|x| format!("{x:?}")).join(",");
        let mut lines = vec![
            format!("batch_size={}", self.batch_size),
            format!("pretext_epochs={}", self.pretext_epochs),
            format!("finetune_epochs={}", self.finetune_epochs),
            format!(
                "max_steps={}",
                self.max_steps.map_or("none".into(), |s| s.to_string())
            ),
            format!("learning_rate={:?}", self.learning_rate),
            format!("optimizer={}", self.optimizer.as_str()),
            format!("seed={}", self.seed),
            format!("alpha={:?}", self.weights.alpha),
            format!("gamma={g}"),
            format!("gan_mode={}", self.gan_mode),
            format!(
                "checkpoint_dir={}",
                self.checkpoint_dir
                    .as_ref()
                    .map_or(String::new(), |p| p.display().to_string())
            ),
            format!("stage={}", self.stage.as_str()),
            format!("level_mode={}", self.level_mode),
        ];
        lines.extend(
            self.model
                .to_pairs()
                .into_iter()
                .map(|(k, v)| format!("{k}={v}")),
        );
        lines.join("\n") + "\n"
    }

    /// Hash of the settings that influence results (the checkpoint
    /// directory is excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.checkpoint_dir = None;
        sha256_hex(c.to_text().as_bytes())[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = TrainConfig::default();
        c.set("gamma", "0,0,0,1").unwrap();
        c.set("learning_rate", "0.003").unwrap();
        c.set("resolution", "64").unwrap();
        c.set("checkpoint_dir", "out/ck").unwrap();
        c.set("max_steps", "500").unwrap();
        let back = TrainConfig::parse_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.weights.gamma, [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(TrainConfig::parse_text("bogus=1").is_err());
        assert!(TrainConfig::parse_text("batch_size=0").is_err());
        assert!(TrainConfig::parse_text("gamma=1,2").is_err());
        assert!(TrainConfig::parse_text("alpha=-1").is_err());
        assert!(TrainConfig::parse_text("no equals sign").is_err());
        assert!(TrainConfig::parse_text("# comment\n\nseed=4").is_ok());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = TrainConfig::default();
        let mut b = a.clone();
        b.checkpoint_dir = Some("x".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
