use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Sizes of every network component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    /// Side length of square inputs to the encoder.
    pub resolution: usize,
    /// Output channels of the stride-2 encoder stages.
    pub encoder_channels: Vec<usize>,
    /// Output channels of the stride-2 discriminator stages.
    pub disc_channels: Vec<usize>,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub context_dim: usize,
    /// Longest generated summary, in characters.
    pub max_len: usize,
    /// Size of the jigsaw permutation codebook.
    pub puzzle_classes: usize,
    /// Tiles per jigsaw sample.
    pub tiles: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            resolution: 224,
            encoder_channels: vec![8, 16, 32, 32],
            disc_channels: vec![8, 16, 32],
            embed_dim: 16,
            hidden_dim: 64,
            context_dim: 32,
            max_len: 200,
            puzzle_classes: 100,
            tiles: 9,
        }
    }
}

fn list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad integer `{x}`")))
        })
        .collect()
}

impl ModelConfig {
    /// Desk-scale preset used by tests and quick runs.
    pub fn desk() -> Self {
        Self {
            resolution: 64,
            ..Self::default()
        }
    }

    pub fn stride(&self) -> usize {
        1 << self.encoder_channels.len()
    }

    /// Feature map shape `(C, H', W')` for an input of side `side`.
    pub fn feature_shape_for(&self, side: usize) -> (usize, usize, usize) {
        let mut s = side;
        for _ in &self.encoder_channels {
            s = s.div_ceil(2);
        }
        (*self.encoder_channels.last().unwrap_or(&3), s, s)
    }

    pub fn feature_shape(&self) -> (usize, usize, usize) {
        self.feature_shape_for(self.resolution)
    }

    pub fn feature_channels(&self) -> usize {
        self.feature_shape().0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.encoder_channels.is_empty() || self.encoder_channels.contains(&0) {
            return bad("encoder_channels must be nonempty and positive".into());
        }
        if self.disc_channels.is_empty() || self.disc_channels.contains(&0) {
            return bad("disc_channels must be nonempty and positive".into());
        }
        if self.resolution == 0 || !self.resolution.is_multiple_of(self.stride()) {
            return bad(format!(
                "resolution {} must be a positive multiple of {}",
                self.resolution,
                self.stride()
            ));
        }
        // jigsaw tiles (64 px) pass through the same encoder
        for side in [self.resolution, 64] {
            let (_, h, _) = self.feature_shape_for(side);
            if h < 3 || side % self.stride() != 0 {
                return bad(format!(
                    "{side}px inputs give {h}x{h} features; at least 3x3 required"
                ));
            }
        }
        if self.puzzle_classes < 2 || self.tiles == 0 {
            return bad("puzzle_classes must be at least 2 and tiles positive".into());
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.context_dim == 0 {
            return bad("summarizer dimensions must be positive".into());
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("resolution".into(), self.resolution.to_string()),
            ("encoder_channels".into(), list(&self.encoder_channels)),
            ("disc_channels".into(), list(&self.disc_channels)),
            ("embed_dim".into(), self.embed_dim.to_string()),
            ("hidden_dim".into(), self.hidden_dim.to_string()),
            ("context_dim".into(), self.context_dim.to_string()),
            ("max_len".into(), self.max_len.to_string()),
            ("puzzle_classes".into(), self.puzzle_classes.to_string()),
            ("tiles".into(), self.tiles.to_string()),
        ]
    }

    /// Applies one `key=value` setting. Returns false for keys that are not
    /// model settings.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        let int = || {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: bad integer `{value}`")))
        };
        match key {
            "resolution" => self.resolution = int()?,
            "encoder_channels" => self.encoder_channels = parse_list(key, value)?,
            "disc_channels" => self.disc_channels = parse_list(key, value)?,
            "embed_dim" => self.embed_dim = int()?,
            "hidden_dim" => self.hidden_dim = int()?,
            "context_dim" => self.context_dim = int()?,
            "max_len" => self.max_len = int()?,
            "puzzle_classes" => self.puzzle_classes = int()?,
            "tiles" => self.tiles = int()?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = Self::default();
        for (k, v) in pairs {
            c.apply(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_shapes() {
        assert_eq!(ModelConfig::default().feature_shape(), (32, 14, 14));
        assert_eq!(ModelConfig::desk().feature_shape(), (32, 4, 4));
        assert!(ModelConfig::default().validate().is_ok());
        let bad = ModelConfig {
            resolution: 100,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let deep = ModelConfig {
            encoder_channels: vec![4; 5],
            ..ModelConfig::default()
        };
        assert!(deep.validate().is_err());
    }

    #[test]
    fn pairs_round_trip() {
        let c = ModelConfig::desk();
        let map: BTreeMap<_, _> = c.to_pairs().into_iter().collect();
        assert_eq!(ModelConfig::from_pairs(&map).unwrap(), c);
    }
}
