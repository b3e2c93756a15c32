use pretext_forge_autograd::{ParamStore, Scalar, Tape, Var};

use super::layers::{Conv, Dense, ResBlock};
use crate::error::{Error, Result};

const LEAK: f64 = 0.2;

/// Stack of stride-2 3x3 convolutions with ReLU. `forward` returns every
/// stage's output; the last one is the feature map.
#[derive(Clone, Debug)]
pub struct Encoder {
    stages: Vec<Conv>,
}

impl Encoder {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, channels: &[usize]) -> Self {
        let mut in_c = 3;
        let stages = channels
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let conv = Conv::new(store, &format!("encoder.stage{i}"), in_c, c, 3, 2);
                in_c = c;
                conv
            })
            .collect();
        Self { stages }
    }

    pub fn forward<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        x: Var,
    ) -> Result<Vec<Var>> {
        let mut out = Vec::with_capacity(self.stages.len());
        let mut h = x;
        for conv in &self.stages {
            let z = conv.forward(t, s, h)?;
            h = t.relu(z);
            out.push(h);
        }
        Ok(out)
    }
}

/// Residual block, global average pooling and a linear projection.
#[derive(Clone, Debug)]
pub struct ClassHead {
    block: ResBlock,
    fc: Dense,
    classes: usize,
}

impl ClassHead {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        channels: usize,
        classes: usize,
    ) -> Self {
        Self {
            block: ResBlock::new(store, &format!("{name}.block"), channels),
            fc: Dense::new(store, &format!("{name}.fc"), channels, classes),
            classes,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn pooled<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        features: Var,
    ) -> Result<Var> {
        let h = self.block.forward(t, s, features)?;
        Ok(t.global_avg_pool(h)?)
    }

    pub fn forward<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        features: Var,
    ) -> Result<Var> {
        let p = self.pooled(t, s, features)?;
        self.fc.forward(t, s, p)
    }
}

/// Shared residual block over each tile's features, pooled vectors
/// concatenated in slot order, then one linear layer.
#[derive(Clone, Debug)]
pub struct PuzzleHead {
    block: ResBlock,
    fc: Dense,
    tiles: usize,
    classes: usize,
}

impl PuzzleHead {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        channels: usize,
        tiles: usize,
        classes: usize,
    ) -> Self {
        Self {
            block: ResBlock::new(store, &format!("{name}.block"), channels),
            fc: Dense::new(store, &format!("{name}.fc"), channels * tiles, classes),
            tiles,
            classes,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn forward<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        tiles: &[Var],
    ) -> Result<Var> {
        if tiles.len() != self.tiles {
            return Err(Error::Shape(format!(
                "puzzle head expects {} tiles, got {}",
                self.tiles,
                tiles.len()
            )));
        }
        let mut pooled = Vec::with_capacity(tiles.len());
        for &f in tiles {
            let h = self.block.forward(t, s, f)?;
            pooled.push(t.global_avg_pool(h)?);
        }
        let cat = t.concat(&pooled)?;
        self.fc.forward(t, s, cat)
    }
}

/// U-Net style decoder over the encoder's stage outputs, finishing with the
/// gray input as the last skip and a tanh-bounded 2-channel output.
#[derive(Clone, Debug)]
pub struct Generator {
    ups: Vec<Conv>,
    out: Conv,
}

impl Generator {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, channels: &[usize]) -> Self {
        let n = channels.len();
        let mut prev = channels[n - 1];
        let mut ups = Vec::new();
        for i in (0..n - 1).rev() {
            let name = format!("generator.up{}", n - 2 - i);
            ups.push(Conv::new(
                store,
                &name,
                prev + channels[i],
                channels[i],
                3,
                1,
            ));
            prev = channels[i];
        }
        Self {
            ups,
            out: Conv::new(store, "generator.out", prev + 1, 2, 3, 1),
        }
    }

    pub fn forward<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        skips: &[Var],
        gray: Var,
    ) -> Result<Var> {
        let n = skips.len();
        let mut d = skips[n - 1];
        for (conv, &skip) in self.ups.iter().zip(skips[..n - 1].iter().rev()) {
            let u = t.upsample2x(d)?;
            let c = t.concat(&[u, skip])?;
            let z = conv.forward(t, s, c)?;
            d = t.relu(z);
        }
        let u = t.upsample2x(d)?;
        let c = t.concat(&[u, gray])?;
        let z = self.out.forward(t, s, c)?;
        Ok(t.tanh(z))
    }
}

/// Judges (gray, ab) pairs: strided LeakyReLU convolutions, a residual block,
/// pooling and a sigmoid output.
#[derive(Clone, Debug)]
pub struct Discriminator {
    stages: Vec<Conv>,
    block: ResBlock,
    fc: Dense,
}

impl Discriminator {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, channels: &[usize]) -> Self {
        let mut in_c = 3;
        let stages = channels
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let conv = Conv::new(store, &format!("discriminator.stage{i}"), in_c, c, 3, 2);
                in_c = c;
                conv
            })
            .collect();
        Self {
            stages,
            block: ResBlock::new(store, "discriminator.block", in_c).leaky(LEAK),
            fc: Dense::new(store, "discriminator.fc", in_c, 1),
        }
    }

    /// Probability that `pair` (`[3, H, W]`: gray then ab) is real.
    pub fn forward<T: Scalar>(&self, t: &mut Tape<T>, s: &ParamStore<T>, pair: Var) -> Result<Var> {
        let mut h = pair;
        for conv in &self.stages {
            let z = conv.forward(t, s, h)?;
            h = t.leaky_relu(z, T::lit(LEAK));
        }
        let h = self.block.forward(t, s, h)?;
        let p = t.global_avg_pool(h)?;
        let logit = self.fc.forward(t, s, p)?;
        Ok(t.sigmoid(logit))
    }
}
