use std::collections::BTreeSet;

use pretext_forge_autograd::{Init, ParamId, ParamStore, Scalar, Tape, Var};

use super::layers::Dense;
use crate::corpus::Level;
use crate::error::{Error, Result};
use crate::losses::batch_cross_entropy_node;

pub const BOS: usize = 0;
pub const EOS: usize = 1;
pub const L1_TOKEN: usize = 2;
pub const L2L3_TOKEN: usize = 3;
pub const UNK: usize = 4;
const SPECIALS: usize = 5;

/// Character vocabulary: five control tokens, then the sorted characters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    chars: Vec<char>,
}

impl Vocab {
    pub fn from_texts<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let set: BTreeSet<char> = texts.into_iter().flat_map(str::chars).collect();
        Self {
            chars: set.into_iter().collect(),
        }
    }

    pub fn from_chars(mut chars: Vec<char>) -> Self {
        chars.sort_unstable();
        chars.dedup();
        Self { chars }
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len() + SPECIALS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn level_token(level: Level) -> usize {
        match level {
            Level::L1 => L1_TOKEN,
            Level::L2L3 => L2L3_TOKEN,
        }
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        text.chars()
            .map(|c| self.chars.binary_search(&c).map_or(UNK, |i| i + SPECIALS))
            .collect()
    }

    /// Characters of the tokens, skipping control tokens.
    pub fn decode(&self, tokens: &[usize]) -> String {
        tokens
            .iter()
            .filter_map(|&t| t.checked_sub(SPECIALS).and_then(|i| self.chars.get(i)))
            .collect()
    }
}

/// Character-level GRU decoder conditioned on pooled image features.
#[derive(Clone, Debug)]
pub struct Summarizer {
    vocab: Vocab,
    embed: ParamId,
    ctx: Dense,
    init: Dense,
    gate_z: Dense,
    gate_r: Dense,
    cand_x: Dense,
    cand_h: Dense,
    out: Dense,
    hidden: usize,
}

/// Per-sequence decoder state.
pub struct DecoderState {
    ctx: Var,
    h: Var,
}

impl Summarizer {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        vocab: Vocab,
        feature_channels: usize,
        embed_dim: usize,
        hidden: usize,
        context_dim: usize,
    ) -> Self {
        let v = vocab.len();
        let x_dim = embed_dim + context_dim;
        Self {
            embed: store.alloc(
                "summarizer.embed",
                &[v, embed_dim],
                Init::Uniform { bound: 0.5 },
            ),
            ctx: Dense::new(store, "summarizer.ctx", feature_channels, context_dim),
            init: Dense::new(store, "summarizer.init", context_dim, hidden),
            gate_z: Dense::new(store, "summarizer.gate_z", x_dim + hidden, hidden),
            gate_r: Dense::new(store, "summarizer.gate_r", x_dim + hidden, hidden),
            cand_x: Dense::new(store, "summarizer.cand_x", x_dim, hidden),
            cand_h: Dense::new(store, "summarizer.cand_h", hidden, hidden),
            out: Dense::new(store, "summarizer.out", hidden, v),
            vocab,
            hidden,
        }
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Context and initial hidden state from an encoder feature map.
    pub fn start<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        features: Var,
    ) -> Result<DecoderState> {
        let pooled = t.global_avg_pool(features)?;
        let c = self.ctx.forward(t, s, pooled)?;
        let ctx = t.tanh(c);
        let h0 = self.init.forward(t, s, ctx)?;
        Ok(DecoderState { ctx, h: t.tanh(h0) })
    }

    /// Feeds `token`, advancing the state, and returns next-token logits.
    pub fn step<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        state: &mut DecoderState,
        token: usize,
    ) -> Result<Var> {
        if token >= self.vocab.len() {
            return Err(Error::InvalidTarget {
                index: token,
                classes: self.vocab.len(),
            });
        }
        let table = t.param(s, self.embed);
        let e = t.row(table, token)?;
        let x = t.concat(&[e, state.ctx])?;
        let xh = t.concat(&[x, state.h])?;
        let zl = self.gate_z.forward(t, s, xh)?;
        let z = t.sigmoid(zl);
        let rl = self.gate_r.forward(t, s, xh)?;
        let r = t.sigmoid(rl);
        let nx = self.cand_x.forward(t, s, x)?;
        let nh = self.cand_h.forward(t, s, state.h)?;
        let rnh = t.mul(r, nh)?;
        let pre = t.add(nx, rnh)?;
        let n = t.tanh(pre);
        // h' = n + z * (h - n)
        let d = t.sub(state.h, n)?;
        let zd = t.mul(z, d)?;
        state.h = t.add(n, zd)?;
        self.out.forward(t, s, state.h)
    }

    /// Teacher-forced mean token cross-entropy of `text` after `start_token`,
    /// with EOS as the final target. Text beyond `max_len` characters is cut.
    pub fn sequence_loss<T: Scalar>(
        &self,
        t: &mut Tape<T>,
        s: &ParamStore<T>,
        features: Var,
        start_token: usize,
        text: &str,
        max_len: usize,
    ) -> Result<(Var, Vec<Var>, Vec<usize>)> {
        let mut targets = self.vocab.encode(text);
        targets.truncate(max_len);
        targets.push(EOS);
        let mut state = self.start(t, s, features)?;
        let mut logits = Vec::with_capacity(targets.len());
        let mut input = start_token;
        for &tgt in &targets {
            logits.push(self.step(t, s, &mut state, input)?);
            input = tgt;
        }
        let loss = batch_cross_entropy_node(t, &logits, &targets)?;
        Ok((loss, logits, targets))
    }

    /// Greedy decoding until EOS or `max_len` tokens. Ties go to the lowest
    /// token id.
    pub fn greedy<T: Scalar>(
        &self,
        s: &ParamStore<T>,
        t: &mut Tape<T>,
        features: Var,
        start_token: usize,
        max_len: usize,
    ) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        if max_len == 0 {
            return Ok(out);
        }
        let mut state = self.start(t, s, features)?;
        let mut input = start_token;
        while out.len() < max_len {
            let logits = self.step(t, s, &mut state, input)?;
            let next = argmax(t.value(logits).data());
            if next == EOS {
                break;
            }
            out.push(next);
            input = next;
        }
        Ok(out)
    }
}

/// Index of the first maximum.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
