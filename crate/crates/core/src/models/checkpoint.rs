//! Versioned binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "PFCK" | u32 version | u32 manifest bytes | manifest (key=value lines)
//! u32 tensor count | per tensor: u32 name bytes, name, u8 element width
//!                    (4 or 8), u32 rank, u64 dims..., elements
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use pretext_forge_autograd::{Scalar, Tensor};

use super::{ChartModel, ModelConfig, Vocab};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PFCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Training metadata stored next to the parameters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub stage: String,
    pub step: usize,
    pub epoch: usize,
    pub seed: u64,
    /// Free-form extra entries (for example a config hash).
    pub extra: BTreeMap<String, String>,
}

const RESERVED: [&str; 5] = ["stage", "step", "epoch", "seed", "vocab"];

fn manifest<T: Scalar>(model: &ChartModel<T>, meta: &CheckpointMeta) -> String {
    let mut m: BTreeMap<String, String> = model.config.to_pairs().into_iter().collect();
    m.insert("stage".into(), meta.stage.clone());
    m.insert("step".into(), meta.step.to_string());
    m.insert("epoch".into(), meta.epoch.to_string());
    m.insert("seed".into(), meta.seed.to_string());
    m.insert("dtype".into(), T::DTYPE.into());
    if let Some(v) = model.vocab() {
        let cps: Vec<String> = v
            .chars()
            .iter()
            .map(|&c| u32::from(c).to_string())
            .collect();
        m.insert("vocab".into(), cps.join(","));
    }
    for (k, v) in &meta.extra {
        m.entry(format!("x.{k}")).or_insert_with(|| v.clone());
    }
    m.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn encode_checkpoint<T: Scalar>(model: &ChartModel<T>, meta: &CheckpointMeta) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let man = manifest(model, meta);
    out.extend_from_slice(&(man.len() as u32).to_le_bytes());
    out.extend_from_slice(man.as_bytes());
    out.extend_from_slice(&(model.store.len() as u32).to_le_bytes());
    let width = std::mem::size_of::<T>() as u8;
    for (name, t) in model.store.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(width);
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            if width == 4 {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            } else {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn str(&mut self, n: usize) -> Result<&'a str> {
        std::str::from_utf8(self.take(n)?).map_err(|_| Error::Checkpoint("invalid UTF-8".into()))
    }
}

fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    text.lines()
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Checkpoint(format!("bad manifest line `{l}`")))
        })
        .collect()
}

fn field<V: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<V> {
    m.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Checkpoint(format!("manifest field `{key}` missing or invalid")))
}

/// Rebuilds a model from checkpoint bytes. Parameters stored at another
/// precision are converted.
pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<(ChartModel<T>, CheckpointMeta)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let n = r.u32()? as usize;
    let m = parse_manifest(r.str(n)?)?;
    let config = ModelConfig::from_pairs(&m)?;
    let vocab = match m.get("vocab") {
        Some(v) => Some(Vocab::from_chars(
            v.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<u32>().ok().and_then(char::from_u32))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Checkpoint("bad vocab entry".into()))?,
        )),
        None => None,
    };
    let meta = CheckpointMeta {
        stage: m.get("stage").cloned().unwrap_or_default(),
        step: field(&m, "step")?,
        epoch: field(&m, "epoch")?,
        seed: field(&m, "seed")?,
        extra: m
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("x.").map(|k| (k.to_string(), v.clone())))
            .filter(|(k, _)| !RESERVED.contains(&k.as_str()))
            .collect(),
    };
    let mut model = ChartModel::<T>::new(config, meta.seed, vocab)?;
    let count = r.u32()? as usize;
    if count != model.store.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {count} tensors, model has {}",
            model.store.len()
        )));
    }
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = r.str(len)?.to_string();
        let width = r.u8()?;
        let rank = r.u32()? as usize;
        let dims = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let numel: usize = dims.iter().product();
        let data: Vec<T> = match width {
            4 => r
                .take(numel * 4)?
                .chunks_exact(4)
                .map(|c| T::lit(f64::from(f32::from_le_bytes(c.try_into().expect("4")))))
                .collect(),
            8 => r
                .take(numel * 8)?
                .chunks_exact(8)
                .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8"))))
                .collect(),
            w => return Err(Error::Checkpoint(format!("unsupported element width {w}"))),
        };
        model
            .store
            .assign(&name, Tensor::from_vec(&dims, data)?)
            .map_err(|e| Error::Checkpoint(format!("tensor `{name}`: {e}")))?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok((model, meta))
}

pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    model: &ChartModel<T>,
    meta: &CheckpointMeta,
) -> Result<()> {
    write_atomic(path, &encode_checkpoint(model, meta))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(ChartModel<T>, CheckpointMeta)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            stage: "pretext".into(),
            step: 12,
            epoch: 3,
            seed: 9,
            extra: [("config_hash".to_string(), "abc".to_string())].into(),
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let mut m: ChartModel<f32> =
            ChartModel::new(ModelConfig::desk(), 9, Some(Vocab::from_texts(["héllo."]))).unwrap();
        let id = m.store.find("encoder.stage0.bias").unwrap();
        m.store.get_mut(id).data_mut()[0] = 0.125;
        let a = encode_checkpoint(&m, &meta());
        let (back, meta_back) = decode_checkpoint::<f32>(&a).unwrap();
        assert_eq!(meta_back, meta());
        assert_eq!(back.store, m.store);
        assert_eq!(back.vocab(), m.vocab());
        assert_eq!(encode_checkpoint(&back, &meta_back), a);
    }

    #[test]
    fn precision_conversion() {
        let m: ChartModel<f32> = ChartModel::new(ModelConfig::desk(), 2, None).unwrap();
        let bytes = encode_checkpoint(&m, &meta());
        let (wide, _) = decode_checkpoint::<f64>(&bytes).unwrap();
        let id = wide.store.find("head.puzzle.fc.weight").unwrap();
        let narrow = m.store.get(id).data();
        assert!(wide
            .store
            .get(id)
            .data()
            .iter()
            .zip(narrow)
            .all(|(&a, &b)| a == f64::from(b)));
    }

    #[test]
    fn rejects_bad_input() {
        let m: ChartModel<f32> = ChartModel::new(ModelConfig::desk(), 2, None).unwrap();
        let mut bytes = encode_checkpoint(&m, &meta());
        assert!(decode_checkpoint::<f32>(&bytes[..bytes.len() - 1]).is_err());
        bytes[4] = 2;
        assert!(matches!(
            decode_checkpoint::<f32>(&bytes),
            Err(Error::CheckpointVersionMismatch {
                found: 2,
                expected: 1
            })
        ));
        assert!(decode_checkpoint::<f32>(b"nope").is_err());
    }
}
