use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::accuracy::PretextAccuracy;
use super::bleu::BLEU_VARIANT;
use crate::error::{Error, Result};
use crate::fsutil::{sha256_hex, write_atomic};

/// Evaluation results and the identities of what was evaluated.
///
/// Only constructible through [`EvalReportBuilder`], which enforces that
/// every field is present and that `bleu_avg` is the arithmetic mean of the
/// two level scores.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    bleu_l1: f64,
    bleu_l2l3: f64,
    bleu_avg: f64,
    accuracy: PretextAccuracy,
    sample_count: usize,
    checkpoint_id: String,
    corpus_id: String,
    config_hash: String,
    level_mode: String,
    bleu_variant: String,
}

#[derive(Clone, Debug, Default)]
pub struct EvalReportBuilder {
    bleu: Option<(f64, f64)>,
    accuracy: Option<PretextAccuracy>,
    sample_count: Option<usize>,
    checkpoint_id: Option<String>,
    corpus_id: Option<String>,
    config_hash: Option<String>,
    level_mode: Option<String>,
}

fn check_id(name: &str, v: &str) -> Result<()> {
    if v.is_empty() || v.contains(['\n', '\r']) {
        return Err(Error::Report(format!(
            "{name} must be a nonempty single line"
        )));
    }
    Ok(())
}

impl EvalReportBuilder {
    pub fn bleu(mut self, l1: f64, l2l3: f64) -> Self {
        self.bleu = Some((l1, l2l3));
        self
    }

    pub fn accuracy(mut self, acc: PretextAccuracy) -> Self {
        self.accuracy = Some(acc);
        self
    }

    pub fn sample_count(mut self, n: usize) -> Self {
        self.sample_count = Some(n);
        self
    }

    pub fn checkpoint_id(mut self, id: impl Into<String>) -> Self {
        self.checkpoint_id = Some(id.into());
        self
    }

    pub fn corpus_id(mut self, id: impl Into<String>) -> Self {
        self.corpus_id = Some(id.into());
        self
    }

    pub fn config_hash(mut self, h: impl Into<String>) -> Self {
        self.config_hash = Some(h.into());
        self
    }

    pub fn level_mode(mut self, m: impl Into<String>) -> Self {
        self.level_mode = Some(m.into());
        self
    }

    pub fn build(self) -> Result<EvalReport> {
        fn need<V>(v: Option<V>, name: &str) -> Result<V> {
            v.ok_or_else(|| Error::Report(format!("missing field `{name}`")))
        }
        let (l1, l2) = need(self.bleu, "bleu")?;
        for (name, v) in [("bleu_l1", l1), ("bleu_l2l3", l2)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::Report(format!("{name}={v} outside [0, 100]")));
            }
        }
        let accuracy = need(self.accuracy, "pretext_accuracy")?;
        for (name, v) in accuracy.entries() {
            match v {
                None => return Err(Error::Report(format!("missing field `accuracy_{name}`"))),
                Some(v) if !(0.0..=1.0).contains(&v) => {
                    return Err(Error::Report(format!("accuracy_{name}={v} outside [0, 1]")))
                }
                Some(_) => {}
            }
        }
        let r = EvalReport {
            bleu_l1: l1,
            bleu_l2l3: l2,
            bleu_avg: (l1 + l2) / 2.0,
            accuracy,
            sample_count: need(self.sample_count, "sample_count")?,
            checkpoint_id: need(self.checkpoint_id, "checkpoint_id")?,
            corpus_id: need(self.corpus_id, "corpus_id")?,
            config_hash: need(self.config_hash, "config_hash")?,
            level_mode: need(self.level_mode, "level_mode")?,
            bleu_variant: BLEU_VARIANT.into(),
        };
        check_id("checkpoint_id", &r.checkpoint_id)?;
        check_id("corpus_id", &r.corpus_id)?;
        check_id("config_hash", &r.config_hash)?;
        check_id("level_mode", &r.level_mode)?;
        Ok(r)
    }
}

const KEYS: [&str; 12] = [
    "bleu_l1",
    "bleu_l2l3",
    "bleu_avg",
    "accuracy_rotation",
    "accuracy_puzzle",
    "accuracy_categ",
    "sample_count",
    "checkpoint_id",
    "corpus_id",
    "config_hash",
    "level_mode",
    "bleu_variant",
];

impl EvalReport {
    pub fn builder() -> EvalReportBuilder {
        EvalReportBuilder::default()
    }

    pub fn bleu_l1(&self) -> f64 {
        self.bleu_l1
    }

    pub fn bleu_l2l3(&self) -> f64 {
        self.bleu_l2l3
    }

    pub fn bleu_avg(&self) -> f64 {
        self.bleu_avg
    }

    pub fn accuracy(&self) -> &PretextAccuracy {
        &self.accuracy
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn checkpoint_id(&self) -> &str {
        &self.checkpoint_id
    }

    pub fn corpus_id(&self) -> &str {
        &self.corpus_id
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn level_mode(&self) -> &str {
        &self.level_mode
    }

    pub fn bleu_variant(&self) -> &str {
        &self.bleu_variant
    }

    fn acc(&self, i: usize) -> f64 {
        self.accuracy.entries()[i].1.unwrap_or(f64::NAN)
    }

    /// Machine-readable form: one `key=value` line per field, floats in
    /// shortest round-trip notation.
    pub fn to_records(&self) -> String {
        let vals = [
            format!("{:?}", self.bleu_l1),
            format!("{:?}", self.bleu_l2l3),
            format!("{:?}", self.bleu_avg),
            format!("{:?}", self.acc(0)),
            format!("{:?}", self.acc(1)),
            format!("{:?}", self.acc(2)),
            self.sample_count.to_string(),
            self.checkpoint_id.clone(),
            self.corpus_id.clone(),
            self.config_hash.clone(),
            self.level_mode.clone(),
            self.bleu_variant.clone(),
        ];
        KEYS.iter()
            .zip(vals)
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "| {:<10} | {:>8} | {:>8} | {:>8} |",
            "", "L1", "L2/L3", "avg."
        );
        let _ = writeln!(s, "|{:-<12}|{:-<10}|{:-<10}|{:-<10}|", "", "", "", "");
        let _ = writeln!(
            s,
            "| {:<10} | {:>8.2} | {:>8.2} | {:>8.2} |",
            "BLEU", self.bleu_l1, self.bleu_l2l3, self.bleu_avg
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "| {:<10} | {:>8} |", "task", "accuracy");
        let _ = writeln!(s, "|{:-<12}|{:-<10}|", "", "");
        for (i, (name, _)) in self.accuracy.entries().iter().enumerate() {
            let _ = writeln!(s, "| {:<10} | {:>8.4} |", name, self.acc(i));
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "samples:    {}", self.sample_count);
        let _ = writeln!(s, "checkpoint: {}", self.checkpoint_id);
        let _ = writeln!(s, "corpus:     {}", self.corpus_id);
        let _ = writeln!(s, "config:     {}", self.config_hash);
        let _ = writeln!(s, "level mode: {}", self.level_mode);
        let _ = writeln!(s, "bleu:       {}", self.bleu_variant);
        s
    }

    /// SHA-256 of the machine-readable form.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_records().as_bytes())
    }

    pub fn parse_records(text: &str) -> Result<Self> {
        let mut m = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Report(format!("bad line `{line}`")))?;
            if !KEYS.contains(&k) {
                return Err(Error::Report(format!("unknown field `{k}`")));
            }
            if m.insert(k, v).is_some() {
                return Err(Error::Report(format!("duplicate field `{k}`")));
            }
        }
        let get = |k: &str| {
            m.get(k)
                .copied()
                .ok_or_else(|| Error::Report(format!("missing field `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Report(format!("field `{k}` is not a number")))
        };
        let acc = PretextAccuracy {
            rotation: Some(num("accuracy_rotation")?),
            puzzle: Some(num("accuracy_puzzle")?),
            categ: Some(num("accuracy_categ")?),
        };
        let r = EvalReport::builder()
            .bleu(num("bleu_l1")?, num("bleu_l2l3")?)
            .accuracy(acc)
            .sample_count(
                get("sample_count")?
                    .parse()
                    .map_err(|_| Error::Report("field `sample_count` is not an integer".into()))?,
            )
            .checkpoint_id(get("checkpoint_id")?)
            .corpus_id(get("corpus_id")?)
            .config_hash(get("config_hash")?)
            .level_mode(get("level_mode")?)
            .build()?;
        if num("bleu_avg")? != r.bleu_avg {
            return Err(Error::Report(
                "bleu_avg is not the mean of the level scores".into(),
            ));
        }
        if get("bleu_variant")? != r.bleu_variant {
            return Err(Error::Report(format!(
                "unsupported BLEU variant `{}`",
                get("bleu_variant")?
            )));
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_records(&text)
    }
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<prefix>.txt` and `<prefix>.records`. Returns both paths.
pub fn emit_report(report: &EvalReport, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    let table = with_suffix(prefix, ".txt");
    let records = with_suffix(prefix, ".records");
    write_atomic(&table, report.to_table().as_bytes())?;
    write_atomic(&records, report.to_records().as_bytes())?;
    Ok((table, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> EvalReportBuilder {
        EvalReport::builder()
            .bleu(44.1, 14.6)
            .accuracy(PretextAccuracy {
                rotation: Some(0.7),
                puzzle: Some(0.25),
                categ: Some(1.0),
            })
            .sample_count(10)
            .checkpoint_id("ck")
            .corpus_id("corp")
            .config_hash("abc")
            .level_mode("token")
    }

    #[test]
    fn average_is_arithmetic_mean() {
        let r = full().build().unwrap();
        assert!((r.bleu_avg() - (44.1 + 14.6) / 2.0).abs() < 1e-9);
        // printed table values are rounded to one decimal
        assert!((r.bleu_avg() - 29.3).abs() <= 0.05 + 1e-9);
    }

    #[test]
    fn missing_fields_refused() {
        assert!(EvalReport::builder().build().is_err());
        let mut b = full();
        b.corpus_id = None;
        assert!(b.build().is_err());
        let mut b = full();
        b.accuracy = Some(PretextAccuracy {
            rotation: Some(1.0),
            puzzle: None,
            categ: Some(1.0),
        });
        assert!(b.build().is_err());
        assert!(full().bleu(101.0, 0.0).build().is_err());
        assert!(full().checkpoint_id("a\nb").build().is_err());
    }

    #[test]
    fn emit_parse_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = full().build().unwrap();
        let prefix = dir.path().join("eval");
        let (txt, rec) = emit_report(&r, &prefix).unwrap();
        let first = std::fs::read(&rec).unwrap();
        let first_txt = std::fs::read(&txt).unwrap();
        assert_eq!(EvalReport::load(&rec).unwrap(), r);
        emit_report(&r, &prefix).unwrap();
        assert_eq!(std::fs::read(&rec).unwrap(), first);
        assert_eq!(std::fs::read(&txt).unwrap(), first_txt);
        assert!(String::from_utf8(first_txt).unwrap().contains("29.35"));
    }

    #[test]
    fn parse_rejects_tampering() {
        let r = full().build().unwrap();
        let text = r.to_records();
        assert!(EvalReport::parse_records(
            &text.replace(&format!("bleu_avg={:?}", r.bleu_avg()), "bleu_avg=30.0")
        )
        .is_err());
        assert!(EvalReport::parse_records(&text.replace("sample_count=10\n", "")).is_err());
        assert!(EvalReport::parse_records(&format!("{text}extra=1\n")).is_err());
    }
}
