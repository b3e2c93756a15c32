use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::markup::{parse_tagged, Level, TagVocabulary, TaggedSummary};
use super::{ChartCategory, CorpusError, Split};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::raster::RgbImage;

pub const INDEX_FILE: &str = "index.jsonl";
pub const TAGS_FILE: &str = "tags.txt";

/// Where a record's raster lives.
#[derive(Clone, Debug, PartialEq)]
pub enum ImageRef {
    File(PathBuf),
    Raster(RgbImage),
}

impl ImageRef {
    pub fn load(&self) -> Result<RgbImage> {
        match self {
            ImageRef::File(p) => RgbImage::load(p),
            ImageRef::Raster(img) => Ok(img.clone()),
        }
    }
}

/// One corpus entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartRecord {
    pub id: String,
    pub doi: String,
    pub figure_number: u32,
    pub image: ImageRef,
    pub caption: String,
    pub summary: TaggedSummary,
    pub chart_type: ChartCategory,
    pub split: Split,
}

impl ChartRecord {
    pub fn load_image(&self) -> Result<RgbImage> {
        self.image.load().map_err(|e| Error::in_record(&self.id, e))
    }
}

/// A line of the corpus index, exactly as stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRecord {
    pub id: String,
    pub doi: String,
    pub figure_number: u32,
    pub image_path: String,
    pub caption: String,
    pub summary_markup: String,
    pub chart_type: String,
    pub split: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_levels: Option<Vec<String>>,
}

impl RawRecord {
    pub fn into_record(self, base: &Path, vocab: &TagVocabulary) -> Result<ChartRecord> {
        let id = self.id.clone();
        let wrap = |e: CorpusError| Error::in_record(&id, e.into());
        if self.id.is_empty() {
            return Err(CorpusError::Config("record id is empty".into()).into());
        }
        if self.figure_number == 0 {
            return Err(wrap(CorpusError::Config(
                "figure_number must be positive".into(),
            )));
        }
        let mut summary = parse_tagged(&self.summary_markup, vocab).map_err(wrap)?;
        if let Some(levels) = &self.sentence_levels {
            let parsed = levels
                .iter()
                .map(|l| {
                    Level::parse(l)
                        .ok_or_else(|| CorpusError::Config(format!("unknown level `{l}`")))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(wrap)?;
            summary.set_levels(&parsed).map_err(wrap)?;
        }
        Ok(ChartRecord {
            chart_type: self.chart_type.parse().map_err(wrap)?,
            split: self.split.parse().map_err(wrap)?,
            id: self.id,
            doi: self.doi,
            figure_number: self.figure_number,
            image: ImageRef::File(base.join(&self.image_path)),
            caption: self.caption,
            summary,
        })
    }

    pub fn from_record(r: &ChartRecord, image_path: String) -> Self {
        Self {
            id: r.id.clone(),
            doi: r.doi.clone(),
            figure_number: r.figure_number,
            image_path,
            caption: r.caption.clone(),
            summary_markup: r.summary.to_markup(),
            chart_type: r.chart_type.as_str().to_string(),
            split: r.split.as_str().to_string(),
            sentence_levels: Some(
                r.summary
                    .levels()
                    .iter()
                    .map(|l| l.as_str().to_string())
                    .collect(),
            ),
        }
    }
}

/// Records plus the vocabulary they were parsed with.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub vocab: TagVocabulary,
    pub records: Vec<ChartRecord>,
}

impl Corpus {
    pub fn new(vocab: TagVocabulary, records: Vec<ChartRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()).into());
            }
        }
        Ok(Self { vocab, records })
    }

    pub fn split(&self, split: Split) -> Vec<&ChartRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    pub fn get(&self, id: &str) -> Option<&ChartRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

fn index_location(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.join(INDEX_FILE), path.to_path_buf())
    } else {
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        (path.to_path_buf(), base)
    }
}

/// Reads a corpus directory (or index file). The tag vocabulary comes from
/// `tags.txt` beside the index when present, otherwise the built-in one.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let (index, base) = index_location(path);
    let tags_path = base.join(TAGS_FILE);
    let vocab = if tags_path.is_file() {
        let text = std::fs::read_to_string(&tags_path).map_err(|e| Error::io(&tags_path, e))?;
        TagVocabulary::parse_config(&text)?
    } else {
        TagVocabulary::default()
    };
    load_corpus_with(&index, &base, vocab)
}

pub fn load_corpus_with(index: &Path, base: &Path, vocab: TagVocabulary) -> Result<Corpus> {
    let text = std::fs::read_to_string(index).map_err(|e| Error::io(index, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| CorpusError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(raw.into_record(base, &vocab)?);
    }
    Corpus::new(vocab, records)
}

/// Writes `index.jsonl`, `tags.txt` and every image (as `images/<id>.png`)
/// into `dir`.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    let mut index = String::new();
    for r in &corpus.records {
        let rel = format!("images/{}.png", sanitize(&r.id));
        let dest = dir.join(&rel);
        match &r.image {
            ImageRef::File(src) if src.extension().is_some_and(|e| e == "png") => {
                let bytes = std::fs::read(src).map_err(|e| Error::io(src, e))?;
                write_atomic(&dest, &bytes)?;
            }
            other => other.load()?.save_png(&dest)?,
        }
        let raw = RawRecord::from_record(r, rel);
        index.push_str(&serde_json::to_string(&raw).expect("plain struct serializes"));
        index.push('\n');
    }
    write_atomic(&dir.join(TAGS_FILE), corpus.vocab.to_config().as_bytes())?;
    write_atomic(&dir.join(INDEX_FILE), index.as_bytes())
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str) -> RawRecord {
        RawRecord {
            id: id.into(),
            doi: "10.1145/0000".into(),
            figure_number: 2,
            image_path: "images/a.png".into(),
            caption: String::new(),
            summary_markup: "<chart_type>A bar chart</chart_type>. It rises. It ends.".into(),
            chart_type: "bar".into(),
            split: "unassigned".into(),
            sentence_levels: None,
        }
    }

    #[test]
    fn explicit_levels_override_derived_ones() {
        let mut r = raw("a");
        let v = TagVocabulary::default();
        let rec = r.clone().into_record(Path::new("."), &v).unwrap();
        assert_eq!(
            rec.summary.levels(),
            vec![Level::L1, Level::L2L3, Level::L2L3]
        );
        r.sentence_levels = Some(vec!["L1".into(), "L1".into(), "L2L3".into()]);
        let rec = r.clone().into_record(Path::new("."), &v).unwrap();
        assert_eq!(
            rec.summary.levels(),
            vec![Level::L1, Level::L1, Level::L2L3]
        );
        r.sentence_levels = Some(vec!["L1".into()]);
        assert!(r.into_record(Path::new("."), &v).is_err());
    }

    #[test]
    fn invalid_fields_are_rejected() {
        let v = TagVocabulary::default();
        let mut r = raw("a");
        r.chart_type = "donut".into();
        assert!(r.into_record(Path::new("."), &v).is_err());
        let mut r = raw("");
        r.id.clear();
        assert!(r.into_record(Path::new("."), &v).is_err());
        let mut r = raw("a");
        r.figure_number = 0;
        assert!(r.into_record(Path::new("."), &v).is_err());
        assert!(serde_json::from_str::<RawRecord>(r#"{"id":"x","bogus":1}"#).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let v = TagVocabulary::default();
        let a = raw("a").into_record(Path::new("."), &v).unwrap();
        assert!(matches!(
            Corpus::new(v, vec![a.clone(), a]),
            Err(Error::Corpus(CorpusError::DuplicateId(_)))
        ));
    }

    #[test]
    fn save_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let v = TagVocabulary::default();
        let mut rec = raw("fig/1").into_record(Path::new("."), &v).unwrap();
        rec.image = ImageRef::Raster(RgbImage::filled(4, 3, [1, 2, 3]));
        let corpus = Corpus::new(v, vec![rec.clone()]).unwrap();
        save_corpus(&corpus, dir.path()).unwrap();
        let back = load_corpus(dir.path()).unwrap();
        assert_eq!(back.records.len(), 1);
        let r = &back.records[0];
        assert_eq!(r.summary, rec.summary);
        assert_eq!(r.load_image().unwrap(), RgbImage::filled(4, 3, [1, 2, 3]));
        // second save of the loaded corpus yields the same index bytes
        let first = std::fs::read(dir.path().join(INDEX_FILE)).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        save_corpus(&back, dir2.path()).unwrap();
        assert_eq!(std::fs::read(dir2.path().join(INDEX_FILE)).unwrap(), first);
    }
}
