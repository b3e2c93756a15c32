//! Chart corpora with semantically tagged alt text: parsing, validation,
//! filtering, splitting and summary statistics.

mod markup;
mod record;
mod rules;
mod sentences;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use markup::{
    parse_tagged, parse_tagged_with, strip_tags, Level, SemanticSpan, SentenceAnnotation,
    TagVocabulary, TaggedSummary,
};
pub use record::{
    load_corpus, save_corpus, ChartRecord, Corpus, ImageRef, RawRecord, INDEX_FILE, TAGS_FILE,
};
pub use rules::{accept_record, corpus_stats, split_corpus, CorpusStats, Rejection, Verdict};
pub use sentences::SentenceSplitter;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("unbalanced tag `{tag}` at byte {offset}")]
    UnbalancedTag { tag: String, offset: usize },
    #[error("unknown tag `{tag}` at byte {offset}")]
    UnknownTag { tag: String, offset: usize },
    #[error("tag `{inner}` opened inside `{outer}` at byte {offset}")]
    NestedTag {
        outer: String,
        inner: String,
        offset: usize,
    },
    #[error("empty `{tag}` span at byte {offset}")]
    EmptySpan { tag: String, offset: usize },
    #[error("{levels} sentence levels given for {sentences} sentences")]
    LevelCount { sentences: usize, levels: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus has no sentences")]
    NoSentences,
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{0}")]
    Config(String),
}

/// The eight chart types; the index is the classification label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChartCategory {
    Line,
    Bar,
    Area,
    Scatter,
    Multivariate,
    Panel,
    Pie,
    Box,
}

impl ChartCategory {
    pub const ALL: [ChartCategory; 8] = [
        ChartCategory::Line,
        ChartCategory::Bar,
        ChartCategory::Area,
        ChartCategory::Scatter,
        ChartCategory::Multivariate,
        ChartCategory::Panel,
        ChartCategory::Pie,
        ChartCategory::Box,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChartCategory::Line => "line",
            ChartCategory::Bar => "bar",
            ChartCategory::Area => "area",
            ChartCategory::Scatter => "scatter",
            ChartCategory::Multivariate => "multivariate",
            ChartCategory::Panel => "panel",
            ChartCategory::Pie => "pie",
            ChartCategory::Box => "box",
        }
    }
}

impl fmt::Display for ChartCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChartCategory {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CorpusError::Config(format!("unknown chart type `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unassigned" | "" => Ok(Split::Unassigned),
            _ => Err(CorpusError::Config(format!("unknown split `{s}`"))),
        }
    }
}
