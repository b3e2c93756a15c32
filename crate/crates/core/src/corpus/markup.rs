//! Flat `<tag>...</tag>` markup over alt-text summaries.

use std::collections::BTreeSet;
use std::fmt;

use super::sentences::SentenceSplitter;
use super::CorpusError;

/// Semantic level of a summary sentence. L2 and L3 are merged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    L1,
    L2L3,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::L1, Level::L2L3];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::L1 => "L1",
            Level::L2L3 => "L2L3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "L1" => Some(Level::L1),
            "L2L3" => Some(Level::L2L3),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A tagged range of the stripped text, in character offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticSpan {
    pub tag: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SentenceAnnotation {
    pub start: usize,
    pub end: usize,
    pub level: Level,
}

/// The active tag vocabulary and which tags mark L1 content.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagVocabulary {
    tags: Vec<String>,
    l1: BTreeSet<String>,
}

impl Default for TagVocabulary {
    /// Ten tags; the first six describe chart construction (L1).
    fn default() -> Self {
        let parsed = Self::parse_config(
            "L1:title\nL1:chart_type\nL1:axis\nL1:legend\nL1:encoding\nL1:color\n\
             trend\nstatistics\ncomparison\noutlier\n",
        );
        parsed.expect("built-in vocabulary parses")
    }
}

impl TagVocabulary {
    pub fn new(tags: Vec<String>, l1: BTreeSet<String>) -> Result<Self, CorpusError> {
        for t in l1.iter().chain(&tags) {
            if !is_tag_name(t) {
                return Err(CorpusError::Config(format!("invalid tag name `{t}`")));
            }
        }
        if let Some(missing) = l1.iter().find(|t| !tags.contains(t)) {
            return Err(CorpusError::Config(format!(
                "L1 tag `{missing}` is not in the vocabulary"
            )));
        }
        Ok(Self { tags, l1 })
    }

    /// One tag per line; `L1:` marks L1 tags. Blank lines and `#` comments
    /// are skipped.
    pub fn parse_config(text: &str) -> Result<Self, CorpusError> {
        let mut tags = Vec::new();
        let mut l1 = BTreeSet::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, is_l1) = match line.strip_prefix("L1:") {
                Some(rest) => (rest.trim(), true),
                None => (line, false),
            };
            if tags.iter().any(|t| t == name) {
                return Err(CorpusError::Config(format!("duplicate tag `{name}`")));
            }
            tags.push(name.to_string());
            if is_l1 {
                l1.insert(name.to_string());
            }
        }
        Self::new(tags, l1)
    }

    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for t in &self.tags {
            if self.l1.contains(t) {
                out.push_str("L1:");
            }
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    pub fn is_l1(&self, tag: &str) -> bool {
        self.l1.contains(tag)
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }
}

fn is_tag_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Summary text with markup removed, its spans and its sentences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSummary {
    pub text: String,
    pub spans: Vec<SemanticSpan>,
    pub sentences: Vec<SentenceAnnotation>,
}

impl TaggedSummary {
    /// Re-inserts the span tags into the text.
    pub fn to_markup(&self) -> String {
        let mut out = String::with_capacity(self.text.len() + 16 * self.spans.len());
        let mut spans = self.spans.iter().peekable();
        let mut open: Option<&SemanticSpan> = None;
        let n = self.char_len();
        for (i, ch) in self.text.chars().chain(std::iter::once('\0')).enumerate() {
            if let Some(s) = open {
                if s.end == i {
                    out.push_str("</");
                    out.push_str(&s.tag);
                    out.push('>');
                    open = None;
                }
            }
            if let Some(s) = spans.peek() {
                if s.start == i {
                    out.push('<');
                    out.push_str(&s.tag);
                    out.push('>');
                    open = spans.next();
                }
            }
            if i < n {
                out.push(ch);
            }
        }
        out
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Text of one sentence, including trailing whitespace.
    pub fn sentence_text(&self, s: &SentenceAnnotation) -> String {
        self.text
            .chars()
            .skip(s.start)
            .take(s.end - s.start)
            .collect()
    }

    /// Sentences of one level joined by single spaces.
    pub fn level_text(&self, level: Level) -> String {
        self.sentences
            .iter()
            .filter(|s| s.level == level)
            .map(|s| self.sentence_text(s).trim().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }

    pub fn count_level(&self, level: Level) -> usize {
        self.sentences.iter().filter(|s| s.level == level).count()
    }

    /// Replaces derived levels with explicit ones.
    pub fn set_levels(&mut self, levels: &[Level]) -> Result<(), CorpusError> {
        if levels.len() != self.sentences.len() {
            return Err(CorpusError::LevelCount {
                sentences: self.sentences.len(),
                levels: levels.len(),
            });
        }
        for (s, &l) in self.sentences.iter_mut().zip(levels) {
            s.level = l;
        }
        Ok(())
    }

    pub fn levels(&self) -> Vec<Level> {
        self.sentences.iter().map(|s| s.level).collect()
    }
}

/// Tokens of the markup scanner.
enum Piece<'a> {
    Text(char),
    Open(&'a str),
    Close(&'a str),
}

/// Recognizes `<name>` / `</name>` starting at byte `i`; any other `<` is
/// literal text.
fn scan_tag(markup: &str, i: usize) -> Option<(Piece<'_>, usize)> {
    let rest = &markup[i..];
    let (closing, body_start) = if rest.starts_with("</") {
        (true, 2)
    } else {
        (false, 1)
    };
    let end = rest.find('>')?;
    if end <= body_start {
        return None;
    }
    let name = &rest[body_start..end];
    if !is_tag_name(name) {
        return None;
    }
    let piece = if closing {
        Piece::Close(name)
    } else {
        Piece::Open(name)
    };
    Some((piece, i + end + 1))
}

/// Removes every tag, keeping the text between them.
pub fn strip_tags(markup: &str) -> String {
    let mut out = String::with_capacity(markup.len());
    let mut i = 0;
    while i < markup.len() {
        if markup.as_bytes()[i] == b'<' {
            if let Some((_, next)) = scan_tag(markup, i) {
                i = next;
                continue;
            }
        }
        let ch = markup[i..].chars().next().expect("in bounds");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

/// Parses markup, splitting sentences with the default splitter and
/// deriving each sentence's level from the spans it overlaps.
pub fn parse_tagged(markup: &str, vocab: &TagVocabulary) -> Result<TaggedSummary, CorpusError> {
    parse_tagged_with(markup, vocab, &SentenceSplitter::default())
}

pub fn parse_tagged_with(
    markup: &str,
    vocab: &TagVocabulary,
    splitter: &SentenceSplitter,
) -> Result<TaggedSummary, CorpusError> {
    let mut text = String::with_capacity(markup.len());
    let mut chars = 0usize;
    let mut spans = Vec::new();
    let mut open: Option<(String, usize)> = None;
    let mut i = 0;
    while i < markup.len() {
        let (piece, next) = if markup.as_bytes()[i] == b'<' {
            match scan_tag(markup, i) {
                Some(found) => found,
                None => (Piece::Text('<'), i + 1),
            }
        } else {
            let ch = markup[i..].chars().next().expect("in bounds");
            (Piece::Text(ch), i + ch.len_utf8())
        };
        match piece {
            Piece::Text(ch) => {
                text.push(ch);
                chars += 1;
            }
            Piece::Open(name) => {
                if !vocab.contains(name) {
                    return Err(CorpusError::UnknownTag {
                        tag: name.to_string(),
                        offset: i,
                    });
                }
                if let Some((outer, _)) = &open {
                    return Err(CorpusError::NestedTag {
                        outer: outer.clone(),
                        inner: name.to_string(),
                        offset: i,
                    });
                }
                open = Some((name.to_string(), chars));
            }
            Piece::Close(name) => match open.take() {
                Some((tag, start)) if tag == name => {
                    if start == chars {
                        return Err(CorpusError::EmptySpan { tag, offset: i });
                    }
                    spans.push(SemanticSpan {
                        tag,
                        start,
                        end: chars,
                    });
                }
                _ => {
                    return Err(CorpusError::UnbalancedTag {
                        tag: name.to_string(),
                        offset: i,
                    })
                }
            },
        }
        i = next;
    }
    if let Some((tag, _)) = open {
        return Err(CorpusError::UnbalancedTag {
            tag,
            offset: markup.len(),
        });
    }

    let sentences = splitter
        .split(&text)
        .into_iter()
        .map(|(start, end)| {
            let l1 = spans
                .iter()
                .any(|s| s.start < end && start < s.end && vocab.is_l1(&s.tag));
            SentenceAnnotation {
                start,
                end,
                level: if l1 { Level::L1 } else { Level::L2L3 },
            }
        })
        .collect();
    Ok(TaggedSummary {
        text,
        spans,
        sentences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab() -> TagVocabulary {
        TagVocabulary::default()
    }

    #[test]
    fn strips_a_title_span() {
        let s = parse_tagged("<title>Sales chart</title>. Values rose.", &vocab()).unwrap();
        assert_eq!(s.text, "Sales chart. Values rose.");
        assert_eq!(
            s.spans,
            vec![SemanticSpan {
                tag: "title".into(),
                start: 0,
                end: 11
            }]
        );
        assert_eq!(s.sentences.len(), 2);
        assert_eq!(s.sentences[0].level, Level::L1);
        assert_eq!(s.sentences[1].level, Level::L2L3);
    }

    #[test]
    fn plain_text_is_unchanged() {
        let s = parse_tagged("plain text, no tags.", &vocab()).unwrap();
        assert_eq!(s.text, "plain text, no tags.");
        assert!(s.spans.is_empty());
    }

    #[test]
    fn malformed_markup_is_rejected() {
        let v = vocab();
        assert!(matches!(
            parse_tagged("<title>A</badtag>", &v),
            Err(CorpusError::UnbalancedTag { .. })
        ));
        assert!(matches!(
            parse_tagged("<title>A", &v),
            Err(CorpusError::UnbalancedTag { .. })
        ));
        assert!(matches!(
            parse_tagged("A</title>", &v),
            Err(CorpusError::UnbalancedTag { .. })
        ));
        assert!(matches!(
            parse_tagged("<badtag>A</badtag>", &v),
            Err(CorpusError::UnknownTag { .. })
        ));
        assert!(matches!(
            parse_tagged("<title>A <axis>B</axis></title>", &v),
            Err(CorpusError::NestedTag { .. })
        ));
        assert!(matches!(
            parse_tagged("<title></title>", &v),
            Err(CorpusError::EmptySpan { .. })
        ));
    }

    #[test]
    fn offsets_count_characters_not_bytes() {
        let s = parse_tagged("Températures <trend>montent</trend>.", &vocab()).unwrap();
        assert_eq!(s.spans[0].start, 13);
        assert_eq!(s.spans[0].end, 20);
        assert_eq!(s.to_markup(), "Températures <trend>montent</trend>.");
    }

    #[test]
    fn literal_angle_brackets_survive() {
        let m = "p < 0.05 and <statistics>x<y</statistics> holds.";
        let s = parse_tagged(m, &vocab()).unwrap();
        assert_eq!(s.text, "p < 0.05 and x<y holds.");
        assert_eq!(s.to_markup(), m);
    }

    #[test]
    fn vocabulary_config_round_trip() {
        let v = TagVocabulary::parse_config("# tags\nL1:title\ntrend\n\nL1:axis\n").unwrap();
        assert!(v.is_l1("title") && v.is_l1("axis") && !v.is_l1("trend"));
        assert_eq!(TagVocabulary::parse_config(&v.to_config()).unwrap(), v);
        assert!(TagVocabulary::parse_config("a\na\n").is_err());
        assert!(TagVocabulary::parse_config("bad name\n").is_err());
    }

    fn markup_strategy() -> impl Strategy<Value = String> {
        let tags = TagVocabulary::default().tags().to_vec();
        let text = "[a-zA-Z0-9 ,.!?é-]{1,12}";
        let piece = prop_oneof![
            text.prop_map(|t| (None, t)),
            (proptest::sample::select(tags), text).prop_map(|(tag, t)| (Some(tag), t)),
        ];
        proptest::collection::vec(piece, 0..8).prop_map(|pieces| {
            pieces
                .into_iter()
                .map(|(tag, t)| match tag {
                    Some(tag) => format!("<{tag}>{t}</{tag}>"),
                    None => t,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn markup_round_trips(m in markup_strategy()) {
            let s = parse_tagged(&m, &vocab()).unwrap();
            prop_assert_eq!(s.to_markup(), m.clone());
            let stripped = strip_tags(&m);
            prop_assert_eq!(&stripped, &s.text);
            let plain = parse_tagged(&stripped, &vocab()).unwrap();
            prop_assert!(plain.spans.is_empty());
            prop_assert_eq!(plain.text, s.text.clone());
            let n = s.char_len();
            for sp in &s.spans {
                prop_assert!(sp.start < sp.end && sp.end <= n);
            }
            for w in s.spans.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
        }
    }
}
