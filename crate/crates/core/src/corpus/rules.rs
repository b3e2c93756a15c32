use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::markup::Level;
use super::record::ChartRecord;
use super::{CorpusError, Split};

pub const MIN_SENTENCES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    TooFewSentences,
    MissingL1,
    MissingL2L3,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::TooFewSentences => "TooFewSentences",
            Rejection::MissingL1 => "MissingL1",
            Rejection::MissingL2L3 => "MissingL2L3",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub reasons: Vec<Rejection>,
}

/// Applies the corpus filter. Every failed rule is listed.
pub fn accept_record(r: &ChartRecord) -> Verdict {
    let s = &r.summary;
    let mut reasons = Vec::new();
    if s.sentences.len() < MIN_SENTENCES {
        reasons.push(Rejection::TooFewSentences);
    }
    if s.count_level(Level::L1) == 0 {
        reasons.push(Rejection::MissingL1);
    }
    if s.count_level(Level::L2L3) == 0 {
        reasons.push(Rejection::MissingL2L3);
    }
    Verdict {
        accepted: reasons.is_empty(),
        reasons,
    }
}

/// Assigns ids to train/val/test with sizes floor(0.8n), floor(0.1n) and the
/// remainder. The result depends only on the set of ids and the seed.
pub fn split_corpus(ids: &[String], seed: u64) -> Result<BTreeMap<String, Split>, CorpusError> {
    if ids.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(CorpusError::DuplicateId(w[0].clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let n = sorted.len();
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            (id.clone(), split)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusStats {
    pub record_count: usize,
    pub sentence_count: usize,
    pub word_count: usize,
    pub l1_sentences: usize,
    pub avg_sentence_count: f64,
    pub avg_word_count: f64,
    pub l1_ratio: f64,
    pub l2l3_ratio: f64,
}

impl CorpusStats {
    fn from_totals(records: usize, sentences: usize, words: usize, l1: usize) -> Self {
        Self {
            record_count: records,
            sentence_count: sentences,
            word_count: words,
            l1_sentences: l1,
            avg_sentence_count: sentences as f64 / records as f64,
            avg_word_count: words as f64 / records as f64,
            l1_ratio: l1 as f64 / sentences as f64,
            l2l3_ratio: (sentences - l1) as f64 / sentences as f64,
        }
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "record_count={}", self.record_count)?;
        writeln!(f, "sentence_count={}", self.sentence_count)?;
        writeln!(f, "word_count={}", self.word_count)?;
        writeln!(f, "l1_sentences={}", self.l1_sentences)?;
        writeln!(f, "avg_sentence_count={:.6}", self.avg_sentence_count)?;
        writeln!(f, "avg_word_count={:.6}", self.avg_word_count)?;
        writeln!(f, "l1_ratio={:.6}", self.l1_ratio)?;
        write!(f, "l2l3_ratio={:.6}", self.l2l3_ratio)
    }
}

pub fn corpus_stats<'a, I>(records: I) -> Result<CorpusStats, CorpusError>
where
    I: IntoIterator<Item = &'a ChartRecord>,
{
    let (mut n, mut sentences, mut words, mut l1) = (0, 0, 0, 0);
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(CorpusError::DuplicateId(r.id.clone()));
        }
        n += 1;
        sentences += r.summary.sentences.len();
        words += r.summary.word_count();
        l1 += r.summary.count_level(Level::L1);
    }
    if n == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    if sentences == 0 {
        return Err(CorpusError::NoSentences);
    }
    Ok(CorpusStats::from_totals(n, sentences, words, l1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_tagged, ChartCategory, ImageRef, TagVocabulary};
    use proptest::prelude::*;
    use std::path::PathBuf;

    fn record(id: &str, levels: &[Level], words_per_sentence: usize) -> ChartRecord {
        let text: Vec<String> = (0..levels.len())
            .map(|i| {
                let mut w: Vec<String> = (0..words_per_sentence).map(|j| format!("w{j}")).collect();
                w[0] = format!("S{i}");
                format!("{}.", w.join(" "))
            })
            .collect();
        let mut summary = parse_tagged(&text.join(" "), &TagVocabulary::default()).unwrap();
        summary.set_levels(levels).unwrap();
        ChartRecord {
            id: id.into(),
            doi: String::new(),
            figure_number: 1,
            image: ImageRef::File(PathBuf::from("x.png")),
            caption: String::new(),
            summary,
            chart_type: ChartCategory::Line,
            split: Split::Unassigned,
        }
    }

    use Level::{L1, L2L3};

    #[test]
    fn filter_examples() {
        let ok = record("a", &[L1, L1, L2L3, L2L3, L2L3], 4);
        assert_eq!(
            accept_record(&ok),
            Verdict {
                accepted: true,
                reasons: vec![]
            }
        );
        let short = record("b", &[L1, L2L3], 4);
        assert_eq!(
            accept_record(&short).reasons,
            vec![Rejection::TooFewSentences]
        );
        let no_l1 = record("c", &[L2L3; 4], 4);
        assert_eq!(accept_record(&no_l1).reasons, vec![Rejection::MissingL1]);
        let bad = record("d", &[L1], 4);
        assert_eq!(
            accept_record(&bad).reasons,
            vec![Rejection::TooFewSentences, Rejection::MissingL2L3]
        );
    }

    #[test]
    fn split_sizes() {
        let ids: Vec<String> = (0..100).map(|i| format!("id{i}")).collect();
        let a = split_corpus(&ids, 7).unwrap();
        let count = |s| a.values().filter(|v| **v == s).count();
        assert_eq!(
            (count(Split::Train), count(Split::Val), count(Split::Test)),
            (80, 10, 10)
        );
        assert_eq!(a, split_corpus(&ids, 7).unwrap());
        assert_ne!(a, split_corpus(&ids, 8).unwrap());
        let one = split_corpus(&["x".to_string()], 0).unwrap();
        assert_eq!(one["x"], Split::Test);
        assert_eq!(split_corpus(&[], 0), Err(CorpusError::EmptyCorpus));
    }

    #[test]
    fn single_record_stats() {
        let r = record("a", &[L1, L1, L1, L2L3, L2L3], 8);
        let s = corpus_stats([&r]).unwrap();
        assert_eq!(
            (
                s.avg_sentence_count,
                s.avg_word_count,
                s.l1_ratio,
                s.l2l3_ratio
            ),
            (5.0, 40.0, 0.6, 0.4)
        );
        assert!(matches!(
            corpus_stats(std::iter::empty()),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    fn level_vec() -> impl Strategy<Value = Vec<Level>> {
        prop::collection::vec(prop_oneof![Just(L1), Just(L2L3)], 1..7)
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 1usize..1000, seed in any::<u64>()) {
            let ids: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
            let a = split_corpus(&ids, seed).unwrap();
            prop_assert_eq!(a.len(), n);
            for id in &ids {
                prop_assert!(a.contains_key(id));
                prop_assert!(a[id] != Split::Unassigned);
            }
            let train = a.values().filter(|v| **v == Split::Train).count();
            let val = a.values().filter(|v| **v == Split::Val).count();
            prop_assert_eq!(train, n * 8 / 10);
            prop_assert_eq!(val, n / 10);
        }

        #[test]
        fn adding_l1_sentence_is_monotone(levels in level_vec()) {
            let before = accept_record(&record("a", &levels, 3));
            let mut more = levels.clone();
            more.push(L1);
            let after = accept_record(&record("a", &more, 3));
            prop_assert!(!before.accepted || after.accepted);
        }

        #[test]
        fn stats_combine_as_weighted_means(
            left in prop::collection::vec((level_vec(), 1usize..9), 1..6),
            right in prop::collection::vec((level_vec(), 1usize..9), 1..6),
        ) {
            let build = |parts: &[(Vec<Level>, usize)], p: &str| -> Vec<ChartRecord> {
                parts.iter().enumerate().map(|(i, (l, w))| record(&format!("{p}{i}"), l, *w)).collect()
            };
            let a = build(&left, "a");
            let b = build(&right, "b");
            let sa = corpus_stats(&a).unwrap();
            let sb = corpus_stats(&b).unwrap();
            let all = corpus_stats(a.iter().chain(b.iter())).unwrap();
            let (na, nb) = (sa.record_count as f64, sb.record_count as f64);
            let mean = |x: f64, y: f64| (na * x + nb * y) / (na + nb);
            prop_assert!((all.avg_sentence_count - mean(sa.avg_sentence_count, sb.avg_sentence_count)).abs() < 1e-12);
            prop_assert!((all.avg_word_count - mean(sa.avg_word_count, sb.avg_word_count)).abs() < 1e-12);
            // ratios are per sentence, so they combine weighted by sentence count
            let (ca, cb) = (sa.sentence_count as f64, sb.sentence_count as f64);
            prop_assert!((all.l1_ratio - (ca * sa.l1_ratio + cb * sb.l1_ratio) / (ca + cb)).abs() < 1e-12);
            prop_assert!((all.l1_ratio + all.l2l3_ratio - 1.0).abs() < 1e-12);
        }
    }
}
