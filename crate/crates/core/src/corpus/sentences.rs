/// Splits text into sentences on `.`, `!` or `?` followed by whitespace or
/// the end of the text, except after an allowlisted abbreviation.
///
/// Ranges are character offsets and partition the text: leading whitespace
/// belongs to the first sentence and the whitespace after a terminator to the
/// sentence it ends. Text with no visible characters has no sentences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceSplitter {
    abbreviations: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::new(
            [
                "e.g.", "i.e.", "etc.", "vs.", "cf.", "fig.", "figs.", "approx.", "al.", "dr.",
                "mr.", "mrs.", "ms.", "no.", "eq.",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        )
    }
}

impl SentenceSplitter {
    /// Abbreviations are matched case-insensitively against the
    /// whitespace-delimited token ending at the terminator.
    pub fn new(abbreviations: Vec<String>) -> Self {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.to_lowercase())
                .collect(),
        }
    }

    pub fn split(&self, text: &str) -> Vec<(usize, usize)> {
        let chars: Vec<char> = text.chars().collect();
        if chars.iter().all(|c| c.is_whitespace()) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let at_boundary = matches!(c, '.' | '!' | '?')
                && chars.get(i + 1).is_none_or(|n| n.is_whitespace())
                && !self.is_abbreviation(&chars, i);
            if at_boundary {
                let mut end = i + 1;
                while end < chars.len() && chars[end].is_whitespace() {
                    end += 1;
                }
                if chars[start..end].iter().any(|c| !c.is_whitespace()) {
                    out.push((start, end));
                    start = end;
                }
                i = end;
            } else {
                i += 1;
            }
        }
        if start < chars.len() {
            if chars[start..].iter().all(|c| c.is_whitespace()) {
                if let Some(last) = out.last_mut() {
                    last.1 = chars.len();
                }
            } else {
                out.push((start, chars.len()));
            }
        }
        out
    }

    fn is_abbreviation(&self, chars: &[char], dot: usize) -> bool {
        if chars[dot] != '.' {
            return false;
        }
        let mut s = dot;
        while s > 0 && !chars[s - 1].is_whitespace() {
            s -= 1;
        }
        let token: String = chars[s..=dot].iter().collect::<String>().to_lowercase();
        let token = token.trim_start_matches(['(', '"', '\'']);
        self.abbreviations.iter().any(|a| a == token)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        SentenceSplitter::default()
            .split(s)
            .into_iter()
            .map(|(a, b)| s.chars().skip(a).take(b - a).collect())
            .collect()
    }

    #[test]
    fn splits_on_terminators() {
        assert_eq!(
            texts("One. Two! Three? Four"),
            vec!["One. ", "Two! ", "Three? ", "Four"]
        );
    }

    #[test]
    fn keeps_decimals_and_abbreviations() {
        assert_eq!(
            texts("Values reach 3.5 units, e.g. in May. Done."),
            vec!["Values reach 3.5 units, e.g. in May. ", "Done."]
        );
        assert_eq!(
            texts("See Fig. 2 for more. Ok."),
            vec!["See Fig. 2 for more. ", "Ok."]
        );
    }

    #[test]
    fn ranges_partition_the_text() {
        let s = "  Lead space.  Two.\n\nThree.  ";
        let r = SentenceSplitter::default().split(s);
        assert_eq!(r.first().unwrap().0, 0);
        assert_eq!(r.last().unwrap().1, s.chars().count());
        for w in r.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn blank_text_has_no_sentences() {
        assert!(SentenceSplitter::default().split("").is_empty());
        assert!(SentenceSplitter::default().split("   \n").is_empty());
    }

    #[test]
    fn custom_abbreviations() {
        let sp = SentenceSplitter::new(vec!["approx.".into()]);
        assert_eq!(sp.split("It is approx. five. Next.").len(), 2);
        assert_eq!(sp.split("See e.g. this. Next.").len(), 3);
    }
}
