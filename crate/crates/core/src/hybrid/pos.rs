use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::text::tokens;

const BUNDLED_LEXICON: &str = include_str!("../../data/pos_lexicon.txt");

/// Word tokens of a fragment with one coarse tag each. Punctuation tokens are
/// not tagged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosTaggedFragment {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl PosTaggedFragment {
    pub fn new(tokens: Vec<String>, tags: Vec<String>) -> Result<Self> {
        if tokens.len() != tags.len() {
            return Err(Error::Invalid(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        Ok(PosTaggedFragment { tokens, tags })
    }

    pub fn tag_sequence(&self) -> Vec<&str> {
        self.tags.iter().map(String::as_str).collect()
    }
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

fn word_tokens(fragment: &str) -> Vec<String> {
    tokens(fragment)
        .into_iter()
        .filter(|t| is_word(t))
        .map(str::to_string)
        .collect()
}

fn bundled_lexicon() -> &'static HashMap<String, String> {
    static LEXICON: OnceLock<HashMap<String, String>> = OnceLock::new();
    LEXICON.get_or_init(|| {
        BUNDLED_LEXICON
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let mut parts = l.split_whitespace();
                Some((parts.next()?.to_string(), parts.next()?.to_string()))
            })
            .collect()
    })
}

const ADJECTIVE_SUFFIXES: [&str; 10] = ["ous", "ful", "ive", "able", "ible", "less", "ish", "ical", "ic", "al"];
const NOUN_SUFFIXES: [&str; 8] = ["tion", "sion", "ment", "ness", "ity", "ism", "ist", "ship"];
const NOT_SUPERLATIVE: [&str; 8] = [
    "honest", "modest", "interest", "protest", "forest", "contest", "request", "arrest",
];

/// Tag for a single word from the lexicon, then suffix rules; unknown words
/// default to NN.
pub fn tag_word(word: &str) -> &'static str {
    let lower = word.to_lowercase();
    if let Some(tag) = bundled_lexicon().get(&lower) {
        return tag.as_str();
    }
    if lower.chars().all(|c| c.is_ascii_digit()) {
        return "CD";
    }
    let n = lower.chars().count();
    if lower.ends_with("est") && n >= 6 && !NOT_SUPERLATIVE.contains(&lower.as_str()) {
        return "JJS";
    }
    if lower.ends_with("ly") && n > 4 {
        return "RB";
    }
    if lower.ends_with("ing") && n > 5 {
        return "VBG";
    }
    if lower.ends_with("ed") && n > 4 {
        return "VBN";
    }
    if NOUN_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
        return "NN";
    }
    for s in NOUN_SUFFIXES {
        if lower.ends_with(&format!("{s}s")) {
            return "NNS";
        }
    }
    if ADJECTIVE_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
        return "JJ";
    }
    if n > 3 && lower.ends_with('s') && !lower.ends_with("ss") && !lower.ends_with("us") && !lower.ends_with("is") {
        return "NNS";
    }
    "NN"
}

/// Tags a fragment with the built-in tagger.
pub fn pos_tag(fragment: &str) -> PosTaggedFragment {
    let toks = word_tokens(fragment);
    let tags = toks.iter().map(|t| tag_word(t).to_string()).collect();
    PosTaggedFragment { tokens: toks, tags }
}

/// Tags supplied by an external tagger, keyed by fragment id.
#[derive(Debug, Clone, Default)]
pub struct PosSidecar {
    tags: BTreeMap<String, Vec<String>>,
}

impl PosSidecar {
    /// Lines are `fragment_id<TAB>space-joined tags`. Punctuation tags (no
    /// letters) are dropped so the sequence lines up with word tokens.
    pub fn parse(content: &str, origin: &str) -> Result<Self> {
        let mut tags = BTreeMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected fragment_id<TAB>tags"))?;
            let seq = rest
                .split_whitespace()
                .filter(|t| t.chars().any(|c| c.is_ascii_alphabetic()))
                .map(str::to_string)
                .collect();
            tags.insert(id.trim().to_string(), seq);
        }
        Ok(PosSidecar { tags })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Sidecar tags when present and consistent with the fragment's word
    /// tokens, otherwise the built-in tagger.
    pub fn tag(&self, fragment_id: &str, fragment: &str) -> PosTaggedFragment {
        let toks = word_tokens(fragment);
        match self.tags.get(fragment_id) {
            Some(tags) if tags.len() == toks.len() => PosTaggedFragment {
                tokens: toks,
                tags: tags.clone(),
            },
            Some(tags) => {
                log::warn!(
                    "{fragment_id}: sidecar has {} tags for {} tokens, using built-in tagger",
                    tags.len(),
                    toks.len()
                );
                pos_tag(fragment)
            }
            None => pos_tag(fragment),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_and_suffix_examples() {
        assert_eq!(tag_word("warmonger"), "NN");
        assert_eq!(tag_word("greatest"), "JJS");
        assert_eq!(tag_word("honest"), "NN");
        assert_eq!(tag_word("dangerous"), "JJ");
        assert_eq!(tag_word("traitors"), "NNS");
        assert_eq!(tag_word("the"), "DT");
    }

    #[test]
    fn empty_fragment_has_no_tags() {
        let t = pos_tag("");
        assert!(t.tokens.is_empty() && t.tags.is_empty());
        assert!(pos_tag(" ... ").tags.is_empty());
    }

    #[test]
    fn punctuation_is_skipped() {
        assert_eq!(pos_tag("\"warmonger!\"").tag_sequence(), vec!["NN"]);
    }

    #[test]
    fn sidecar_overrides_and_falls_back() {
        let sc = PosSidecar::parse("a_0_5\tJJ .\nb_0_3\tNN NN\n", "t").unwrap();
        assert_eq!(sc.tag("a_0_5", "Great!").tag_sequence(), vec!["JJ"]);
        // Count mismatch: built-in tagger.
        assert_eq!(sc.tag("b_0_3", "war").tag_sequence(), vec!["NN"]);
        assert_eq!(sc.tag("zzz", "evil").tag_sequence(), vec!["JJ"]);
    }
}
