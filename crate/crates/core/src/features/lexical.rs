use std::collections::BTreeSet;

use crate::text::{count_occurrences, words_lower};
use crate::{Error, Result};

/// A fragment repeated more than this many times in its article fires the
/// repetition feature.
pub const REPETITION_THRESHOLD: usize = 4;

const DEFAULT_WORDLISTS: &str = include_str!("../../data/wordlists.txt");

/// Word lists behind the doubt and superlative features. Loaded from a file
/// with `[section]` headers and one word per line; `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordLists {
    pub auxiliary: BTreeSet<String>,
    pub modal: BTreeSet<String>,
    pub question: BTreeSet<String>,
    pub superlative_irregular: BTreeSet<String>,
    pub superlative_stoplist: BTreeSet<String>,
}

impl Default for WordLists {
    fn default() -> Self {
        WordLists::parse(DEFAULT_WORDLISTS).expect("bundled word lists parse")
    }
}

impl WordLists {
    pub fn parse(content: &str) -> Result<Self> {
        let mut lists = WordLists {
            auxiliary: BTreeSet::new(),
            modal: BTreeSet::new(),
            question: BTreeSet::new(),
            superlative_irregular: BTreeSet::new(),
            superlative_stoplist: BTreeSet::new(),
        };
        let mut section: Option<String> = None;
        for (i, raw) in content.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let target = match section.as_deref() {
                Some("auxiliary") => &mut lists.auxiliary,
                Some("modal") => &mut lists.modal,
                Some("question") => &mut lists.question,
                Some("superlative_irregular") => &mut lists.superlative_irregular,
                Some("superlative_stoplist") => &mut lists.superlative_stoplist,
                Some(other) => return Err(Error::parse("wordlists", i + 1, format!("unknown section [{other}]"))),
                None => return Err(Error::parse("wordlists", i + 1, "word before any [section]")),
            };
            target.insert(line.to_lowercase());
        }
        Ok(lists)
    }

    fn starts_doubt(&self, word: &str) -> bool {
        self.auxiliary.contains(word) || self.modal.contains(word) || self.question.contains(word)
    }
}

pub fn repetition_feature(fragment: &str, article_text: &str) -> bool {
    count_occurrences(article_text, fragment.trim()) > REPETITION_THRESHOLD
}

/// Any word ending in "est" after a stem of at least three letters (minus a
/// stoplist of non-superlatives), or an irregular superlative.
pub fn superlative_feature(fragment: &str, words: &WordLists) -> bool {
    words_lower(fragment).iter().any(|w| {
        if words.superlative_irregular.contains(w) {
            return true;
        }
        let stem_len = w.chars().count().saturating_sub(3);
        w.ends_with("est")
            && stem_len >= 3
            && w.chars().all(char::is_alphabetic)
            && !words.superlative_stoplist.contains(w)
    })
}

fn strip_leading_non_alnum(s: &str) -> &str {
    s.trim_start_matches(|c: char| !c.is_alphanumeric())
}

pub fn whatabout_feature(fragment: &str) -> bool {
    let lower = strip_leading_non_alnum(fragment).to_lowercase();
    lower
        .strip_prefix("what about")
        .is_some_and(|rest| !rest.starts_with(|c: char| c.is_alphanumeric()))
}

/// First word is an auxiliary, a modal or a question word.
pub fn doubt_feature(fragment: &str, words: &WordLists) -> bool {
    words_lower(fragment).first().is_some_and(|w| words.starts_doubt(w))
}

/// Starts with a hashtag or with "we will".
pub fn slogan_feature(fragment: &str) -> bool {
    let head = fragment.trim_start_matches(|c: char| c.is_whitespace() || "\"'“‘".contains(c));
    if head.starts_with('#') {
        return true;
    }
    let w = words_lower(head);
    w.len() >= 2 && w[0] == "we" && w[1] == "will"
}

/// Wrapped in parentheses (inside the fragment or one char outside it in the
/// article), or opening with a "who" clause.
pub fn supplement_feature(fragment: &str, article_text: &str, start: usize, end: usize) -> bool {
    let lead_ws = fragment.chars().take_while(|c| c.is_whitespace()).count();
    let trail_ws = fragment.chars().rev().take_while(|c| c.is_whitespace()).count();
    let trimmed = fragment.trim();
    if trimmed.is_empty() {
        return false;
    }
    let start = start + lead_ws;
    let end = end.saturating_sub(trail_ws);
    let char_at = |i: usize| article_text.chars().nth(i);

    let opens = trimmed.starts_with('(') || (start > 0 && char_at(start - 1) == Some('('));
    let closes = trimmed.ends_with(')') || char_at(end) == Some(')');
    if opens && closes {
        return true;
    }
    trimmed.to_lowercase().starts_with("who ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repetition_threshold() {
        let five = "Make it great. ".repeat(5);
        let four = "Make it great. ".repeat(4);
        assert!(repetition_feature("make it great", &five));
        assert!(!repetition_feature("make it great", &four));
        assert!(!repetition_feature("aa", "aaaa"));
        assert!(repetition_feature("aa", "aaaaaaaaaa"));
    }

    #[test]
    fn superlatives() {
        let w = WordLists::default();
        assert!(superlative_feature("the greatest president", &w));
        assert!(superlative_feature("the largest crowd", &w));
        assert!(superlative_feature("simply the best", &w));
        assert!(!superlative_feature("a modest proposal", &w));
        assert!(!superlative_feature("out west", &w));
        assert!(!superlative_feature("", &w));
    }

    #[test]
    fn whatabout() {
        assert!(whatabout_feature("What about the children"));
        assert!(!whatabout_feature("Think about it"));
        assert!(whatabout_feature("  what about X"));
        assert!(whatabout_feature("\"What about"));
        assert!(!whatabout_feature("what aboutism"));
    }

    #[test]
    fn doubt() {
        let w = WordLists::default();
        assert!(doubt_feature("Why would anyone trust him?", &w));
        assert!(doubt_feature("Has he ever told the truth", &w));
        assert!(!doubt_feature("He has doubts", &w));
        assert!(!doubt_feature("", &w));
    }

    #[test]
    fn slogan() {
        assert!(slogan_feature("#NeverAgain"));
        assert!(slogan_feature("we will serve the Lord"));
        assert!(slogan_feature("  \"We will win\""));
        assert!(!slogan_feature("will we win"));
        assert!(!slogan_feature("we won"));
    }

    #[test]
    fn supplement() {
        let text = "He met a man (who Kennedy admired) at dinner.";
        let s = text.find('(').unwrap();
        let e = text.find(')').unwrap() + 1;
        assert!(supplement_feature(&text[s..e], text, s, e));
        // brackets just outside the fragment
        assert!(supplement_feature(&text[s + 1..e - 1], text, s + 1, e - 1));
        assert!(supplement_feature("who is to blame", "x", 0, 15));
        assert!(!supplement_feature("plain text", "some plain text", 5, 15));
    }

    #[test]
    fn bundled_lists_parse() {
        let w = WordLists::default();
        assert!(w.modal.contains("can"));
        assert!(w.superlative_stoplist.contains("honest"));
        assert!(WordLists::parse("[bogus]\nx\n").is_err());
        assert!(WordLists::parse("x\n").is_err());
    }
}
