//! Character-indexed text helpers and the shared word tokenizer.
//!
//! All offsets in this crate are Unicode scalar-value (char) offsets.

/// Byte offsets of every char boundary in a string, so char ranges can be
/// sliced in O(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharIndex {
    boundaries: Vec<usize>,
}

impl CharIndex {
    pub fn new(s: &str) -> Self {
        let mut boundaries: Vec<usize> = s.char_indices().map(|(b, _)| b).collect();
        boundaries.push(s.len());
        CharIndex { boundaries }
    }

    /// Number of chars.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slice `s[start..end)` by char offsets. Panics if out of range.
    pub fn slice<'a>(&self, s: &'a str, start: usize, end: usize) -> &'a str {
        &s[self.boundaries[start]..self.boundaries[end]]
    }
}

/// Char length of a string.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whitespace + punctuation tokenizer. A token is either a maximal run of
/// alphanumeric chars or a single non-whitespace, non-alphanumeric char.
/// Returns char spans `(start, end)`.
pub fn tokenize(s: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut word_start: Option<usize> = None;
    let mut pos = 0;
    for c in s.chars() {
        if is_word_char(c) {
            if word_start.is_none() {
                word_start = Some(pos);
            }
        } else {
            if let Some(ws) = word_start.take() {
                spans.push((ws, pos));
            }
            if !c.is_whitespace() {
                spans.push((pos, pos + 1));
            }
        }
        pos += 1;
    }
    if let Some(ws) = word_start {
        spans.push((ws, pos));
    }
    spans
}

/// Token strings of `s`, in order.
pub fn tokens(s: &str) -> Vec<&str> {
    let idx = CharIndex::new(s);
    tokenize(s).into_iter().map(|(a, b)| idx.slice(s, a, b)).collect()
}

/// Lowercased alphanumeric tokens (punctuation dropped).
pub fn words_lower(s: &str) -> Vec<String> {
    tokens(s)
        .into_iter()
        .filter(|t| t.chars().next().is_some_and(is_word_char))
        .map(str::to_lowercase)
        .collect()
}

/// Counts non-overlapping, case-insensitive occurrences of `needle` in
/// `haystack`. An empty needle occurs zero times.
pub fn count_occurrences(haystack: &str, needle: &str) -> usize {
    let needle = needle.to_lowercase();
    if needle.is_empty() {
        return 0;
    }
    haystack.to_lowercase().matches(needle.as_str()).count()
}
