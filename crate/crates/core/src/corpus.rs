//! Article, label, lexicon and embedding file formats.
//!
//! Offsets are char offsets into the article text after CRLF → LF
//! normalization.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::CharIndex;
use crate::{Error, Result};

/// The fourteen propaganda techniques, in training-set frequency order.
/// The discriminant is the class index used by every classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Technique {
    LoadedLanguage = 0,
    NameCallingLabeling,
    Repetition,
    Doubt,
    ExaggerationMinimisation,
    AppealToFearPrejudice,
    FlagWaving,
    CausalOversimplification,
    AppealToAuthority,
    Slogans,
    BlackAndWhiteFallacy,
    WhataboutismStrawMenRedHerring,
    ThoughtTerminatingCliches,
    BandwagonReductioAdHitlerum,
}

impl From<Technique> for String {
    fn from(t: Technique) -> String {
        t.label().to_string()
    }
}

impl TryFrom<String> for Technique {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl Technique {
    pub const COUNT: usize = 14;

    pub const ALL: [Technique; Technique::COUNT] = [
        Technique::LoadedLanguage,
        Technique::NameCallingLabeling,
        Technique::Repetition,
        Technique::Doubt,
        Technique::ExaggerationMinimisation,
        Technique::AppealToFearPrejudice,
        Technique::FlagWaving,
        Technique::CausalOversimplification,
        Technique::AppealToAuthority,
        Technique::Slogans,
        Technique::BlackAndWhiteFallacy,
        Technique::WhataboutismStrawMenRedHerring,
        Technique::ThoughtTerminatingCliches,
        Technique::BandwagonReductioAdHitlerum,
    ];

    /// Training-set counts of the shared-task corpus, in [`Technique::ALL`]
    /// order. Sum is 6368.
    pub const TRAIN_COUNTS: [u64; Technique::COUNT] =
        [2199, 1105, 621, 496, 493, 321, 250, 212, 155, 138, 112, 109, 80, 77];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Technique> {
        Technique::ALL.get(i).copied()
    }

    /// Label string used in TC label files.
    pub fn label(self) -> &'static str {
        match self {
            Technique::LoadedLanguage => "Loaded_Language",
            Technique::NameCallingLabeling => "Name_Calling,Labeling",
            Technique::Repetition => "Repetition",
            Technique::Doubt => "Doubt",
            Technique::ExaggerationMinimisation => "Exaggeration,Minimisation",
            Technique::AppealToFearPrejudice => "Appeal_to_fear-prejudice",
            Technique::FlagWaving => "Flag-Waving",
            Technique::CausalOversimplification => "Causal_Oversimplification",
            Technique::AppealToAuthority => "Appeal_to_Authority",
            Technique::Slogans => "Slogans",
            Technique::BlackAndWhiteFallacy => "Black-and-White_Fallacy",
            Technique::WhataboutismStrawMenRedHerring => "Whataboutism,Straw_Men,Red_Herring",
            Technique::ThoughtTerminatingCliches => "Thought-terminating_Cliches",
            Technique::BandwagonReductioAdHitlerum => "Bandwagon,Reductio_ad_hitlerum",
        }
    }

    fn valid_labels() -> String {
        Technique::ALL.iter().map(|t| t.label()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Technique {
    type Err = Error;

    /// Accepts the underscore form used in label files and the spaced form
    /// (`Loaded Language`).
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().replace(' ', "_");
        Technique::ALL
            .iter()
            .copied()
            .find(|t| t.label() == wanted)
            .ok_or_else(|| Error::UnknownTechnique {
                name: s.to_string(),
                valid: Technique::valid_labels(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    id: String,
    text: String,
    index: CharIndex,
}

impl Article {
    /// Builds an article, normalizing CRLF to LF.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let text = text.into().replace("\r\n", "\n");
        if id.is_empty() {
            return Err(Error::Invalid("article id is empty".into()));
        }
        if text.is_empty() {
            return Err(Error::Invalid(format!("article {id} has no text")));
        }
        let index = CharIndex::new(&text);
        Ok(Article { id, text, index })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Length in chars.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Char-offset slice. Panics when out of bounds; callers validate spans
    /// first.
    pub fn slice(&self, start: usize, end: usize) -> &str {
        self.index.slice(&self.text, start, end)
    }

    pub fn check_span(&self, start: usize, end: usize) -> Result<()> {
        if start >= end {
            return Err(self.span_error(start, end, "start >= end"));
        }
        if end > self.len() {
            return Err(self.span_error(start, end, &format!("end exceeds article length {}", self.len())));
        }
        Ok(())
    }

    fn span_error(&self, start: usize, end: usize, reason: &str) -> Error {
        Error::InvalidSpan {
            article_id: self.id.clone(),
            start,
            end,
            reason: reason.to_string(),
        }
    }
}

/// Articles keyed by id.
pub type Articles = BTreeMap<String, Article>;

/// A gold or predicted propaganda span, half-open in chars.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpanAnnotation {
    pub article_id: String,
    pub start: usize,
    pub end: usize,
}

impl SpanAnnotation {
    pub fn new(article_id: impl Into<String>, start: usize, end: usize) -> Self {
        SpanAnnotation {
            article_id: article_id.into(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TechniqueLabeledFragment {
    pub article_id: String,
    pub technique: Technique,
    pub start: usize,
    pub end: usize,
    pub fragment_text: String,
}

impl TechniqueLabeledFragment {
    /// Identifier shared with context files and POS sidecars.
    pub fn fragment_id(&self) -> String {
        fragment_id(&self.article_id, self.start, self.end)
    }
}

pub fn fragment_id(article_id: &str, start: usize, end: usize) -> String {
    format!("{article_id}_{start}_{end}")
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|_| Error::NotUtf8 {
        path: path.to_path_buf(),
    })
}

fn article_id_from_name(name: &str) -> Option<&str> {
    let id = name.strip_prefix("article")?.strip_suffix(".txt")?;
    (!id.is_empty()).then_some(id)
}

/// Loads every `article{id}.txt` in `dir`. Other files are ignored.
pub fn load_articles(dir: &Path) -> Result<Vec<Article>> {
    load_articles_from(&[dir])
}

/// Loads articles from several directories (e.g. train + dev), rejecting ids
/// that appear more than once. Output is sorted by id.
pub fn load_articles_from<P: AsRef<Path>>(dirs: &[P]) -> Result<Vec<Article>> {
    let mut seen: BTreeMap<String, Article> = BTreeMap::new();
    for dir in dirs {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
            .collect::<Result<_>>()?;
        paths.sort();
        for path in paths {
            let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(article_id_from_name) else {
                continue;
            };
            if seen.contains_key(id) {
                return Err(Error::DuplicateArticle(id.to_string()));
            }
            let text = read_text(&path)?;
            seen.insert(id.to_string(), Article::new(id, text)?);
        }
    }
    Ok(seen.into_values().collect())
}

pub fn index_articles(articles: Vec<Article>) -> Articles {
    articles.into_iter().map(|a| (a.id.clone(), a)).collect()
}

fn data_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_index(path: &str, line: usize, field: &str, what: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{what} {field:?} is not a non-negative integer")))
}

fn check_against(articles: Option<&Articles>, article_id: &str, start: usize, end: usize) -> Result<()> {
    if let Some(articles) = articles {
        let article = articles
            .get(article_id)
            .ok_or_else(|| Error::UnknownArticle(article_id.to_string()))?;
        article.check_span(start, end)?;
    }
    Ok(())
}

/// Parses SI label content (`article_id<TAB>start<TAB>end`).
pub fn parse_si_labels(content: &str, origin: &str, articles: Option<&Articles>) -> Result<Vec<SpanAnnotation>> {
    let mut out = Vec::new();
    for (line_no, line) in data_lines(content) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        let article_id = cols[0].trim().to_string();
        let start = parse_index(origin, line_no, cols[1], "start")?;
        let end = parse_index(origin, line_no, cols[2], "end")?;
        if start >= end {
            return Err(Error::InvalidSpan {
                article_id,
                start,
                end,
                reason: "start >= end".into(),
            });
        }
        check_against(articles, &article_id, start, end)?;
        out.push(SpanAnnotation::new(article_id, start, end));
    }
    Ok(out)
}

pub fn load_si_labels(path: &Path, articles: Option<&Articles>) -> Result<Vec<SpanAnnotation>> {
    parse_si_labels(&read_text(path)?, &path.display().to_string(), articles)
}

/// Parses TC rows (`article_id<TAB>technique<TAB>start<TAB>end`) without
/// looking at article text.
pub fn parse_tc_records(content: &str, origin: &str) -> Result<Vec<(SpanAnnotation, Technique)>> {
    let mut out = Vec::new();
    for (line_no, line) in data_lines(content) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let article_id = cols[0].trim().to_string();
        let technique: Technique = cols[1].parse()?;
        let start = parse_index(origin, line_no, cols[2], "start")?;
        let end = parse_index(origin, line_no, cols[3], "end")?;
        if start >= end {
            return Err(Error::InvalidSpan {
                article_id,
                start,
                end,
                reason: "start >= end".into(),
            });
        }
        out.push((SpanAnnotation::new(article_id, start, end), technique));
    }
    Ok(out)
}

pub fn load_tc_records(path: &Path) -> Result<Vec<(SpanAnnotation, Technique)>> {
    parse_tc_records(&read_text(path)?, &path.display().to_string())
}

/// Parses TC label content and attaches the fragment text.
pub fn parse_tc_labels(content: &str, origin: &str, articles: &Articles) -> Result<Vec<TechniqueLabeledFragment>> {
    parse_tc_records(content, origin)?
        .into_iter()
        .map(|(span, technique)| {
            check_against(Some(articles), &span.article_id, span.start, span.end)?;
            let fragment_text = articles[&span.article_id].slice(span.start, span.end).to_string();
            Ok(TechniqueLabeledFragment {
                article_id: span.article_id,
                technique,
                start: span.start,
                end: span.end,
                fragment_text,
            })
        })
        .collect()
}

pub fn load_tc_labels(path: &Path, articles: &Articles) -> Result<Vec<TechniqueLabeledFragment>> {
    parse_tc_labels(&read_text(path)?, &path.display().to_string(), articles)
}

/// Reads a list of fragments to classify. Accepts SI-style 3-column lines or
/// TC-style 4-column lines whose technique column is ignored (test files
/// carry `?` there).
pub fn load_fragment_list(path: &Path, articles: &Articles) -> Result<Vec<SpanAnnotation>> {
    let content = read_text(path)?;
    let origin = path.display().to_string();
    let mut out = Vec::new();
    for (line_no, line) in data_lines(&content) {
        let cols: Vec<&str> = line.split('\t').collect();
        let (id, s, e) = match cols.len() {
            3 => (cols[0], cols[1], cols[2]),
            4 => (cols[0], cols[2], cols[3]),
            n => {
                return Err(Error::parse(
                    &origin,
                    line_no,
                    format!("expected 3 or 4 tab-separated columns, found {n}"),
                ))
            }
        };
        let start = parse_index(&origin, line_no, s, "start")?;
        let end = parse_index(&origin, line_no, e, "end")?;
        check_against(Some(articles), id.trim(), start, end)?;
        out.push(SpanAnnotation::new(id.trim(), start, end));
    }
    Ok(out)
}

pub fn write_si_labels(spans: &[SpanAnnotation]) -> String {
    spans
        .iter()
        .map(|s| format!("{}\t{}\t{}\n", s.article_id, s.start, s.end))
        .collect()
}

pub fn write_tc_labels(fragments: &[TechniqueLabeledFragment]) -> String {
    fragments
        .iter()
        .map(|f| format!("{}\t{}\t{}\t{}\n", f.article_id, f.technique, f.start, f.end))
        .collect()
}

/// Affect dimensions of the emotion lexicon, in vector slot order.
pub const EMOTION_DIMENSIONS: [&str; 10] = [
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "negative",
    "positive",
    "sadness",
    "surprise",
    "trust",
];

pub type EmotionVector = [f64; 10];

/// Word → 10-dimensional affect intensity vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmotionLexicon {
    entries: BTreeMap<String, EmotionVector>,
}

impl EmotionLexicon {
    pub fn dimensions(&self) -> &'static [&'static str; 10] {
        &EMOTION_DIMENSIONS
    }

    pub fn get(&self, word: &str) -> Option<&EmotionVector> {
        self.entries.get(&word.to_lowercase())
    }

    /// Intensities for `word`; the zero vector when absent.
    pub fn lookup(&self, word: &str) -> EmotionVector {
        self.get(word).copied().unwrap_or([0.0; 10])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, word: &str, dimension: &str, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Invalid(format!("intensity {score} for {word:?} outside [0, 1]")));
        }
        let dim = dimension.trim().to_lowercase();
        let slot = EMOTION_DIMENSIONS.iter().position(|d| *d == dim).ok_or_else(|| {
            Error::Invalid(format!(
                "unknown affect dimension {dimension:?}; expected one of {}",
                EMOTION_DIMENSIONS.join(", ")
            ))
        })?;
        self.entries.entry(word.trim().to_lowercase()).or_insert([0.0; 10])[slot] = score;
        Ok(())
    }

    /// Parses `word<TAB>score<TAB>dimension` lines. A leading header line whose
    /// first column is `term` is skipped.
    pub fn parse(content: &str, origin: &str) -> Result<Self> {
        let mut lexicon = EmotionLexicon::default();
        for (line_no, line) in data_lines(content) {
            let cols: Vec<&str> = line.split('\t').collect();
            if line_no == 1 && cols.first().is_some_and(|c| c.trim() == "term") {
                continue;
            }
            if cols.len() != 3 {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("expected 3 tab-separated columns, found {}", cols.len()),
                ));
            }
            let score: f64 = cols[1]
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, line_no, format!("bad score {:?}", cols[1])))?;
            lexicon
                .insert(cols[0], cols[2], score)
                .map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        }
        Ok(lexicon)
    }
}

pub fn load_emotion_lexicon(path: &Path) -> Result<EmotionLexicon> {
    EmotionLexicon::parse(&read_text(path)?, &path.display().to_string())
}

/// Per-token vectors for one context; row 0 is the whole-context vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    context_id: String,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingSequence {
    pub fn new(context_id: impl Into<String>, dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let context_id = context_id.into();
        if dim == 0 {
            return Err(Error::Invalid("embedding dim must be positive".into()));
        }
        if vectors.is_empty() {
            return Err(Error::Invalid(format!("context {context_id} has no embedding rows")));
        }
        for (i, row) in vectors.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    actual: row.len(),
                    context: format!("context {context_id} row {i}"),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("context {context_id} row {i}")));
            }
        }
        Ok(EmbeddingSequence {
            context_id,
            dim,
            vectors,
        })
    }

    pub fn context_id(&self) -> &str {
        &self.context_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Number of content tokens (rows excluding row 0).
    pub fn n_tokens(&self) -> usize {
        self.vectors.len() - 1
    }

    /// Keeps row 0 plus at most `max_tokens` content rows.
    pub fn truncated(&self, max_tokens: usize) -> EmbeddingSequence {
        let keep = (max_tokens + 1).min(self.vectors.len());
        EmbeddingSequence {
            context_id: self.context_id.clone(),
            dim: self.dim,
            vectors: self.vectors[..keep].to_vec(),
        }
    }
}

pub const EMBEDDING_MAGIC: &str = "PDEMB1";

/// Parses the `PDEMB1` plain-text embedding format.
pub fn parse_embeddings(content: &str, origin: &str) -> Result<BTreeMap<String, EmbeddingSequence>> {
    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "empty embedding file"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(EMBEDDING_MAGIC) {
        return Err(Error::parse(origin, 1, format!("missing {EMBEDDING_MAGIC} header")));
    }
    let dim: usize = head
        .next()
        .and_then(|d| d.parse().ok())
        .filter(|d| *d > 0)
        .ok_or_else(|| Error::parse(origin, 1, "header needs a positive dim"))?;

    let mut out = BTreeMap::new();
    while let Some((line_no, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "CTX" {
            return Err(Error::parse(origin, line_no, "expected `CTX <context_id> <n_tokens>`"));
        }
        let id = parts[1].to_string();
        let n: usize = parts[2]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, "bad token count"))?;
        let mut rows = Vec::with_capacity(n);
        for r in 0..n {
            let (row_line, row) = lines.next().ok_or_else(|| {
                Error::parse(
                    origin,
                    line_no,
                    format!("truncated file: context {id} declares {n} rows, found {r}"),
                )
            })?;
            let values: Vec<f64> = row
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(origin, row_line, format!("bad float {v:?}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    actual: values.len(),
                    context: format!("{origin}:{row_line}, context {id} row {r}"),
                });
            }
            rows.push(values);
        }
        if out.contains_key(&id) {
            return Err(Error::parse(origin, line_no, format!("duplicate context {id}")));
        }
        let seq = EmbeddingSequence::new(id.clone(), dim, rows)?;
        out.insert(id, seq);
    }
    Ok(out)
}

pub fn load_embeddings(path: &Path) -> Result<BTreeMap<String, EmbeddingSequence>> {
    parse_embeddings(&read_text(path)?, &path.display().to_string())
}

/// Serializes sequences in the `PDEMB1` format. Floats use the shortest
/// round-tripping representation.
pub fn write_embeddings<'a>(dim: usize, seqs: impl IntoIterator<Item = &'a EmbeddingSequence>) -> String {
    use std::fmt::Write;
    let mut out = format!("{EMBEDDING_MAGIC} {dim}\n");
    for seq in seqs {
        let _ = writeln!(out, "CTX {} {}", seq.context_id, seq.vectors.len());
        for row in &seq.vectors {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn articles(pairs: &[(&str, &str)]) -> Articles {
        index_articles(pairs.iter().map(|(id, t)| Article::new(*id, *t).unwrap()).collect())
    }

    #[test]
    fn technique_order_and_labels() {
        for (i, t) in Technique::ALL.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(Technique::from_index(i), Some(*t));
            assert_eq!(t.label().parse::<Technique>().unwrap(), *t);
        }
        assert_eq!(
            "Loaded Language".parse::<Technique>().unwrap(),
            Technique::LoadedLanguage
        );
        assert_eq!(Technique::TRAIN_COUNTS.iter().sum::<u64>(), 6368);
    }

    #[test]
    fn unknown_technique_lists_valid_labels() {
        let err = "Foo".parse::<Technique>().unwrap_err().to_string();
        assert!(err.contains("Foo"));
        assert!(err.contains("Bandwagon,Reductio_ad_hitlerum"));
        assert!(err.contains("Loaded_Language"));
    }

    #[test]
    fn article_normalizes_crlf() {
        let a = Article::new("1", "a\r\nb").unwrap();
        assert_eq!(a.text(), "a\nb");
        assert_eq!(a.len(), 3);
        assert!(Article::new("", "x").is_err());
        assert!(Article::new("1", "").is_err());
    }

    #[test]
    fn si_labels_parse_and_validate() {
        let spans = parse_si_labels("111\t5\t12\n", "t", None).unwrap();
        assert_eq!(spans, vec![SpanAnnotation::new("111", 5, 12)]);

        let err = parse_si_labels("111\t12\t5\n", "t", None).unwrap_err();
        assert!(matches!(err, Error::InvalidSpan { .. }), "{err}");

        let spans = parse_si_labels("1\t0\t2\n\n1\t3\t4\n", "t", None).unwrap();
        assert_eq!(spans.len(), 2);

        assert!(parse_si_labels("1\t0\n", "t", None).is_err());
        assert!(parse_si_labels("1\tx\t3\n", "t", None).is_err());

        let arts = articles(&[("1", "short")]);
        assert!(parse_si_labels("1\t0\t5\n", "t", Some(&arts)).is_ok());
        assert!(matches!(
            parse_si_labels("1\t0\t6\n", "t", Some(&arts)).unwrap_err(),
            Error::InvalidSpan { .. }
        ));
        assert!(matches!(
            parse_si_labels("2\t0\t1\n", "t", Some(&arts)).unwrap_err(),
            Error::UnknownArticle(_)
        ));
    }

    #[test]
    fn tc_labels_slice_fragment_text() {
        let arts = articles(&[("111", "#NeverAgain is what they chant.")]);
        let frags = parse_tc_labels("111\tSlogans\t0\t9\n", "t", &arts).unwrap();
        assert_eq!(frags[0].fragment_text, "#NeverAga");
        assert_eq!(frags[0].technique, Technique::Slogans);

        let err = parse_tc_labels("111\tFoo\t0\t5\n", "t", &arts).unwrap_err();
        assert!(matches!(err, Error::UnknownTechnique { .. }));
    }

    #[test]
    fn label_round_trip_is_byte_identical() {
        let content = "1\t0\t2\n1\t3\t4\n2\t7\t9\n";
        let spans = parse_si_labels(content, "t", None).unwrap();
        assert_eq!(write_si_labels(&spans), content);

        let arts = articles(&[("1", "Some article text here.")]);
        let tc = "1\tDoubt\t0\t4\n1\tName_Calling,Labeling\t5\t12\n";
        let frags = parse_tc_labels(tc, "t", &arts).unwrap();
        assert_eq!(write_tc_labels(&frags), tc);
    }

    #[test]
    fn lexicon_aggregates_dimensions() {
        let lex = EmotionLexicon::parse("outraged\t0.964\tanger\n", "t").unwrap();
        let mut expected = [0.0; 10];
        expected[0] = 0.964;
        assert_eq!(lex.lookup("outraged"), expected);
        assert_eq!(lex.lookup("Outraged"), expected);

        let lex = EmotionLexicon::parse(
            "term\tscore\tAffectDimension\nhate\t0.8\tanger\nhate\t0.5\tdisgust\n",
            "t",
        )
        .unwrap();
        let v = lex.lookup("hate");
        assert_eq!((v[0], v[2]), (0.8, 0.5));

        let empty = EmotionLexicon::parse("", "t").unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.lookup("anything"), [0.0; 10]);

        assert!(EmotionLexicon::parse("x\t1.5\tanger\n", "t").is_err());
        assert!(EmotionLexicon::parse("x\t0.5\tboredom\n", "t").is_err());
    }

    #[test]
    fn embeddings_parse_and_reject_bad_rows() {
        let content = "PDEMB1 4\nCTX c1 3\n0 0 0 0\n1 2 3 4\n0.5 -1 2e-3 7\n";
        let map = parse_embeddings(content, "t").unwrap();
        assert_eq!(map.len(), 1);
        let seq = &map["c1"];
        assert_eq!(seq.rows().len(), 3);
        assert!(seq.rows().iter().all(|r| r.len() == 4));
        assert_eq!(
            write_embeddings(4, map.values()),
            "PDEMB1 4\nCTX c1 3\n0.0 0.0 0.0 0.0\n1.0 2.0 3.0 4.0\n0.5 -1.0 0.002 7.0\n"
        );

        let five = "PDEMB1 4\nCTX c1 1\n1 2 3 4 5\n";
        assert!(matches!(
            parse_embeddings(five, "t").unwrap_err(),
            Error::DimMismatch {
                expected: 4,
                actual: 5,
                ..
            }
        ));
        let short = "PDEMB1 2\nCTX c1 2\n1 2\n";
        assert!(parse_embeddings(short, "t")
            .unwrap_err()
            .to_string()
            .contains("truncated"));
        let nan = "PDEMB1 2\nCTX c1 1\n1 NaN\n";
        assert!(matches!(parse_embeddings(nan, "t").unwrap_err(), Error::NonFinite(_)));
        let inf = "PDEMB1 2\nCTX c1 1\ninf 1\n";
        assert!(matches!(parse_embeddings(inf, "t").unwrap_err(), Error::NonFinite(_)));
    }
}
