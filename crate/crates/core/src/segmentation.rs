//! Sentence splitting, span merging and context construction.
//!
//! A context is the unit the span heads see: a char range of one article with
//! at most one gold span. Two strategies build them:
//!
//! * **mini**: a sentence holding `k >= 2` spans is cut into `k` contexts, one
//!   span each; cuts sit at the midpoint of the gap between neighbouring spans,
//!   snapped to the nearest token boundary.
//! * **sentential**: one context per sentence, keeping only the longest span.
//!
//! Spans are merged when they overlap and split where they cross a sentence
//! boundary before either strategy runs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus::{Article, SpanAnnotation};
use crate::text;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub article_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Mini,
    Sentential,
    /// A TC fragment wrapped as a context so the encoder can embed it.
    Fragment,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Mini => "mini",
            Strategy::Sentential => "sentential",
            Strategy::Fragment => "fragment",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mini" => Ok(Strategy::Mini),
            "sentential" => Ok(Strategy::Sentential),
            "fragment" => Ok(Strategy::Fragment),
            other => Err(Error::Invalid(format!(
                "unknown strategy {other:?}; expected mini, sentential or fragment"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub context_id: String,
    pub article_id: String,
    /// Article char range.
    pub start: usize,
    pub end: usize,
    /// Gold span relative to `start`.
    pub gold_span: Option<(usize, usize)>,
    pub strategy: Strategy,
    pub text: String,
}

impl Context {
    pub fn new(
        article: &Article,
        start: usize,
        end: usize,
        gold_span: Option<(usize, usize)>,
        strategy: Strategy,
    ) -> Context {
        Context {
            context_id: format!("{}_{}_{}", article.id(), start, end),
            article_id: article.id().to_string(),
            start,
            end,
            gold_span,
            strategy,
            text: article.slice(start, end).to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Gold span in article coordinates.
    pub fn gold_in_article(&self) -> Option<SpanAnnotation> {
        self.gold_span
            .map(|(s, e)| SpanAnnotation::new(self.article_id.clone(), self.start + s, self.start + e))
    }
}

/// Char spans of the tokens of one context, relative to the context start.
/// Token `i` (1-based) corresponds to embedding row `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenAlignment {
    pub context_id: String,
    pub token_spans: Vec<(usize, usize)>,
}

impl TokenAlignment {
    pub fn n_tokens(&self) -> usize {
        self.token_spans.len()
    }

    /// Span of 1-based token `i`.
    pub fn token(&self, i: usize) -> (usize, usize) {
        self.token_spans[i - 1]
    }

    pub fn truncated(&self, max_tokens: usize) -> TokenAlignment {
        TokenAlignment {
            context_id: self.context_id.clone(),
            token_spans: self.token_spans.iter().copied().take(max_tokens).collect(),
        }
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits an article into sentences. Newlines are hard boundaries; within a
/// line a sentence ends after `.`, `!` or `?` followed by whitespace and an
/// uppercase letter. Sentences are trimmed of surrounding whitespace.
pub fn split_sentences(article: &Article) -> Vec<Sentence> {
    let chars: Vec<char> = article.text().chars().collect();
    let mut cuts = vec![0];
    for i in 0..chars.len() {
        if chars[i] == '\n' {
            cuts.push(i);
            cuts.push(i + 1);
        } else if is_terminator(chars[i]) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() && chars[j] != '\n' {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j].is_uppercase() {
                cuts.push(i + 1);
                cuts.push(i + 1);
            }
        }
    }
    cuts.push(chars.len());

    let mut out = Vec::new();
    for pair in cuts.chunks(2) {
        let (mut s, mut e) = (pair[0], pair[1]);
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        if s < e {
            out.push(Sentence {
                article_id: article.id().to_string(),
                start: s,
                end: e,
                text: article.slice(s, e).to_string(),
            });
        }
    }
    out
}

/// Merges overlapping spans of one article into maximal unions, sorted by
/// start. Spans that merely touch (`a.end == b.start`) stay separate.
pub fn merge_overlapping(spans: &[SpanAnnotation]) -> Result<Vec<SpanAnnotation>> {
    let Some(first) = spans.first() else {
        return Ok(Vec::new());
    };
    if let Some(other) = spans.iter().find(|s| s.article_id != first.article_id) {
        return Err(Error::MixedArticles(first.article_id.clone(), other.article_id.clone()));
    }
    let mut sorted: Vec<(usize, usize)> = spans.iter().map(|s| (s.start, s.end)).collect();
    sorted.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(sorted.len());
    for (s, e) in sorted {
        match merged.last_mut() {
            Some(last) if s < last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    Ok(merged
        .into_iter()
        .map(|(s, e)| SpanAnnotation::new(first.article_id.clone(), s, e))
        .collect())
}

/// Merges spans per article. Output is sorted by article id, then start.
pub fn merge_by_article(spans: &[SpanAnnotation]) -> Vec<SpanAnnotation> {
    let mut groups: BTreeMap<&str, Vec<SpanAnnotation>> = BTreeMap::new();
    for s in spans {
        groups.entry(&s.article_id).or_default().push(s.clone());
    }
    groups
        .into_values()
        .flat_map(|g| merge_overlapping(&g).expect("grouped by article"))
        .collect()
}

/// Cuts a span into its non-empty intersections with each sentence.
pub fn split_at_sentence_boundaries(span: &SpanAnnotation, sentences: &[Sentence]) -> Result<Vec<SpanAnnotation>> {
    let pieces: Vec<SpanAnnotation> = sentences
        .iter()
        .filter(|s| s.article_id == span.article_id)
        .filter_map(|s| {
            let a = span.start.max(s.start);
            let b = span.end.min(s.end);
            (a < b).then(|| SpanAnnotation::new(span.article_id.clone(), a, b))
        })
        .collect();
    if pieces.is_empty() {
        return Err(Error::InvalidSpan {
            article_id: span.article_id.clone(),
            start: span.start,
            end: span.end,
            reason: "span lies outside every sentence".into(),
        });
    }
    Ok(pieces)
}

/// Merge, then split at sentence boundaries: the span set both context
/// strategies consume. Spans covering only inter-sentence whitespace are
/// dropped with a warning.
pub fn prepare_spans(spans: &[SpanAnnotation], sentences: &[Sentence]) -> Result<Vec<SpanAnnotation>> {
    let mut out = Vec::new();
    for span in merge_overlapping(spans)? {
        match split_at_sentence_boundaries(&span, sentences) {
            Ok(pieces) => out.extend(pieces),
            Err(e) => log::warn!("dropping span: {e}"),
        }
    }
    Ok(out)
}

/// Groups disjoint spans by the sentence containing them.
fn spans_per_sentence<'a>(spans: &'a [SpanAnnotation], sentences: &[Sentence]) -> Result<Vec<Vec<&'a SpanAnnotation>>> {
    let mut sorted: Vec<&SpanAnnotation> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for w in sorted.windows(2) {
        if w[1].start < w[0].end {
            return Err(Error::Invalid(format!(
                "spans ({}, {}) and ({}, {}) overlap; merge them first",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
    }
    let mut groups = vec![Vec::new(); sentences.len()];
    for span in sorted {
        let idx = sentences
            .iter()
            .position(|s| s.start <= span.start && span.end <= s.end)
            .ok_or_else(|| Error::InvalidSpan {
                article_id: span.article_id.clone(),
                start: span.start,
                end: span.end,
                reason: "span is not contained in a single sentence; split it first".into(),
            })?;
        groups[idx].push(span);
    }
    Ok(groups)
}

/// Cut position between two neighbouring spans: the midpoint of the gap
/// `[left_end, right_start]`, moved to the nearest position that does not fall
/// strictly inside a token (ties go left).
fn mini_cut(tokens: &[(usize, usize)], left_end: usize, right_start: usize) -> usize {
    let mid2 = left_end + right_start; // twice the midpoint
    let inside_token = |c: usize| tokens.iter().any(|&(a, b)| a < c && c < b);
    (left_end..=right_start)
        .filter(|&c| !inside_token(c))
        .min_by_key(|&c| (2 * c).abs_diff(mid2))
        .unwrap_or(mid2 / 2)
}

pub fn build_mini_contexts(
    article: &Article,
    spans: &[SpanAnnotation],
    sentences: &[Sentence],
) -> Result<Vec<Context>> {
    let groups = spans_per_sentence(spans, sentences)?;
    let mut out = Vec::new();
    for (sentence, group) in sentences.iter().zip(groups) {
        match group.len() {
            0 => out.push(Context::new(
                article,
                sentence.start,
                sentence.end,
                None,
                Strategy::Mini,
            )),
            1 => {
                let g = group[0];
                out.push(Context::new(
                    article,
                    sentence.start,
                    sentence.end,
                    Some((g.start - sentence.start, g.end - sentence.start)),
                    Strategy::Mini,
                ));
            }
            _ => {
                let tokens: Vec<(usize, usize)> = text::tokenize(&sentence.text)
                    .into_iter()
                    .map(|(a, b)| (a + sentence.start, b + sentence.start))
                    .collect();
                let mut bounds = vec![sentence.start];
                for pair in group.windows(2) {
                    bounds.push(mini_cut(&tokens, pair[0].end, pair[1].start));
                }
                bounds.push(sentence.end);
                for (i, g) in group.iter().enumerate() {
                    let (cs, ce) = (bounds[i], bounds[i + 1]);
                    out.push(Context::new(
                        article,
                        cs,
                        ce,
                        Some((g.start - cs, g.end - cs)),
                        Strategy::Mini,
                    ));
                }
            }
        }
    }
    Ok(out)
}

pub fn build_sentential_contexts(
    article: &Article,
    spans: &[SpanAnnotation],
    sentences: &[Sentence],
) -> Result<Vec<Context>> {
    let groups = spans_per_sentence(spans, sentences)?;
    Ok(sentences
        .iter()
        .zip(groups)
        .map(|(sentence, group)| {
            // Longest wins; among equals the earliest, since groups are sorted.
            let longest = group.iter().fold(None::<&SpanAnnotation>, |best, s| match best {
                Some(b) if b.len() >= s.len() => Some(b),
                _ => Some(s),
            });
            Context::new(
                article,
                sentence.start,
                sentence.end,
                longest.map(|g| (g.start - sentence.start, g.end - sentence.start)),
                Strategy::Sentential,
            )
        })
        .collect())
}

/// Full segmentation of one article: split sentences, prepare spans, build
/// contexts with the chosen strategy.
pub fn segment_article(article: &Article, gold: &[SpanAnnotation], strategy: Strategy) -> Result<Vec<Context>> {
    let sentences = split_sentences(article);
    let spans = prepare_spans(gold, &sentences)?;
    match strategy {
        Strategy::Mini => build_mini_contexts(article, &spans, &sentences),
        Strategy::Sentential => build_sentential_contexts(article, &spans, &sentences),
        Strategy::Fragment => Err(Error::Invalid(
            "fragment contexts are built from TC labels, not by segmentation".into(),
        )),
    }
}

pub fn tokenize_and_align(context: &Context) -> TokenAlignment {
    TokenAlignment {
        context_id: context.context_id.clone(),
        token_spans: text::tokenize(&context.text),
    }
}

/// Maps a context-relative char range to 1-based token indices, snapping
/// outward: the first and last tokens that intersect the range.
pub fn char_span_to_token_span(
    alignment: &TokenAlignment,
    char_start: usize,
    char_end: usize,
) -> Result<(usize, usize)> {
    let hits: Vec<usize> = alignment
        .token_spans
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| a < char_end && char_start < b)
        .map(|(i, _)| i + 1)
        .collect();
    match (hits.first(), hits.last()) {
        (Some(&s), Some(&e)) => Ok((s, e)),
        _ => Err(Error::Invalid(format!(
            "char range ({char_start}, {char_end}) of {} covers no token",
            alignment.context_id
        ))),
    }
}

/// Inverse of [`char_span_to_token_span`], in article coordinates.
pub fn token_span_to_char(
    alignment: &TokenAlignment,
    context: &Context,
    token_start: usize,
    token_end: usize,
) -> SpanAnnotation {
    let (cs, _) = alignment.token(token_start);
    let (_, ce) = alignment.token(token_end);
    SpanAnnotation::new(context.article_id.clone(), context.start + cs, context.start + ce)
}

/// Writes the contexts TSV:
/// `context_id, article_id, start, end, strategy, gold_start, gold_end`.
pub fn write_contexts(contexts: &[Context]) -> String {
    contexts
        .iter()
        .map(|c| {
            let (gs, ge) = c
                .gold_span
                .map(|(s, e)| (s.to_string(), e.to_string()))
                .unwrap_or_default();
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                c.context_id, c.article_id, c.start, c.end, c.strategy, gs, ge
            )
        })
        .collect()
}

pub fn parse_contexts(content: &str, origin: &str, articles: &crate::corpus::Articles) -> Result<Vec<Context>> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |m: &str| Error::parse(origin, i + 1, m);
        if cols.len() != 7 {
            return Err(err(&format!("expected 7 columns, found {}", cols.len())));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad integer {s:?}")));
        let article = articles
            .get(cols[1])
            .ok_or_else(|| Error::UnknownArticle(cols[1].to_string()))?;
        let (start, end) = (num(cols[2])?, num(cols[3])?);
        article.check_span(start, end)?;
        let gold_span = match (cols[5], cols[6]) {
            ("", "") => None,
            (s, e) => {
                let (s, e) = (num(s)?, num(e)?);
                if s >= e || e > end - start {
                    return Err(err("gold span outside context"));
                }
                Some((s, e))
            }
        };
        out.push(Context {
            context_id: cols[0].to_string(),
            article_id: cols[1].to_string(),
            start,
            end,
            gold_span,
            strategy: cols[4].parse()?,
            text: article.slice(start, end).to_string(),
        });
    }
    Ok(out)
}

/// Writes the alignment sidecar: `context_id, token_idx, char_start, char_end`
/// with 1-based token indices and context-relative offsets.
pub fn write_alignments<'a>(alignments: impl IntoIterator<Item = &'a TokenAlignment>) -> String {
    let mut out = String::new();
    for a in alignments {
        for (i, (s, e)) in a.token_spans.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", a.context_id, i + 1, s, e));
        }
    }
    out
}

pub fn parse_alignments(content: &str, origin: &str) -> Result<BTreeMap<String, TokenAlignment>> {
    let mut out: BTreeMap<String, TokenAlignment> = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(origin, i + 1, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cols.len())));
        }
        let nums: Vec<usize> = cols[1..]
            .iter()
            .map(|s| s.parse().map_err(|_| err(format!("bad integer {s:?}"))))
            .collect::<Result<_>>()?;
        let entry = out.entry(cols[0].to_string()).or_insert_with(|| TokenAlignment {
            context_id: cols[0].to_string(),
            token_spans: Vec::new(),
        });
        if nums[0] != entry.token_spans.len() + 1 {
            return Err(err(format!("token index {} out of order", nums[0])));
        }
        if nums[1] >= nums[2] {
            return Err(err("empty token span".into()));
        }
        entry.token_spans.push((nums[1], nums[2]));
    }
    Ok(out)
}
