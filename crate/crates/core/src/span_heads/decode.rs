use super::model::HeadOutput;
use crate::corpus::SpanAnnotation;
use crate::segmentation::merge_overlapping;

/// Decoded token spans (1-based, inclusive) of one context.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decoded {
    /// The start-anchored and end-anchored candidates, deduplicated.
    pub candidates: Vec<(usize, usize)>,
    /// Candidates with overlapping ones merged.
    pub spans: Vec<(usize, usize)>,
}

/// Index of the largest score in `scores[range]`; lowest index on ties.
fn argmax(scores: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(lo, |best, i| if scores[i] > scores[best] { i } else { best })
}

/// Turns head outputs into at most two spans.
///
/// The context is empty when the sentence classifier says "no span" and both
/// boundary argmaxes land on position 0. Otherwise two candidates are formed
/// over the content positions: the best start with the best end at or after
/// it, and the best end with the best start at or before it.
pub fn decode_span(output: &HeadOutput) -> Decoded {
    let n = output.start_scores.len().saturating_sub(1);
    if n == 0 {
        return Decoded::default();
    }
    let (start, end) = (&output.start_scores, &output.end_scores);
    let says_no_span = output.sent_logits[0] >= output.sent_logits[1];
    if says_no_span && argmax(start, 0, n) == 0 && argmax(end, 0, n) == 0 {
        return Decoded::default();
    }

    let s_best = argmax(start, 1, n);
    let a = (s_best, argmax(end, s_best, n));
    let e_best = argmax(end, 1, n);
    let b = (argmax(start, 1, e_best), e_best);

    let mut candidates = vec![a];
    if b != a {
        candidates.push(b);
    }
    let spans = merge_token_spans(&candidates);
    Decoded { candidates, spans }
}

/// Merges overlapping inclusive token spans, sorted by start.
pub fn merge_token_spans(spans: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let as_intervals: Vec<SpanAnnotation> = spans.iter().map(|&(s, e)| SpanAnnotation::new("", s, e + 1)).collect();
    merge_overlapping(&as_intervals)
        .expect("single pseudo-article")
        .into_iter()
        .map(|s| (s.start, s.end - 1))
        .collect()
}
