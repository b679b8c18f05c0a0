//! Scorers: partial-match span F1 for span identification, micro-F1 and
//! per-technique F1 for technique classification.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{SpanAnnotation, Technique};
use crate::error::{Error, Result};

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArticleScore {
    pub article_id: String,
    pub n_pred: usize,
    pub n_gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_article: Vec<ArticleScore>,
}

fn overlap(a: &SpanAnnotation, b: &SpanAnnotation) -> usize {
    a.end.min(b.end).saturating_sub(a.start.max(b.start))
}

/// Σ over `from` of the best normalised overlap with any span in `against`.
fn credit(from: &[&SpanAnnotation], against: &[&SpanAnnotation]) -> f64 {
    from.iter()
        .map(|s| {
            against
                .iter()
                .map(|t| overlap(s, t) as f64 / s.len() as f64)
                .fold(0.0, f64::max)
        })
        .sum()
}

fn ratio(credit: f64, n: usize, n_other: usize) -> f64 {
    match (n, n_other) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => credit / n as f64,
    }
}

fn group(spans: &[SpanAnnotation]) -> BTreeMap<&str, Vec<&SpanAnnotation>> {
    let mut out: BTreeMap<&str, Vec<&SpanAnnotation>> = BTreeMap::new();
    for s in spans {
        out.entry(s.article_id.as_str()).or_default().push(s);
    }
    out
}

/// Partial-match precision, recall and F1. Predictions must not overlap
/// within an article; gold spans are taken as given.
pub fn score_si(gold: &[SpanAnnotation], pred: &[SpanAnnotation]) -> Result<SpanScore> {
    for s in gold.iter().chain(pred) {
        if s.start >= s.end {
            return Err(Error::InvalidSpan {
                article_id: s.article_id.clone(),
                start: s.start,
                end: s.end,
                reason: "empty span".into(),
            });
        }
    }
    let gold_by = group(gold);
    let pred_by = group(pred);
    for (article, spans) in &pred_by {
        let mut sorted = spans.clone();
        sorted.sort_by_key(|s| (s.start, s.end));
        if let Some(w) = sorted.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(Error::InvalidSpan {
                article_id: article.to_string(),
                start: w[1].start,
                end: w[1].end,
                reason: format!(
                    "overlaps predicted span {}..{}; merge predictions first",
                    w[0].start, w[0].end
                ),
            });
        }
    }

    let mut articles: Vec<&str> = gold_by.keys().chain(pred_by.keys()).copied().collect();
    articles.sort_unstable();
    articles.dedup();

    let empty = Vec::new();
    let (mut p_credit, mut r_credit) = (0.0, 0.0);
    let mut per_article = Vec::with_capacity(articles.len());
    for article in articles {
        let g = gold_by.get(article).unwrap_or(&empty);
        let p = pred_by.get(article).unwrap_or(&empty);
        let pc = credit(p, g);
        let rc = credit(g, p);
        p_credit += pc;
        r_credit += rc;
        let precision = ratio(pc, p.len(), g.len());
        let recall = ratio(rc, g.len(), p.len());
        per_article.push(ArticleScore {
            article_id: article.to_string(),
            n_pred: p.len(),
            n_gold: g.len(),
            precision,
            recall,
            f1: f1(precision, recall),
        });
    }
    let precision = ratio(p_credit, pred.len(), gold.len());
    let recall = ratio(r_credit, gold.len(), pred.len());
    Ok(SpanScore {
        precision,
        recall,
        f1: f1(precision, recall),
        per_article,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub technique: Technique,
    pub support: usize,
    pub predicted: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcScore {
    pub micro_f1: f64,
    /// One entry per technique in the fixed label order.
    pub per_class: Vec<ClassScore>,
}

pub fn score_tc(gold: &[Technique], pred: &[Technique]) -> Result<TcScore> {
    if gold.len() != pred.len() {
        return Err(Error::Invalid(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let mut support = [0usize; Technique::COUNT];
    let mut predicted = [0usize; Technique::COUNT];
    let mut correct = [0usize; Technique::COUNT];
    for (g, p) in gold.iter().zip(pred) {
        support[g.index()] += 1;
        predicted[p.index()] += 1;
        if g == p {
            correct[g.index()] += 1;
        }
    }
    let total_correct: usize = correct.iter().sum();
    // Every fragment gets exactly one prediction, so micro P = micro R.
    let micro = if gold.is_empty() {
        0.0
    } else {
        total_correct as f64 / gold.len() as f64
    };
    let per_class = Technique::ALL
        .iter()
        .map(|&t| {
            let i = t.index();
            let precision = if predicted[i] == 0 {
                0.0
            } else {
                correct[i] as f64 / predicted[i] as f64
            };
            let recall = if support[i] == 0 {
                0.0
            } else {
                correct[i] as f64 / support[i] as f64
            };
            ClassScore {
                technique: t,
                support: support[i],
                predicted: predicted[i],
                correct: correct[i],
                precision,
                recall,
                f1: f1(precision, recall),
            }
        })
        .collect();
    Ok(TcScore {
        micro_f1: micro,
        per_class,
    })
}

/// Pairs gold and predicted TC rows by fragment. A fragment may carry several
/// gold labels; its predictions must match them in number, and equal labels
/// are paired first. Output is in gold order.
pub fn align_tc(
    gold: &[(SpanAnnotation, Technique)],
    pred: &[(SpanAnnotation, Technique)],
) -> Result<(Vec<Technique>, Vec<Technique>)> {
    let mut pred_by: BTreeMap<&SpanAnnotation, Vec<Technique>> = BTreeMap::new();
    for (span, t) in pred {
        pred_by.entry(span).or_default().push(*t);
    }
    let mut gold_by: BTreeMap<&SpanAnnotation, Vec<Technique>> = BTreeMap::new();
    for (span, t) in gold {
        gold_by.entry(span).or_default().push(*t);
    }
    for (span, g) in &gold_by {
        let n = pred_by.get(span).map_or(0, Vec::len);
        if n != g.len() {
            return Err(Error::Invalid(format!(
                "fragment {}\t{}\t{} has {} gold labels but {n} predictions",
                span.article_id,
                span.start,
                span.end,
                g.len()
            )));
        }
    }
    if let Some(span) = pred_by.keys().find(|s| !gold_by.contains_key(*s)) {
        return Err(Error::Invalid(format!(
            "prediction for fragment {}\t{}\t{} not in gold",
            span.article_id, span.start, span.end
        )));
    }
    // Per fragment: equal labels first, remaining predictions in file order.
    let mut assigned: BTreeMap<&SpanAnnotation, Vec<Technique>> = BTreeMap::new();
    for (span, g) in &gold_by {
        let mut remaining = pred_by[span].clone();
        let mut slots: Vec<Option<Technique>> = vec![None; g.len()];
        for (slot, gt) in slots.iter_mut().zip(g) {
            if let Some(pos) = remaining.iter().position(|p| p == gt) {
                *slot = Some(remaining.remove(pos));
            }
        }
        let mut rest = remaining.into_iter();
        let filled = slots
            .into_iter()
            .map(|s| s.unwrap_or_else(|| rest.next().expect("counts checked")))
            .collect();
        assigned.insert(span, filled);
    }
    let mut cursor: BTreeMap<&SpanAnnotation, usize> = BTreeMap::new();
    let mut gold_out = Vec::with_capacity(gold.len());
    let mut pred_out = Vec::with_capacity(gold.len());
    for (span, t) in gold {
        let k = cursor.entry(span).or_insert(0);
        gold_out.push(*t);
        pred_out.push(assigned[span][*k]);
        *k += 1;
    }
    Ok((gold_out, pred_out))
}

pub fn si_report(score: &SpanScore) -> String {
    let mut out = String::new();
    out.push_str(&format!("precision\t{:.6}\n", score.precision));
    out.push_str(&format!("recall\t{:.6}\n", score.recall));
    out.push_str(&format!("f1\t{:.6}\n", score.f1));
    out.push_str("\narticle\tn_pred\tn_gold\tprecision\trecall\tf1\n");
    for a in &score.per_article {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
            a.article_id, a.n_pred, a.n_gold, a.precision, a.recall, a.f1
        ));
    }
    out
}

pub fn tc_report(score: &TcScore) -> String {
    let mut out = format!("micro_f1\t{:.6}\n\n", score.micro_f1);
    out.push_str("technique\tsupport\tpredicted\tcorrect\tprecision\trecall\tf1\n");
    for c in &score.per_class {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
            c.technique, c.support, c.predicted, c.correct, c.precision, c.recall, c.f1
        ));
    }
    out
}

/// Summary line followed by one line per article.
pub fn si_json_lines(score: &SpanScore) -> String {
    let mut out = serde_json::json!({
        "precision": score.precision,
        "recall": score.recall,
        "f1": score.f1,
    })
    .to_string();
    out.push('\n');
    for a in &score.per_article {
        out.push_str(&serde_json::to_string(a).expect("serialisable"));
        out.push('\n');
    }
    out
}

/// Summary line followed by one line per technique.
pub fn tc_json_lines(score: &TcScore) -> String {
    let mut out = serde_json::json!({ "micro_f1": score.micro_f1 }).to_string();
    out.push('\n');
    for c in &score.per_class {
        out.push_str(&serde_json::to_string(c).expect("serialisable"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(a: &str, s: usize, e: usize) -> SpanAnnotation {
        SpanAnnotation::new(a, s, e)
    }

    #[test]
    fn exact_match_is_perfect() {
        let s = score_si(&[sp("a", 3, 9)], &[sp("a", 3, 9)]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn half_overlap() {
        let s = score_si(&[sp("a", 5, 15)], &[sp("a", 0, 10)]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn empty_conventions() {
        let s = score_si(&[sp("a", 0, 4)], &[]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = score_si(&[], &[]).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 1.0));
        let s = score_si(&[], &[sp("a", 0, 4)]).unwrap();
        assert_eq!((s.precision, s.recall), (0.0, 0.0));
    }

    #[test]
    fn spans_only_match_within_article() {
        let s = score_si(&[sp("a", 0, 10)], &[sp("b", 0, 10)]).unwrap();
        assert_eq!(s.f1, 0.0);
        assert_eq!(s.per_article.len(), 2);
    }

    #[test]
    fn overlapping_predictions_rejected() {
        assert!(score_si(&[], &[sp("a", 0, 5), sp("a", 4, 8)]).is_err());
        assert!(score_si(&[], &[sp("a", 0, 5), sp("a", 5, 8)]).is_ok());
        assert!(score_si(&[sp("a", 0, 5), sp("a", 4, 8)], &[]).is_ok());
    }

    #[test]
    fn tc_micro_and_per_class() {
        use Technique::*;
        let s = score_tc(&[Doubt, Slogans], &[Doubt, Doubt]).unwrap();
        assert_eq!(s.micro_f1, 0.5);
        let d = &s.per_class[Doubt.index()];
        assert_eq!((d.precision, d.recall), (0.5, 1.0));
        assert_eq!(s.per_class[Slogans.index()].f1, 0.0);
        assert_eq!(score_tc(&[Doubt], &[Doubt]).unwrap().micro_f1, 1.0);
        assert!(score_tc(&[Doubt], &[]).is_err());
    }

    #[test]
    fn tc_alignment_pairs_equal_labels_first() {
        use Technique::*;
        let a = sp("a", 0, 4);
        let b = sp("a", 5, 9);
        let gold = vec![(a.clone(), Doubt), (a.clone(), Slogans), (b.clone(), Repetition)];
        let pred = vec![(b.clone(), Repetition), (a.clone(), Slogans), (a.clone(), FlagWaving)];
        let (g, p) = align_tc(&gold, &pred).unwrap();
        assert_eq!(g, vec![Doubt, Slogans, Repetition]);
        assert_eq!(p, vec![FlagWaving, Slogans, Repetition]);
        assert!(align_tc(&gold, &pred[..2]).is_err());
        let extra = vec![(sp("z", 0, 1), Doubt)];
        assert!(align_tc(&gold, &[pred.clone(), extra].concat()).is_err());
    }

    #[test]
    fn reports_are_parseable() {
        let s = score_si(&[sp("a", 0, 4)], &[sp("a", 0, 4)]).unwrap();
        assert!(si_report(&s).starts_with("precision\t1.000000\n"));
        for line in si_json_lines(&s).lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
        let t = score_tc(&[Technique::Doubt], &[Technique::Doubt]).unwrap();
        assert_eq!(tc_report(&t).lines().count(), 3 + Technique::COUNT);
        assert!(tc_json_lines(&t).contains("\"technique\":\"Doubt\""));
        assert!(tc_json_lines(&t).contains("\"technique\":\"Name_Calling,Labeling\""));
    }
}
