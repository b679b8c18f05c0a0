use super::model::HeadOutput;
use super::train::{HeadConfig, SpanTarget};
use crate::classifiers::{softmax_ce_gradient, softmax_ce_loss};
use crate::{Error, Result};

/// Cross-entropy of the binary sentence classifier.
pub fn sentence_loss(sent_logits: [f64; 2], has_span: bool) -> f64 {
    softmax_ce_loss(&sent_logits, has_span as usize)
}

/// Start/end boundary loss. Without a span (`target = None`) the target is the
/// reserved position 0 and the loss is plain cross-entropy; with a span the
/// target probability is scaled by `w` inside the log, which is the plain
/// loss minus `ln w`.
pub fn boundary_loss(scores: &[f64], target: Option<usize>, w: f64) -> Result<f64> {
    match target {
        None => Ok(softmax_ce_loss(scores, 0)),
        Some(idx) if idx >= 1 && idx < scores.len() => Ok(softmax_ce_loss(scores, idx) - w.ln()),
        Some(idx) => Err(Error::Invalid(format!(
            "boundary index {idx} outside 1..={}",
            scores.len().saturating_sub(1)
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    /// Zero for variants without a sentence classifier.
    pub sent: f64,
    pub start: f64,
    pub end: f64,
    pub total: f64,
}

impl LossParts {
    pub fn combine(sent: f64, start: f64, end: f64, alphas: [f64; 3]) -> LossParts {
        LossParts {
            sent,
            start,
            end,
            total: alphas[0] * sent + alphas[1] * start + alphas[2] * end,
        }
    }
}

/// Weighted sum of the sentence, start and end losses for one context.
pub fn total_loss(output: &HeadOutput, target: &SpanTarget, config: &HeadConfig) -> Result<LossParts> {
    Ok(loss_and_output_gradients(output, target, config)?.0)
}

pub(crate) type OutputGradients = ([f64; 2], Vec<f64>, Vec<f64>);

pub(crate) fn loss_and_output_gradients(
    output: &HeadOutput,
    target: &SpanTarget,
    config: &HeadConfig,
) -> Result<(LossParts, OutputGradients)> {
    let n = output.start_scores.len();
    target.validate(n.saturating_sub(1))?;
    let [a_sent, a_start, a_end] = config.alphas;
    let (start_idx, end_idx) = match target.span {
        Some((s, e)) => (Some(s), Some(e)),
        None => (None, None),
    };

    let has_sent = config.variant.has_sentence_head();
    let (sent, d_sent) = if has_sent {
        let y = target.has_span() as usize;
        let g = softmax_ce_gradient(&output.sent_logits, y);
        (
            sentence_loss(output.sent_logits, target.has_span()),
            [a_sent * g[0], a_sent * g[1]],
        )
    } else {
        (0.0, [0.0, 0.0])
    };
    let start = boundary_loss(&output.start_scores, start_idx, config.class_weight)?;
    let end = boundary_loss(&output.end_scores, end_idx, config.class_weight)?;
    let scale = |g: Vec<f64>, a: f64| g.into_iter().map(|x| a * x).collect::<Vec<_>>();
    let d_start = scale(
        softmax_ce_gradient(&output.start_scores, start_idx.unwrap_or(0)),
        a_start,
    );
    let d_end = scale(softmax_ce_gradient(&output.end_scores, end_idx.unwrap_or(0)), a_end);
    Ok((
        LossParts::combine(sent, start, end, config.alphas),
        (d_sent, d_start, d_end),
    ))
}
