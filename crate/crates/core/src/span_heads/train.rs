use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::loss_and_output_gradients;
use super::model::{Architecture, SpanHeadModel, Variant};
use crate::corpus::EmbeddingSequence;
use crate::optim::{self, relative_error, DescentConfig, DescentReport, Objective};
use crate::segmentation::{char_span_to_token_span, TokenAlignment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeadConfig {
    pub variant: Variant,
    pub embed_dim: usize,
    pub deep_dim: usize,
    pub sent_dim: usize,
    /// Minority-class weight `w` of the boundary losses.
    pub class_weight: f64,
    /// `(α_sent, α_start, α_end)`.
    pub alphas: [f64; 3],
    pub seed: u64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            variant: Variant::DeepSep,
            embed_dim: 768,
            deep_dim: 64,
            sent_dim: 64,
            class_weight: 2.0,
            alphas: [0.25, 0.5, 0.5],
            seed: 0,
            learning_rate: 1e-5,
            max_iters: 200,
            tolerance: 1e-6,
        }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Config(format!("alphas must be positive, got {:?}", self.alphas)));
        }
        if !(self.class_weight >= 1.0) {
            return Err(Error::Config(format!(
                "SI class weight must be ≥ 1, got {}",
                self.class_weight
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::Config("learning rate and tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::new(self.variant, self.embed_dim, self.deep_dim, self.sent_dim)
    }
}

/// Training target of one context: 1-based start/end token indices when the
/// context holds a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanTarget {
    pub span: Option<(usize, usize)>,
}

impl SpanTarget {
    pub fn none() -> Self {
        SpanTarget { span: None }
    }

    pub fn span(start: usize, end: usize) -> Self {
        SpanTarget {
            span: Some((start, end)),
        }
    }

    pub fn has_span(&self) -> bool {
        self.span.is_some()
    }

    pub fn validate(&self, n_tokens: usize) -> Result<()> {
        match self.span {
            Some((s, e)) if !(1 <= s && s <= e && e <= n_tokens) => Err(Error::Invalid(format!(
                "target ({s}, {e}) violates 1 ≤ start ≤ end ≤ {n_tokens}"
            ))),
            _ => Ok(()),
        }
    }

    /// Target for a context-relative gold char span under `alignment`,
    /// keeping only the first `max_tokens` tokens. A span starting past the
    /// cut becomes "no span"; one ending past it is clipped.
    pub fn from_gold(alignment: &TokenAlignment, gold: Option<(usize, usize)>, max_tokens: usize) -> Result<Self> {
        let Some((cs, ce)) = gold else {
            return Ok(SpanTarget::none());
        };
        let (s, e) = char_span_to_token_span(alignment, cs, ce)?;
        let limit = max_tokens.min(alignment.n_tokens());
        if s > limit {
            return Ok(SpanTarget::none());
        }
        Ok(SpanTarget::span(s, e.min(limit)))
    }
}

/// Mean per-context total loss over a dataset, as a function of the flat
/// parameter vector.
pub struct SpanObjective<'a> {
    arch: Architecture,
    config: &'a HeadConfig,
    data: &'a [(EmbeddingSequence, SpanTarget)],
}

impl<'a> SpanObjective<'a> {
    pub fn new(config: &'a HeadConfig, data: &'a [(EmbeddingSequence, SpanTarget)]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Invalid("no training contexts".into()));
        }
        let arch = config.architecture()?;
        for (seq, target) in data {
            if seq.dim() != arch.embed_dim {
                return Err(Error::DimMismatch {
                    expected: arch.embed_dim,
                    actual: seq.dim(),
                    context: format!("embeddings of {}", seq.context_id()),
                });
            }
            if seq.n_tokens() == 0 {
                return Err(Error::Invalid(format!("context {} has no tokens", seq.context_id())));
            }
            target.validate(seq.n_tokens())?;
        }
        Ok(SpanObjective { arch, config, data })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }
}

impl Objective for SpanObjective<'_> {
    fn dim(&self) -> usize {
        self.arch.n_params()
    }

    fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let n = self.data.len() as f64;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for (seq, target) in self.data {
            let fwd = self.arch.forward(params, seq).expect("validated in new");
            let (parts, (d_sent, d_start, d_end)) =
                loss_and_output_gradients(&fwd.output, target, self.config).expect("validated in new");
            loss += parts.total;
            self.arch.backward(params, &fwd, d_sent, &d_start, &d_end, &mut grad);
        }
        for g in &mut grad {
            *g /= n;
        }
        (loss / n, grad)
    }
}

pub struct TrainedHeads {
    pub model: SpanHeadModel,
    pub report: DescentReport,
}

const GRADIENT_CHECK_COORDS: usize = 64;
const GRADIENT_CHECK_TOLERANCE: f64 = 1e-4;

/// Compares analytic and central-difference gradients on the first context
/// over a seeded sample of coordinates.
fn check_gradient(config: &HeadConfig, data: &[(EmbeddingSequence, SpanTarget)], params: &[f64]) -> Result<()> {
    let one = SpanObjective::new(config, &data[..1])?;
    let (_, analytic) = one.value_and_gradient(params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9);
    let n = params.len();
    let coords: Vec<usize> = if n <= GRADIENT_CHECK_COORDS {
        (0..n).collect()
    } else {
        let mut c = sample(&mut rng, n, GRADIENT_CHECK_COORDS).into_vec();
        c.sort_unstable();
        c
    };
    let mut probe = params.to_vec();
    let mut numeric = Vec::with_capacity(coords.len());
    let h = 1e-5;
    for &i in &coords {
        probe[i] = params[i] + h;
        let up = one.value_and_gradient(&probe).0;
        probe[i] = params[i] - h;
        let down = one.value_and_gradient(&probe).0;
        probe[i] = params[i];
        numeric.push((up - down) / (2.0 * h));
    }
    let picked: Vec<f64> = coords.iter().map(|&i| analytic[i]).collect();
    let rel = relative_error(&picked, &numeric);
    if rel > GRADIENT_CHECK_TOLERANCE {
        return Err(Error::GradientCheck {
            rel_error: rel,
            tolerance: GRADIENT_CHECK_TOLERANCE,
        });
    }
    Ok(())
}

/// Jointly trains the sentence, start and end heads with full-batch gradient
/// descent. A gradient check on the first context runs before the first
/// step.
pub fn train_heads(data: &[(EmbeddingSequence, SpanTarget)], config: &HeadConfig) -> Result<TrainedHeads> {
    config.validate()?;
    let objective = SpanObjective::new(config, data)?;
    let init = objective.architecture().init_params(config.seed);
    check_gradient(config, data, &init)?;
    let descent = DescentConfig {
        initial_step: config.learning_rate,
        max_iters: config.max_iters,
        tolerance: config.tolerance,
        ..DescentConfig::default()
    };
    let report = optim::minimize(&objective, init, &descent)?;
    let model = SpanHeadModel {
        arch: objective.architecture().clone(),
        params: report.params.clone(),
    };
    Ok(TrainedHeads { model, report })
}
