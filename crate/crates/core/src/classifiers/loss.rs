use std::collections::BTreeMap;

use crate::corpus::Technique;
use crate::{Error, Result};

/// Per-class loss multipliers, indexed by class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    pub fn uniform(n_classes: usize) -> Self {
        ClassWeights(vec![1.0; n_classes])
    }

    /// `w_t = (Σ_j c_j) / c_t`. Every count must be positive.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if c == 0 {
                    let name = Technique::from_index(i)
                        .filter(|_| counts.len() == Technique::COUNT)
                        .map_or_else(|| format!("#{i}"), |t| t.to_string());
                    Err(Error::ZeroClassCount(name))
                } else {
                    Ok(total as f64 / c as f64)
                }
            })
            .collect::<Result<_>>()
            .map(ClassWeights)
    }

    /// Like [`ClassWeights::from_counts`] but classes with no examples get
    /// weight 0; they contribute no loss terms anyway.
    pub fn from_observed_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        ClassWeights(
            counts
                .iter()
                .map(|&c| if c == 0 { 0.0 } else { total as f64 / c as f64 })
                .collect(),
        )
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weights for the 14 techniques from their training counts.
pub fn compute_class_weights(counts: &BTreeMap<Technique, u64>) -> Result<ClassWeights> {
    let dense: Vec<u64> = Technique::ALL
        .iter()
        .map(|t| counts.get(t).copied().unwrap_or(0))
        .collect();
    ClassWeights::from_counts(&dense)
}

/// "Balanced" weights: the cost weights divided by the number of observed
/// classes, so the per-example weight averages to 1 over the training set.
pub fn balanced_class_weights(counts: &[u64]) -> ClassWeights {
    let present = counts.iter().filter(|&&c| c > 0).count().max(1) as f64;
    let ClassWeights(w) = ClassWeights::from_observed_counts(counts);
    ClassWeights(w.into_iter().map(|x| x / present).collect())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `-log softmax(logits)[target]`, computed with max subtraction.
pub fn softmax_ce_loss(logits: &[f64], target: usize) -> f64 {
    log_sum_exp(logits) - logits[target]
}

pub fn weighted_ce_loss(logits: &[f64], target: usize, weights: &ClassWeights) -> f64 {
    weights.get(target) * softmax_ce_loss(logits, target)
}

/// Gradient of `softmax_ce_loss` with respect to the logits:
/// `softmax(logits) - onehot(target)`.
pub fn softmax_ce_gradient(logits: &[f64], target: usize) -> Vec<f64> {
    let mut g = softmax(logits);
    g[target] -= 1.0;
    g
}
