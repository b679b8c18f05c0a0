//! Technique classifiers: a multinomial softmax classifier trained from
//! scratch with plain or class-weighted cross-entropy.
//!
//! The same [`LinearClassifier`] backs all three TC submodels:
//!
//! * the feature-based logistic regression (balanced weights, L2 penalty,
//!   standardized length column),
//! * the plain pooled-embedding classifier,
//! * the cost-weighted pooled-embedding classifier.

mod linear;
mod loss;

pub use linear::{predict, train, LinearClassifier, LossMode, SoftmaxObjective, TrainConfig, Trained};
pub use loss::{
    balanced_class_weights, compute_class_weights, softmax, softmax_ce_gradient, softmax_ce_loss, weighted_ce_loss,
    ClassWeights,
};

use crate::corpus::EmbeddingSequence;

/// Fragment representation for the pooled classifiers: the whole-context row.
pub fn pool_embedding(seq: &EmbeddingSequence) -> Vec<f64> {
    seq.rows()[0].clone()
}
