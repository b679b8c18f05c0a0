//! Propaganda detection toolkit.
//!
//! Two systems live here:
//!
//! * **Span identification (SI)**: articles are cut into contexts holding at
//!   most one gold span, and a stack of sentence/start/end classifier heads is
//!   trained over precomputed token embeddings to predict span boundaries.
//! * **Technique classification (TC)**: a hybrid of a feature-based logistic
//!   regression and two pooled-embedding softmax classifiers (plain and
//!   cost-weighted), combined by per-class routing and a part-of-speech rule
//!   correction.
//!
//! Embeddings come from an external encoder through the plain-text `PDEMB1`
//! file format (see [`corpus::load_embeddings`]); [`embed`] provides a
//! deterministic hash-based stand-in so the whole pipeline runs offline.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod checkpoint;
pub mod classifiers;
pub mod cli;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod features;
pub mod hybrid;
pub mod optim;
pub mod segmentation;
pub mod span_heads;
pub mod text;

pub use error::{Error, Result};
