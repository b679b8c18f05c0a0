//! Span boundary heads over precomputed token embeddings.
//!
//! Every context is a matrix `H` of `n + 1` embedding rows; row 0 is the
//! whole-context vector and doubles as the "no boundary" position. Four head
//! stacks are available:
//!
//! | variant        | per-token input of the start/end output layers |
//! |----------------|------------------------------------------------|
//! | `base`         | `[H]`                                          |
//! | `sent`         | `[H; C]`                                       |
//! | `deep_sep`     | start `[H; S; C]`, end `[H; E; C]`             |
//! | `deep_combine` | `[H; S; E; C]` for both                        |
//!
//! `C = tanh(L_sent(H_0))` is the sentence feature repeated on every row,
//! `S`/`E` are per-token `tanh` layers. All variants but `base` also carry a
//! binary sentence classifier on `C`.
//!
//! Training minimizes `α_sent L_sent + α_start L_start + α_end L_end`
//! averaged over contexts, with the minority weight `w` applied inside the
//! log of the boundary losses of span-bearing contexts.

mod decode;
mod loss;
mod model;
mod train;

pub use decode::{decode_span, merge_token_spans, Decoded};
pub use loss::{boundary_loss, sentence_loss, total_loss, LossParts};
pub use model::{Architecture, HeadOutput, SpanHeadModel, Variant};
pub use train::{train_heads, HeadConfig, SpanObjective, SpanTarget, TrainedHeads};

pub use crate::segmentation::token_span_to_char;
