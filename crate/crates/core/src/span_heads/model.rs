use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::corpus::EmbeddingSequence;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Base,
    Sent,
    DeepSep,
    DeepCombine,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Base, Variant::Sent, Variant::DeepSep, Variant::DeepCombine];

    pub fn has_sentence_head(self) -> bool {
        self != Variant::Base
    }

    pub fn is_deep(self) -> bool {
        matches!(self, Variant::DeepSep | Variant::DeepCombine)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Base => "base",
            Variant::Sent => "sent",
            Variant::DeepSep => "deep_sep",
            Variant::DeepCombine => "deep_combine",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Variant::Base),
            "sent" => Ok(Variant::Sent),
            "deep_sep" => Ok(Variant::DeepSep),
            "deep_combine" => Ok(Variant::DeepCombine),
            other => Err(Error::Config(format!(
                "unknown variant {other:?}; expected base, sent, deep_sep or deep_combine"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Block {
    name: &'static str,
    offset: usize,
    rows: usize,
    cols: usize,
}

/// Shapes of a head stack and where each parameter block sits in the flat
/// parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub variant: Variant,
    pub embed_dim: usize,
    pub deep_dim: usize,
    pub sent_dim: usize,
    blocks: Vec<Block>,
    n_params: usize,
}

impl Architecture {
    pub fn new(variant: Variant, embed_dim: usize, deep_dim: usize, sent_dim: usize) -> Result<Self> {
        if embed_dim == 0 || deep_dim == 0 || sent_dim == 0 {
            return Err(Error::Config("head dimensions must be positive".into()));
        }
        let mut arch = Architecture {
            variant,
            embed_dim,
            deep_dim,
            sent_dim,
            blocks: Vec::new(),
            n_params: 0,
        };
        let width_start = arch.start_width();
        let width_end = arch.end_width();
        let mut add = |name, rows, cols| {
            arch.blocks.push(Block {
                name,
                offset: arch.n_params,
                rows,
                cols,
            });
            arch.n_params += rows * cols;
        };
        if variant.has_sentence_head() {
            add("sent_hidden.weight", sent_dim, embed_dim);
            add("sent_hidden.bias", 1, sent_dim);
            add("sent_out.weight", 2, sent_dim);
            add("sent_out.bias", 1, 2);
        }
        if variant.is_deep() {
            add("start_deep.weight", deep_dim, embed_dim);
            add("start_deep.bias", 1, deep_dim);
            add("end_deep.weight", deep_dim, embed_dim);
            add("end_deep.bias", 1, deep_dim);
        }
        add("start_out.weight", 1, width_start);
        add("start_out.bias", 1, 1);
        add("end_out.weight", 1, width_end);
        add("end_out.bias", 1, 1);
        Ok(arch)
    }

    fn sent_width(&self) -> usize {
        if self.variant.has_sentence_head() {
            self.sent_dim
        } else {
            0
        }
    }

    /// Width of the concatenated per-token input of the start output layer.
    pub fn start_width(&self) -> usize {
        let d = self.embed_dim;
        match self.variant {
            Variant::Base => d,
            Variant::Sent => d + self.sent_dim,
            Variant::DeepSep => d + self.deep_dim + self.sent_dim,
            Variant::DeepCombine => d + 2 * self.deep_dim + self.sent_dim,
        }
    }

    pub fn end_width(&self) -> usize {
        self.start_width()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn block(&self, name: &str) -> &Block {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .unwrap_or_else(|| panic!("{} has no block {name}", self.variant))
    }

    fn mat<'a>(&self, params: &'a [f64], name: &str) -> ArrayView2<'a, f64> {
        let b = self.block(name);
        ArrayView2::from_shape((b.rows, b.cols), &params[b.offset..b.offset + b.rows * b.cols]).expect("block shape")
    }

    fn vec<'a>(&self, params: &'a [f64], name: &str) -> ArrayView1<'a, f64> {
        let b = self.block(name);
        ArrayView1::from(&params[b.offset..b.offset + b.rows * b.cols])
    }

    fn add_grad(&self, grad: &mut [f64], name: &str, values: impl IntoIterator<Item = f64>) {
        let b = self.block(name);
        for (g, v) in grad[b.offset..b.offset + b.rows * b.cols].iter_mut().zip(values) {
            *g += v;
        }
    }

    /// Random `tanh`-layer weights, zero biases and zero output layers, so a
    /// fresh model scores every position equally.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; self.n_params];
        for b in &self.blocks {
            if matches!(b.name, "sent_hidden.weight" | "start_deep.weight" | "end_deep.weight") {
                let bound = 1.0 / (b.cols as f64).sqrt();
                for p in &mut params[b.offset..b.offset + b.rows * b.cols] {
                    *p = rng.gen_range(-bound..bound);
                }
            }
        }
        params
    }

    fn embedding_matrix(&self, seq: &EmbeddingSequence) -> Result<Array2<f64>> {
        if seq.dim() != self.embed_dim {
            return Err(Error::DimMismatch {
                expected: self.embed_dim,
                actual: seq.dim(),
                context: format!("embeddings of {}", seq.context_id()),
            });
        }
        if seq.n_tokens() == 0 {
            return Err(Error::Invalid(format!("context {} has no tokens", seq.context_id())));
        }
        let flat: Vec<f64> = seq.rows().iter().flatten().copied().collect();
        Ok(Array2::from_shape_vec((seq.rows().len(), self.embed_dim), flat).expect("rows"))
    }

    pub(crate) fn forward(&self, params: &[f64], seq: &EmbeddingSequence) -> Result<Forward> {
        let h = self.embedding_matrix(seq)?;
        let rows = h.nrows();
        let d = self.embed_dim;

        let (c, sent_logits) = if self.variant.has_sentence_head() {
            let pre = self.mat(params, "sent_hidden.weight").dot(&h.row(0)) + self.vec(params, "sent_hidden.bias");
            let c = pre.mapv(f64::tanh);
            let logits = self.mat(params, "sent_out.weight").dot(&c) + self.vec(params, "sent_out.bias");
            (c, logits)
        } else {
            (Array1::zeros(0), Array1::zeros(2))
        };

        let deep = |prefix: &str| -> Array2<f64> {
            let w = self.mat(params, &format!("{prefix}.weight"));
            let b = self.vec(params, &format!("{prefix}.bias"));
            (h.dot(&w.t()) + b).mapv(f64::tanh)
        };
        let (start_hidden, end_hidden) = if self.variant.is_deep() {
            (deep("start_deep"), deep("end_deep"))
        } else {
            (Array2::zeros((rows, 0)), Array2::zeros((rows, 0)))
        };

        let concat = |parts: &[&Array2<f64>]| -> Array2<f64> {
            let width: usize = parts.iter().map(|p| p.ncols()).sum();
            let mut x = Array2::zeros((rows, width));
            let mut col = 0;
            for p in parts {
                x.slice_mut(s![.., col..col + p.ncols()]).assign(p);
                col += p.ncols();
            }
            x
        };
        let c_rows = c.broadcast((rows, c.len())).expect("broadcast").to_owned();
        let (x_start, x_end) = match self.variant {
            Variant::Base => (h.clone(), h.clone()),
            Variant::Sent => {
                let x = concat(&[&h, &c_rows]);
                (x.clone(), x)
            }
            Variant::DeepSep => (
                concat(&[&h, &start_hidden, &c_rows]),
                concat(&[&h, &end_hidden, &c_rows]),
            ),
            Variant::DeepCombine => {
                let x = concat(&[&h, &start_hidden, &end_hidden, &c_rows]);
                (x.clone(), x)
            }
        };
        debug_assert_eq!(x_start.ncols(), self.start_width());
        debug_assert!(x_start.ncols() >= d);

        let score = |x: &Array2<f64>, prefix: &str| -> Array1<f64> {
            let u = self.vec(params, &format!("{prefix}.weight"));
            let b = self.vec(params, &format!("{prefix}.bias"))[0];
            x.dot(&u) + b
        };
        let start_scores = score(&x_start, "start_out");
        let end_scores = score(&x_end, "end_out");

        Ok(Forward {
            h,
            c,
            start_hidden,
            end_hidden,
            x_start,
            x_end,
            output: HeadOutput {
                sent_logits: [sent_logits[0], sent_logits[1]],
                start_scores: start_scores.to_vec(),
                end_scores: end_scores.to_vec(),
            },
        })
    }

    /// Accumulates parameter gradients given gradients of the loss with
    /// respect to the three outputs.
    pub(crate) fn backward(
        &self,
        params: &[f64],
        fwd: &Forward,
        d_sent: [f64; 2],
        d_start: &[f64],
        d_end: &[f64],
        grad: &mut [f64],
    ) {
        let d = self.embed_dim;
        let dd = self.deep_dim;
        let sw = self.sent_width();
        let d_start = ArrayView1::from(d_start);
        let d_end = ArrayView1::from(d_end);

        // Output layers.
        self.add_grad(grad, "start_out.weight", fwd.x_start.t().dot(&d_start));
        self.add_grad(grad, "start_out.bias", [d_start.sum()]);
        self.add_grad(grad, "end_out.weight", fwd.x_end.t().dot(&d_end));
        self.add_grad(grad, "end_out.bias", [d_end.sum()]);

        if self.variant == Variant::Base {
            return;
        }

        // Gradient w.r.t. the concatenated inputs: outer(d_scores, u).
        let u_start = self.vec(params, "start_out.weight");
        let u_end = self.vec(params, "end_out.weight");
        let outer = |ds: &ArrayView1<f64>, u: &ArrayView1<f64>| -> Array2<f64> {
            let col = ds.view().insert_axis(Axis(1));
            let row = u.view().insert_axis(Axis(0));
            col.dot(&row)
        };
        let dx_start = outer(&d_start, &u_start);
        let dx_end = outer(&d_end, &u_end);

        // Sentence feature C sits in the last `sw` columns of both inputs.
        let ws = dx_start.ncols();
        let mut d_c =
            dx_start.slice(s![.., ws - sw..]).sum_axis(Axis(0)) + dx_end.slice(s![.., ws - sw..]).sum_axis(Axis(0));

        if self.variant.is_deep() {
            let (d_s, d_e) = match self.variant {
                Variant::DeepSep => (
                    dx_start.slice(s![.., d..d + dd]).to_owned(),
                    dx_end.slice(s![.., d..d + dd]).to_owned(),
                ),
                _ => (
                    &dx_start.slice(s![.., d..d + dd]) + &dx_end.slice(s![.., d..d + dd]),
                    &dx_start.slice(s![.., d + dd..d + 2 * dd]) + &dx_end.slice(s![.., d + dd..d + 2 * dd]),
                ),
            };
            for (prefix, d_hidden, hidden) in [
                ("start_deep", d_s, &fwd.start_hidden),
                ("end_deep", d_e, &fwd.end_hidden),
            ] {
                let d_pre = d_hidden * &hidden.mapv(|a| 1.0 - a * a);
                self.add_grad(grad, &format!("{prefix}.weight"), d_pre.t().dot(&fwd.h));
                self.add_grad(grad, &format!("{prefix}.bias"), d_pre.sum_axis(Axis(0)));
            }
        }

        // Sentence classifier.
        let d_sent = ArrayView1::from(&d_sent);
        let d_sent_w = d_sent.insert_axis(Axis(1)).dot(&fwd.c.view().insert_axis(Axis(0)));
        self.add_grad(grad, "sent_out.weight", d_sent_w);
        self.add_grad(grad, "sent_out.bias", d_sent.iter().copied());
        d_c = d_c + self.mat(params, "sent_out.weight").t().dot(&d_sent);

        let d_pre = d_c * &fwd.c.mapv(|a| 1.0 - a * a);
        let h0 = fwd.h.row(0);
        let d_w = d_pre.view().insert_axis(Axis(1)).dot(&h0.insert_axis(Axis(0)));
        self.add_grad(grad, "sent_hidden.weight", d_w);
        self.add_grad(grad, "sent_hidden.bias", d_pre.iter().copied());
    }
}

pub(crate) struct Forward {
    h: Array2<f64>,
    c: Array1<f64>,
    start_hidden: Array2<f64>,
    end_hidden: Array2<f64>,
    pub(crate) x_start: Array2<f64>,
    pub(crate) x_end: Array2<f64>,
    pub(crate) output: HeadOutput,
}

/// Raw head outputs for one context. Score vectors have one entry per
/// embedding row; entry 0 is the "no boundary" position.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    /// `[no span, span]`; zeros for the `base` variant.
    pub sent_logits: [f64; 2],
    pub start_scores: Vec<f64>,
    pub end_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanHeadModel {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

impl SpanHeadModel {
    pub fn new(arch: Architecture, seed: u64) -> Self {
        let params = arch.init_params(seed);
        SpanHeadModel { arch, params }
    }

    pub fn variant(&self) -> Variant {
        self.arch.variant
    }

    pub fn forward(&self, seq: &EmbeddingSequence) -> Result<HeadOutput> {
        Ok(self.arch.forward(&self.params, seq)?.output)
    }

    /// Concatenated per-token inputs of the start and end output layers.
    pub fn output_layer_inputs(&self, seq: &EmbeddingSequence) -> Result<(Array2<f64>, Array2<f64>)> {
        let f = self.arch.forward(&self.params, seq)?;
        Ok((f.x_start, f.x_end))
    }

    /// Named parameter block as a matrix.
    pub fn block(&self, name: &str) -> Array2<f64> {
        self.arch.mat(&self.params, name).to_owned()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new("span_heads");
        c.set_meta("variant", self.arch.variant);
        c.set_meta("embed_dim", self.arch.embed_dim);
        c.set_meta("deep_dim", self.arch.deep_dim);
        c.set_meta("sent_dim", self.arch.sent_dim);
        for b in &self.arch.blocks {
            c.push(
                b.name,
                b.rows,
                b.cols,
                self.params[b.offset..b.offset + b.rows * b.cols].to_vec(),
            );
        }
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind("span_heads")?;
        let variant: Variant = c.meta("variant")?.parse()?;
        let arch = Architecture::new(
            variant,
            c.meta_parse("embed_dim")?,
            c.meta_parse("deep_dim")?,
            c.meta_parse("sent_dim")?,
        )?;
        let mut params = vec![0.0; arch.n_params];
        for b in &arch.blocks {
            let t = c.tensor(b.name)?;
            if (t.rows, t.cols) != (b.rows, b.cols) {
                return Err(Error::DimMismatch {
                    expected: b.rows * b.cols,
                    actual: t.rows * t.cols,
                    context: format!("checkpoint block {}", b.name),
                });
            }
            params[b.offset..b.offset + t.data.len()].copy_from_slice(&t.data);
        }
        Ok(SpanHeadModel { arch, params })
    }
}
