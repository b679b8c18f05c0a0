use std::fmt;
use std::str::FromStr;

use super::loss::{softmax, softmax_ce_loss, ClassWeights};
use crate::checkpoint::Checkpoint;
use crate::optim::{self, DescentConfig, DescentReport, Objective};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    Plain,
    CostWeighted,
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossMode::Plain => "plain",
            LossMode::CostWeighted => "cost_weighted",
        })
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(LossMode::Plain),
            "cost_weighted" => Ok(LossMode::CostWeighted),
            other => Err(Error::Config(format!(
                "unknown loss {other:?}; expected plain or cost_weighted"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Initial step of the line search.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Inverse L2 strength; `None` disables the penalty.
    pub l2_c: Option<f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub loss_mode: LossMode,
    /// Used in cost-weighted mode; derived from the training counts when
    /// absent.
    pub class_weights: Option<ClassWeights>,
    /// Input columns z-scored with training statistics.
    pub standardize: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            max_iters: 500,
            l2_c: None,
            tolerance: 1e-6,
            seed: 0,
            loss_mode: LossMode::Plain,
            class_weights: None,
            standardize: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ColumnScale {
    column: usize,
    mean: f64,
    std: f64,
}

/// Multinomial softmax classifier `softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    n_classes: usize,
    input_dim: usize,
    /// Row-major `n_classes × input_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    l2_c: Option<f64>,
    trained: bool,
    scales: Vec<ColumnScale>,
}

impl LinearClassifier {
    pub fn zeros(n_classes: usize, input_dim: usize) -> Self {
        LinearClassifier {
            n_classes,
            input_dim,
            weights: vec![0.0; n_classes * input_dim],
            bias: vec![0.0; n_classes],
            l2_c: None,
            trained: false,
            scales: Vec::new(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn set_parameters(&mut self, weights: Vec<f64>, bias: Vec<f64>) -> Result<()> {
        if weights.len() != self.n_classes * self.input_dim || bias.len() != self.n_classes {
            return Err(Error::DimMismatch {
                expected: self.n_classes * self.input_dim + self.n_classes,
                actual: weights.len() + bias.len(),
                context: "classifier parameters".into(),
            });
        }
        self.weights = weights;
        self.bias = bias;
        Ok(())
    }

    fn scaled(&self, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for s in &self.scales {
            x[s.column] = (x[s.column] - s.mean) / s.std;
        }
        x
    }

    pub fn logits(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                actual: input.len(),
                context: "classifier input".into(),
            });
        }
        let x = self.scaled(input);
        Ok((0..self.n_classes)
            .map(|k| {
                let row = &self.weights[k * self.input_dim..(k + 1) * self.input_dim];
                self.bias[k] + row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new("linear");
        c.set_meta("n_classes", self.n_classes);
        c.set_meta("input_dim", self.input_dim);
        c.set_meta("trained", self.trained);
        c.set_meta(
            "l2_c",
            self.l2_c.map_or_else(|| "none".to_string(), |v| format!("{v:?}")),
        );
        c.push("weights", self.n_classes, self.input_dim, self.weights.clone());
        c.push("bias", 1, self.n_classes, self.bias.clone());
        let scales: Vec<f64> = self
            .scales
            .iter()
            .flat_map(|s| [s.column as f64, s.mean, s.std])
            .collect();
        c.push("column_scales", self.scales.len(), 3, scales);
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind("linear")?;
        let n_classes: usize = c.meta_parse("n_classes")?;
        let input_dim: usize = c.meta_parse("input_dim")?;
        let l2_c = match c.meta("l2_c")? {
            "none" => None,
            _ => Some(c.meta_parse("l2_c")?),
        };
        let mut model = LinearClassifier::zeros(n_classes, input_dim);
        model.set_parameters(c.tensor("weights")?.data.clone(), c.tensor("bias")?.data.clone())?;
        model.l2_c = l2_c;
        model.trained = c.meta_parse("trained")?;
        model.scales = c
            .tensor("column_scales")?
            .data
            .chunks(3)
            .map(|s| ColumnScale {
                column: s[0] as usize,
                mean: s[1],
                std: s[2],
            })
            .collect();
        if model.scales.iter().any(|s| s.column >= input_dim || s.std <= 0.0) {
            return Err(Error::Invalid("bad column scale in checkpoint".into()));
        }
        Ok(model)
    }
}

/// Argmax class (lowest index on ties) and the softmax probabilities.
pub fn predict(model: &LinearClassifier, input: &[f64]) -> Result<(usize, Vec<f64>)> {
    let probs = softmax(&model.logits(input)?);
    let best = probs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > probs[best] { i } else { best });
    Ok((best, probs))
}

/// Mean (optionally class-weighted) cross-entropy of a softmax classifier plus
/// `‖W‖² / (2 C N)`, i.e. the usual `Σ loss + ‖W‖² / (2C)` objective divided
/// by `N`. Parameters are the row-major weights followed by the bias.
pub struct SoftmaxObjective {
    rows: Vec<Vec<(usize, f64)>>,
    targets: Vec<usize>,
    example_weights: Vec<f64>,
    n_classes: usize,
    input_dim: usize,
    l2_c: Option<f64>,
}

impl SoftmaxObjective {
    pub fn new(
        inputs: &[Vec<f64>],
        targets: &[usize],
        n_classes: usize,
        weights: Option<&ClassWeights>,
        l2_c: Option<f64>,
    ) -> Result<Self> {
        let input_dim = inputs.first().map_or(0, Vec::len);
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Invalid("need equally many (≥ 1) inputs and targets".into()));
        }
        if let Some(c) = l2_c {
            if !(c > 0.0) {
                return Err(Error::Config(format!("C must be positive, got {c}")));
            }
        }
        let mut rows = Vec::with_capacity(inputs.len());
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != input_dim {
                return Err(Error::DimMismatch {
                    expected: input_dim,
                    actual: x.len(),
                    context: format!("training example {i}"),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("training example {i}")));
            }
            rows.push(
                x.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect(),
            );
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= n_classes) {
            return Err(Error::Invalid(format!("target {t} ≥ class count {n_classes}")));
        }
        let example_weights = match weights {
            Some(w) => {
                if w.len() != n_classes {
                    return Err(Error::DimMismatch {
                        expected: n_classes,
                        actual: w.len(),
                        context: "class weights".into(),
                    });
                }
                targets.iter().map(|&t| w.get(t)).collect()
            }
            None => vec![1.0; targets.len()],
        };
        Ok(SoftmaxObjective {
            rows,
            targets: targets.to_vec(),
            example_weights,
            n_classes,
            input_dim,
            l2_c,
        })
    }

    fn logits(&self, params: &[f64], row: &[(usize, f64)]) -> Vec<f64> {
        let bias = &params[self.n_classes * self.input_dim..];
        (0..self.n_classes)
            .map(|k| {
                let w = &params[k * self.input_dim..(k + 1) * self.input_dim];
                bias[k] + row.iter().map(|&(j, v)| w[j] * v).sum::<f64>()
            })
            .collect()
    }
}

impl Objective for SoftmaxObjective {
    fn dim(&self) -> usize {
        self.n_classes * (self.input_dim + 1)
    }

    fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let n = self.rows.len() as f64;
        let wlen = self.n_classes * self.input_dim;
        let mut grad = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for ((row, &t), &ew) in self.rows.iter().zip(&self.targets).zip(&self.example_weights) {
            let logits = self.logits(params, row);
            loss += ew * softmax_ce_loss(&logits, t);
            let mut d = softmax(&logits);
            d[t] -= 1.0;
            for (k, dk) in d.iter().enumerate() {
                let g = ew * dk / n;
                if g == 0.0 {
                    continue;
                }
                let gw = &mut grad[k * self.input_dim..(k + 1) * self.input_dim];
                for &(j, v) in row {
                    gw[j] += g * v;
                }
                grad[wlen + k] += g;
            }
        }
        loss /= n;
        if let Some(c) = self.l2_c {
            let scale = 1.0 / (c * n);
            let sq: f64 = params[..wlen].iter().map(|w| w * w).sum();
            loss += 0.5 * scale * sq;
            for (g, w) in grad[..wlen].iter_mut().zip(&params[..wlen]) {
                *g += scale * w;
            }
        }
        (loss, grad)
    }
}

pub struct Trained {
    pub model: LinearClassifier,
    pub report: DescentReport,
}

fn column_scales(inputs: &[Vec<f64>], columns: &[usize]) -> Result<Vec<ColumnScale>> {
    let n = inputs.len() as f64;
    columns
        .iter()
        .map(|&column| {
            if inputs.iter().any(|x| column >= x.len()) {
                return Err(Error::Invalid(format!("standardize column {column} out of range")));
            }
            let mean = inputs.iter().map(|x| x[column]).sum::<f64>() / n;
            let var = inputs.iter().map(|x| (x[column] - mean).powi(2)).sum::<f64>() / n;
            let std = if var > 0.0 { var.sqrt() } else { 1.0 };
            Ok(ColumnScale { column, mean, std })
        })
        .collect()
}

/// Trains from zero initialization with full-batch gradient descent.
pub fn train(inputs: &[Vec<f64>], targets: &[usize], n_classes: usize, config: &TrainConfig) -> Result<Trained> {
    if inputs.is_empty() {
        return Err(Error::Invalid("empty training set".into()));
    }
    let input_dim = inputs[0].len();
    let scales = column_scales(inputs, &config.standardize)?;
    let mut model = LinearClassifier::zeros(n_classes, input_dim);
    model.scales = scales;
    model.l2_c = config.l2_c;
    let scaled: Vec<Vec<f64>> = inputs.iter().map(|x| model.scaled(x)).collect();

    let weights = match config.loss_mode {
        LossMode::Plain => None,
        LossMode::CostWeighted => Some(match &config.class_weights {
            Some(w) => w.clone(),
            None => {
                let mut counts = vec![0u64; n_classes];
                for &t in targets.iter().filter(|&&t| t < n_classes) {
                    counts[t] += 1;
                }
                ClassWeights::from_observed_counts(&counts)
            }
        }),
    };
    let objective = SoftmaxObjective::new(&scaled, targets, n_classes, weights.as_ref(), config.l2_c)?;
    let descent = DescentConfig {
        initial_step: config.learning_rate,
        max_iters: config.max_iters,
        tolerance: config.tolerance,
        ..DescentConfig::default()
    };
    let report = optim::minimize(&objective, vec![0.0; objective.dim()], &descent)?;
    let wlen = n_classes * input_dim;
    model.set_parameters(report.params[..wlen].to_vec(), report.params[wlen..].to_vec())?;
    model.trained = true;
    Ok(Trained { model, report })
}
