//! Full-batch gradient descent with Armijo backtracking, plus finite-difference
//! gradient checking.
//!
//! The step size adapts: it is halved until the sufficient-decrease condition
//! holds, and doubled after every accepted step. Accepted steps never
//! increase the objective, so the loss history is non-increasing.

use crate::{Error, Result};

pub trait Objective {
    fn dim(&self) -> usize;

    /// Objective value and its gradient at `params`.
    fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>);
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub initial_step: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls to this value.
    pub tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
    pub max_step: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            initial_step: 1e-5,
            max_iters: 500,
            tolerance: 1e-6,
            armijo: 1e-4,
            max_backtracks: 60,
            max_step: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct DescentReport {
    pub params: Vec<f64>,
    pub history: Vec<IterRecord>,
    /// Gradient norm reached the tolerance.
    pub converged: bool,
}

impl DescentReport {
    pub fn final_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.loss)
    }

    /// Training log CSV: `iter,loss,grad_norm`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("iter,loss,grad_norm\n");
        for r in &self.history {
            out.push_str(&format!("{},{:?},{:?}\n", r.iter, r.loss, r.grad_norm));
        }
        out
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn minimize<O: Objective + ?Sized>(objective: &O, init: Vec<f64>, config: &DescentConfig) -> Result<DescentReport> {
    if !(config.initial_step > 0.0) || !(config.tolerance > 0.0) {
        return Err(Error::Config("step size and tolerance must be positive".into()));
    }
    let mut x = init;
    let (mut f, mut g) = objective.value_and_gradient(&x);
    if !f.is_finite() {
        return Err(Error::Diverged { iteration: 0, loss: f });
    }
    let mut gnorm = norm(&g);
    let mut history = vec![IterRecord {
        iter: 0,
        loss: f,
        grad_norm: gnorm,
    }];
    let mut step = config.initial_step;
    let mut converged = gnorm <= config.tolerance;

    for iter in 1..=config.max_iters {
        if converged {
            break;
        }
        let mut accepted = None;
        let mut last_trial = f;
        for _ in 0..=config.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let (ft, gt) = objective.value_and_gradient(&trial);
            last_trial = ft;
            if ft.is_finite() && ft <= f - config.armijo * step * gnorm * gnorm {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            if !last_trial.is_finite() {
                return Err(Error::Diverged {
                    iteration: iter,
                    loss: last_trial,
                });
            }
            // No representable step decreases the objective: numerically
            // stationary.
            log::debug!("line search exhausted at iteration {iter}");
            break;
        };
        x = xn;
        f = fnew;
        g = gnew;
        gnorm = norm(&g);
        history.push(IterRecord {
            iter,
            loss: f,
            grad_norm: gnorm,
        });
        converged = gnorm <= config.tolerance;
        step = (step * 2.0).min(config.max_step);
    }

    Ok(DescentReport {
        params: x,
        history,
        converged,
    })
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
