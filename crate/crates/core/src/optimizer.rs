//! Momentum SGD with layer-wise adaptive rate scaling.
//!
//! For a weight tensor `w` with gradient `g`:
//!
//! ```text
//! local = η‖w‖ / (‖g‖ + wd‖w‖ + 1e-12)
//! v ← m·v + base_lr·local·(g + wd·w)
//! w ← w − v
//! ```
//!
//! Bias tensors skip the trust ratio (`local = 1`). A weight tensor with
//! `‖w‖ = 0` has `local = 0` and never moves, so weights must start nonzero.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::ModelParams;

const LARS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LarsConfig {
    pub base_lr: f64,
    pub momentum: f64,
    /// Trust coefficient η.
    pub eta: f64,
    pub weight_decay: f64,
}

impl Default for LarsConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.05,
            momentum: 0.9,
            eta: 0.001,
            weight_decay: 0.0,
        }
    }
}

impl LarsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr >= 0.0) || !self.base_lr.is_finite() {
            return Err(Error::Config(format!(
                "base_lr must be finite and non-negative, got {}",
                self.base_lr
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!(
                "lars_eta must be positive and finite, got {}",
                self.eta
            )));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::Config(format!(
                "weight_decay must be finite and non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

/// Optimizer state: hyper-parameters, one momentum buffer per tensor, and
/// the step counter. Buffers are created on the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: LarsConfig,
    velocity: Vec<Matrix>,
    steps: u64,
}

impl OptimizerState {
    pub fn new(config: LarsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            velocity: Vec::new(),
            steps: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn velocity(&self) -> &[Matrix] {
        &self.velocity
    }

    /// One update over an ordered tensor list. The list must keep the same
    /// order and shapes across steps.
    pub fn step_tensors(
        &mut self,
        params: &mut [&mut Matrix],
        grads: &[&Matrix],
        kinds: &[ParamKind],
        names: &dyn Fn(usize) -> String,
    ) -> Result<()> {
        if params.len() != grads.len() || params.len() != kinds.len() {
            return Err(Error::contract(format!(
                "{} parameter tensors, {} gradients, {} kinds",
                params.len(),
                grads.len(),
                kinds.len()
            )));
        }
        for (t, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::contract(format!(
                    "gradient for {} is {}x{} but the parameter is {}x{}",
                    names(t),
                    g.rows(),
                    g.cols(),
                    p.rows(),
                    p.cols()
                )));
            }
            if !g.is_finite() {
                return Err(Error::Numeric(format!("non-finite gradient in {}", names(t))));
            }
        }
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        } else if self.velocity.len() != params.len()
            || self.velocity.iter().zip(params.iter()).any(|(v, p)| v.shape() != p.shape())
        {
            return Err(Error::contract(
                "parameter layout changed since the momentum buffers were created",
            ));
        }
        let LarsConfig {
            base_lr,
            momentum,
            eta,
            weight_decay,
        } = self.config;
        for (t, p) in params.iter_mut().enumerate() {
            let g = grads[t];
            let lr = match kinds[t] {
                ParamKind::Bias => base_lr,
                ParamKind::Weight => {
                    let wn = p.norm();
                    base_lr * eta * wn / (g.norm() + weight_decay * wn + LARS_EPS)
                }
            };
            let v = &mut self.velocity[t];
            for ((vv, &gg), &ww) in v
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(p.as_slice())
            {
                *vv = momentum * *vv + lr * (gg + weight_decay * ww);
            }
            for (ww, &vv) in p.as_mut_slice().iter_mut().zip(v.as_slice()) {
                *ww -= vv;
            }
            if !p.is_finite() {
                return Err(Error::Numeric(format!("{} became non-finite", names(t))));
            }
        }
        self.steps += 1;
        Ok(())
    }
}

/// One LARS step over every layer of the model.
pub fn lars_step(params: &mut ModelParams, grads: &ModelParams, state: &mut OptimizerState) -> Result<()> {
    let mut names = Vec::new();
    for (v, e) in params.encoders.iter().enumerate() {
        for l in 0..e.layers.len() {
            names.push(format!("encoder {} layer {l}", v + 1));
        }
    }
    for l in 0..params.classifier.layers.len() {
        names.push(format!("classifier layer {l}"));
    }
    let grad_tensors: Vec<&Matrix> = grads.layers().flat_map(|l| [&l.weight, &l.bias]).collect();
    let mut tensors: Vec<&mut Matrix> = params
        .layers_mut()
        .flat_map(|l| [&mut l.weight, &mut l.bias])
        .collect();
    if grad_tensors.len() != tensors.len() {
        return Err(Error::contract("gradient layout does not match the model"));
    }
    let kinds: Vec<ParamKind> = (0..tensors.len())
        .map(|t| if t % 2 == 0 { ParamKind::Weight } else { ParamKind::Bias })
        .collect();
    let label = |t: usize| {
        let part = if t % 2 == 0 { "weight" } else { "bias" };
        format!("{} {part}", names[t / 2])
    };
    state.step_tensors(&mut tensors, &grad_tensors, &kinds, &label)
}

/// Loss trace of a LARS run on a single weight tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    /// Loss before each step.
    pub trace: Vec<f64>,
    pub final_params: Matrix,
    /// Step at which the loss became non-finite or blew past 1e12× its start.
    pub diverged_at: Option<usize>,
}

/// Runs `n_steps` LARS updates on `loss_fn` (returning value and gradient),
/// treating `params` as one weight tensor.
pub fn quadratic_probe<F>(
    mut loss_fn: F,
    params: &Matrix,
    state: &mut OptimizerState,
    n_steps: usize,
) -> Result<ProbeReport>
where
    F: FnMut(&Matrix) -> Result<(f64, Matrix)>,
{
    let mut w = params.clone();
    let mut trace = Vec::with_capacity(n_steps);
    let mut diverged_at = None;
    let name = |_: usize| String::from("probe weight");
    for step in 0..n_steps {
        let (loss, g) = loss_fn(&w)?;
        trace.push(loss);
        let blown = trace[0].is_finite() && loss > 1e12 * trace[0].abs().max(1.0);
        if !loss.is_finite() || blown {
            diverged_at = Some(step);
            break;
        }
        if let Err(e) = state.step_tensors(&mut [&mut w], &[&g], &[ParamKind::Weight], &name) {
            match e {
                Error::Numeric(_) => {
                    diverged_at = Some(step);
                    break;
                }
                other => return Err(other),
            }
        }
    }
    Ok(ProbeReport {
        trace,
        final_params: w,
        diverged_at,
    })
}
