//! Feedforward encoders and classifier with hand-written backpropagation.
//!
//! Encoders use ReLU hidden layers and a linear output; the classifier uses
//! ReLU hidden layers and a sigmoid (multi-label) or softmax (multi-class)
//! head. Weights are stored `fan_in × fan_out` so a layer is `x·W + b`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Independent per-label probabilities.
    Sigmoid,
    /// Rows sum to one.
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    /// `1 × fan_out`.
    pub bias: Matrix,
    pub activation: Activation,
}

impl Dense {
    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer inputs and pre-activations retained for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    /// Head output, for the classifier only.
    output: Option<Matrix>,
}

impl ForwardCache {
    pub fn depth(&self) -> usize {
        self.pre.len()
    }
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = alloc::vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::fan_out));
        s
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("mlp forward", x.shape(), self.layers[0].weight.shape()));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let mut a = h.matmul(&layer.weight)?;
            let b = layer.bias.as_slice();
            for i in 0..a.rows() {
                for (v, &bb) in a.row_mut(i).iter_mut().zip(b) {
                    *v += bb;
                }
            }
            let out = match layer.activation {
                Activation::Identity => a.clone(),
                Activation::Relu => a.map(|v| v.max(0.0)),
            };
            inputs.push(core::mem::replace(&mut h, out));
            pre.push(a);
        }
        Ok((
            h,
            ForwardCache {
                inputs,
                pre,
                output: None,
            },
        ))
    }

    /// Gradients for every layer plus the gradient w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Matrix) -> Result<(Mlp, Matrix)> {
        if cache.depth() != self.layers.len() {
            return Err(Error::contract(format!(
                "forward cache depth {} does not match {} layers",
                cache.depth(),
                self.layers.len()
            )));
        }
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut d = d_out.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let pre = &cache.pre[l];
            if pre.shape() != d.shape() || cache.inputs[l].cols() != layer.fan_in() {
                return Err(Error::contract(format!(
                    "forward cache for layer {l} does not match the parameters"
                )));
            }
            if layer.activation == Activation::Relu {
                for (g, &p) in d.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    if p <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            let d_w = cache.inputs[l].transposed_matmul(&d)?;
            let mut d_b = Matrix::zeros(1, layer.fan_out());
            for row in d.iter_rows() {
                for (b, &g) in d_b.as_mut_slice().iter_mut().zip(row) {
                    *b += g;
                }
            }
            let d_in = d.matmul_transposed(&layer.weight)?;
            grads.push(Dense {
                weight: d_w,
                bias: d_b,
                activation: layer.activation,
            });
            d = d_in;
        }
        grads.reverse();
        Ok((Mlp { layers: grads }, d))
    }

    fn zeros_like(&self) -> Mlp {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Matrix::zeros(l.fan_in(), l.fan_out()),
                    bias: Matrix::zeros(1, l.fan_out()),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}

/// Layer sizes per component, input size first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    /// One entry per view encoder.
    pub encoders: Vec<Vec<usize>>,
    pub classifier: Vec<usize>,
    pub head: Head,
}

impl Architecture {
    pub fn latent_dim(&self) -> usize {
        *self.encoders[0].last().unwrap_or(&0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoders: Vec<Mlp>,
    pub classifier: Mlp,
    pub head: Head,
}

fn glorot_mlp(sizes: &[usize], hidden: Activation, last: Activation, rng: &mut Rng) -> Result<Mlp> {
    if sizes.len() < 2 {
        return Err(Error::contract("a component needs at least one layer"));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::contract(format!("layer sizes must be positive: {sizes:?}")));
    }
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for (l, w) in sizes.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let weight = if bound > 0.0 {
            rng.uniform(fan_in, fan_out, -bound, bound)?
        } else {
            Matrix::zeros(fan_in, fan_out)
        };
        let activation = if l + 2 == sizes.len() { last } else { hidden };
        layers.push(Dense {
            weight,
            bias: Matrix::zeros(1, fan_out),
            activation,
        });
    }
    Ok(Mlp { layers })
}

/// Glorot-uniform weights, zero biases; deterministic per seed.
pub fn init_params(arch: &Architecture, seed: u64) -> Result<ModelParams> {
    if arch.encoders.is_empty() || arch.encoders.len() > 2 {
        return Err(Error::contract(format!(
            "expected 1 or 2 encoders, got {}",
            arch.encoders.len()
        )));
    }
    let mut rng = Rng::new(seed);
    let encoders = arch
        .encoders
        .iter()
        .map(|s| glorot_mlp(s, Activation::Relu, Activation::Identity, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let classifier = glorot_mlp(&arch.classifier, Activation::Relu, Activation::Identity, &mut rng)?;
    let params = ModelParams {
        encoders,
        classifier,
        head: arch.head,
    };
    params.validate()?;
    Ok(params)
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let chain = |m: &Mlp, name: &str| -> Result<()> {
            if m.layers.is_empty() {
                return Err(Error::contract(format!("{name} has no layers")));
            }
            for (l, w) in m.layers.windows(2).enumerate() {
                if w[0].fan_out() != w[1].fan_in() {
                    return Err(Error::contract(format!(
                        "{name} layer {l} outputs {} but layer {} takes {}",
                        w[0].fan_out(),
                        l + 1,
                        w[1].fan_in()
                    )));
                }
            }
            for (l, d) in m.layers.iter().enumerate() {
                if d.bias.shape() != (1, d.fan_out()) {
                    return Err(Error::contract(format!("{name} layer {l} bias has wrong shape")));
                }
            }
            Ok(())
        };
        if self.encoders.is_empty() || self.encoders.len() > 2 {
            return Err(Error::contract("expected 1 or 2 encoders"));
        }
        for (v, e) in self.encoders.iter().enumerate() {
            chain(e, &format!("encoder {}", v + 1))?;
        }
        chain(&self.classifier, "classifier")?;
        let latent = self.latent_dim();
        if self.encoders.iter().any(|e| e.output_dim() != latent) {
            return Err(Error::contract("encoder output dimensions differ"));
        }
        if self.classifier.input_dim() != latent * self.encoders.len() {
            return Err(Error::contract(format!(
                "classifier takes {} inputs but the fused representation has {}",
                self.classifier.input_dim(),
                latent * self.encoders.len()
            )));
        }
        Ok(())
    }

    pub fn views(&self) -> usize {
        self.encoders.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoders[0].output_dim()
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            encoders: self.encoders.iter().map(Mlp::sizes).collect(),
            classifier: self.classifier.sizes(),
            head: self.head,
        }
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            encoders: self.encoders.iter().map(Mlp::zeros_like).collect(),
            classifier: self.classifier.zeros_like(),
            head: self.head,
        }
    }

    /// Every layer in a fixed order: encoders by view, then the classifier.
    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.encoders
            .iter()
            .flat_map(|e| e.layers.iter())
            .chain(self.classifier.layers.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.encoders
            .iter_mut()
            .flat_map(|e| e.layers.iter_mut())
            .chain(self.classifier.layers.iter_mut())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers()
            .map(|l| l.weight.as_slice().len() + l.bias.as_slice().len())
            .sum()
    }

    /// All parameters flattened in [`ModelParams::layers`] order, weights
    /// before biases within a layer.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in self.layers() {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    pub fn unflatten(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::contract(format!(
                "expected {} parameter values, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        let mut p = 0;
        for l in self.layers_mut() {
            for dst in [&mut l.weight, &mut l.bias] {
                let n = dst.as_slice().len();
                dst.as_mut_slice().copy_from_slice(&values[p..p + n]);
                p += n;
            }
        }
        Ok(())
    }
}

/// `Z = E_view(x)`; `view` is 1-based.
pub fn encode(params: &ModelParams, x: &Matrix, view: usize) -> Result<(Matrix, ForwardCache)> {
    let enc = view
        .checked_sub(1)
        .and_then(|v| params.encoders.get(v))
        .ok_or_else(|| Error::contract(format!("model has no encoder for view {view}")))?;
    enc.forward(x)
}

/// `Ŷ = C(z)` with the configured head.
pub fn classify(params: &ModelParams, z: &Matrix) -> Result<(Matrix, ForwardCache)> {
    let (logits, mut cache) = params.classifier.forward(z)?;
    let y_hat = apply_head(params.head, &logits);
    cache.output = Some(y_hat.clone());
    Ok((y_hat, cache))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn apply_head(head: Head, logits: &Matrix) -> Matrix {
    match head {
        Head::Sigmoid => logits.map(sigmoid),
        Head::Softmax => {
            let mut out = logits.clone();
            for i in 0..out.rows() {
                let r = out.row_mut(i);
                let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut s = 0.0;
                for v in r.iter_mut() {
                    *v = libm::exp(*v - m);
                    s += *v;
                }
                r.iter_mut().for_each(|v| *v /= s);
            }
            out
        }
    }
}

fn head_backward(head: Head, y_hat: &Matrix, d_y: &Matrix) -> Matrix {
    match head {
        Head::Sigmoid => Matrix::from_fn(y_hat.rows(), y_hat.cols(), |i, j| {
            let p = y_hat[(i, j)];
            d_y[(i, j)] * p * (1.0 - p)
        }),
        Head::Softmax => {
            let mut out = Matrix::zeros(y_hat.rows(), y_hat.cols());
            for i in 0..y_hat.rows() {
                let p = y_hat.row(i);
                let g = d_y.row(i);
                let inner = crate::numeric::dot(p, g);
                for (o, (&pp, &gg)) in out.row_mut(i).iter_mut().zip(p.iter().zip(g)) {
                    *o = pp * (gg - inner);
                }
            }
            out
        }
    }
}

/// Forward state of one objective evaluation.
#[derive(Debug, Clone)]
pub struct ModelCaches {
    /// One per encoder, over all batch rows.
    pub encoders: Vec<ForwardCache>,
    /// Classifier pass over the fused representation of `classified_rows`.
    pub classifier: Option<ForwardCache>,
    pub classified_rows: Vec<usize>,
}

/// Upstream gradients arriving at the model outputs.
#[derive(Debug, Clone)]
pub struct Upstream {
    /// `∂J/∂Z_v` over all batch rows, one per view (contrastive terms).
    pub d_z: Vec<Matrix>,
    /// `∂J/∂Ŷ` over `classified_rows`.
    pub d_y_hat: Option<Matrix>,
}

/// Backpropagates through the classifier and encoders. Classifier gradients
/// flow into the encoder outputs at `classified_rows`, split across views
/// by column block.
pub fn backward(params: &ModelParams, caches: &ModelCaches, upstream: &Upstream) -> Result<ModelParams> {
    if caches.encoders.len() != params.views() || upstream.d_z.len() != params.views() {
        return Err(Error::contract(format!(
            "model has {} encoders but got {} caches and {} upstream gradients",
            params.views(),
            caches.encoders.len(),
            upstream.d_z.len()
        )));
    }
    let mut grads = params.zeros_like();
    let mut d_z = upstream.d_z.clone();
    match (&caches.classifier, &upstream.d_y_hat) {
        (Some(cache), Some(d_y)) => {
            let y_hat = cache
                .output
                .as_ref()
                .ok_or_else(|| Error::contract("classifier cache lacks the head output"))?;
            if y_hat.shape() != d_y.shape() || d_y.rows() != caches.classified_rows.len() {
                return Err(Error::shape("classifier backward", y_hat.shape(), d_y.shape()));
            }
            let d_logits = head_backward(params.head, y_hat, d_y);
            let (cg, d_s) = params.classifier.backward(cache, &d_logits)?;
            grads.classifier = cg;
            let latent = params.latent_dim();
            for (r, &row) in caches.classified_rows.iter().enumerate() {
                for (v, dz) in d_z.iter_mut().enumerate() {
                    if row >= dz.rows() {
                        return Err(Error::contract(format!(
                            "classified row {row} outside the encoded batch"
                        )));
                    }
                    let src = &d_s.row(r)[v * latent..(v + 1) * latent];
                    for (a, &b) in dz.row_mut(row).iter_mut().zip(src) {
                        *a += b;
                    }
                }
            }
        }
        (None, None) => {}
        _ => return Err(Error::contract("classifier cache and upstream gradient must both be present")),
    }
    for (v, (enc, cache)) in params.encoders.iter().zip(&caches.encoders).enumerate() {
        if d_z[v].rows() != cache.inputs.first().map_or(0, Matrix::rows) {
            return Err(Error::contract(format!(
                "upstream gradient for view {} has the wrong row count",
                v + 1
            )));
        }
        let (eg, _) = enc.backward(cache, &d_z[v])?;
        grads.encoders[v] = eg;
    }
    Ok(grads)
}
