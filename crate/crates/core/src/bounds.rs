//! Empirical checks of the contrastive mutual-information lower bounds on
//! synthetic families whose reference MI is known.
//!
//! Unsupervised: two Gaussian views, `bound = −L_u + ln|𝒩|` against
//! `k · gaussian_mi(ρ)`. Supervised: prototype data, per `ε` stratum
//! `bound = (−L_s + N) / ε` against the MI of a same-label pair's prototypes.
//! Both losses are evaluated on held-out rows.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{synth_gaussian_views, synth_prototypes};
use crate::error::{Error, Result};
use crate::losses::{
    unsup_loss_multiview, weighted_sup_loss, weighted_sup_pair_terms, NegativeSets, TwoViewBatch,
};
use crate::matrix::Matrix;
use crate::mi::{discrete_mi, shared_positives, BoundReport, JointTable};
use crate::model::{backward, encode, init_params, Architecture, Head, ModelCaches, ModelParams, Upstream};
use crate::optimizer::{lars_step, LarsConfig, OptimizerState};
use crate::rng::Rng;
use crate::similarity::{LabelMetric, SimilarityConfig};

/// Two-view Gaussian data: `channels` independent latent channels with view
/// noise `noise_sd` (see [`synth_gaussian_views`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFamily {
    pub channels: usize,
    pub noise_sd: f64,
    pub train_rows: usize,
    pub eval_rows: usize,
    /// Draws the second view from its own latent, so the views share nothing
    /// and the reference MI is 0.
    pub independent: bool,
}

/// Encoder and optimization settings shared by both harnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTraining {
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub steps: usize,
    pub optimizer: LarsConfig,
    pub similarity: SimilarityConfig,
    pub tolerance: f64,
}

impl Default for BoundTraining {
    fn default() -> Self {
        Self {
            hidden: vec![32],
            latent_dim: 8,
            steps: 300,
            optimizer: LarsConfig {
                base_lr: 1.0,
                momentum: 0.9,
                eta: 0.02,
                weight_decay: 0.0,
            },
            similarity: SimilarityConfig::default(),
            tolerance: 0.05,
        }
    }
}

impl BoundTraining {
    fn architecture(&self, inputs: &[usize]) -> Architecture {
        let encoders = inputs
            .iter()
            .map(|&d| {
                let mut s = vec![d];
                s.extend_from_slice(&self.hidden);
                s.push(self.latent_dim);
                s
            })
            .collect();
        // the bound losses never read the classifier; it exists to complete the model
        Architecture {
            encoders,
            classifier: vec![self.latent_dim * inputs.len(), 1],
            head: Head::Sigmoid,
        }
    }
}

/// Settings of the unsupervised harness beyond the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsupBoundSpec {
    pub family: GaussianFamily,
    pub training: BoundTraining,
    /// Whether `L_u` carries the `g` weights.
    pub weighted: bool,
    /// Held-out anchors averaged per evaluation (rounded up to whole batches).
    pub eval_anchors: usize,
}

/// Encodes `xs`, lets `loss` turn the embeddings into `(value, ∂/∂Z)`, and
/// backpropagates through the encoders only.
fn encoder_step(
    params: &ModelParams,
    xs: &[Matrix],
    loss: impl FnOnce(&[Matrix]) -> Result<(f64, Vec<Matrix>)>,
) -> Result<(f64, ModelParams)> {
    let mut z = Vec::with_capacity(xs.len());
    let mut caches = Vec::with_capacity(xs.len());
    for (v, x) in xs.iter().enumerate() {
        let (zv, c) = encode(params, x, v + 1)?;
        z.push(zv);
        caches.push(c);
    }
    let (value, d_z) = loss(&z)?;
    let grads = backward(
        params,
        &ModelCaches {
            encoders: caches,
            classifier: None,
            classified_rows: Vec::new(),
        },
        &Upstream { d_z, d_y_hat: None },
    )?;
    Ok((value, grads))
}

fn encode_all(params: &ModelParams, xs: &[Matrix]) -> Result<Vec<Matrix>> {
    xs.iter().enumerate().map(|(v, x)| Ok(encode(params, x, v + 1)?.0)).collect()
}

fn two_view_loss(
    raw: [&Matrix; 2],
    z: &[Matrix],
    weighted: bool,
    cfg: &SimilarityConfig,
) -> Result<(f64, Vec<Matrix>)> {
    let negs = NegativeSets::full(z[0].rows());
    let b = TwoViewBatch {
        raw,
        z: [&z[0], &z[1]],
        negatives: &negs,
        weights: None,
    };
    let (l, [g1, g2]) = unsup_loss_multiview(&b, weighted, cfg)?;
    Ok((l, vec![g1, g2]))
}

/// One `(size, seed)` run of the unsupervised bound. Training uses batches
/// of `size + 1` rows so every anchor has exactly `size` negatives; training
/// failures come back as a failed report.
pub fn unsup_bound_run(spec: &UnsupBoundSpec, size: usize, seed: u64) -> Result<BoundReport> {
    let fam = &spec.family;
    let tr = &spec.training;
    if size == 0 || size + 1 > fam.train_rows || size + 1 > fam.eval_rows {
        return Err(Error::Config(format!(
            "negative-set size {size} needs at least {} train and eval rows (have {} and {})",
            size + 1,
            fam.train_rows,
            fam.eval_rows
        )));
    }
    let mut master = Rng::new(seed);
    let mut data_rng = master.fork(10);
    let params_seed = master.next_u64();
    let mut batch_rng = master.fork(11);
    let mut eval_rng = master.fork(12);
    let rows = fam.train_rows + fam.eval_rows;
    let mut all = synth_gaussian_views(rows, fam.channels, fam.noise_sd, &mut data_rng)?;
    let mut reference = all.mutual_information;
    if fam.independent {
        let other = synth_gaussian_views(rows, fam.channels, fam.noise_sd, &mut data_rng)?;
        let [v2, _] = other.views;
        all.views[1] = v2;
        reference = 0.0;
    }
    let train_idx: Vec<usize> = (0..fam.train_rows).collect();
    let eval_idx: Vec<usize> = (fam.train_rows..fam.train_rows + fam.eval_rows).collect();
    let pools = |idx: &[usize]| [all.views[0].select_rows(idx), all.views[1].select_rows(idx)];
    let train = pools(&train_idx);
    let held = pools(&eval_idx);
    let terms = 2 * size;

    let arch = tr.architecture(&[fam.channels, fam.channels]);
    let mut params = init_params(&arch, params_seed)?;
    let mut opt = OptimizerState::new(tr.optimizer)?;
    for step in 0..tr.steps {
        let rows = batch_rng.sample_indices(fam.train_rows, size + 1)?;
        let xs = [train[0].select_rows(&rows), train[1].select_rows(&rows)];
        let fitted = encoder_step(&params, &xs, |z| two_view_loss([&xs[0], &xs[1]], z, spec.weighted, &tr.similarity))
            .and_then(|(_, g)| lars_step(&mut params, &g, &mut opt));
        if let Err(e) = fitted {
            let why = format!("training diverged at step {step}: {e}");
            return Ok(BoundReport::failed(size, terms, seed, reference, tr.tolerance, why));
        }
    }

    let batches = spec.eval_anchors.div_ceil(size + 1).max(1);
    let mut total = 0.0;
    for _ in 0..batches {
        let rows = eval_rng.sample_indices(fam.eval_rows, size + 1)?;
        let xs = [held[0].select_rows(&rows), held[1].select_rows(&rows)];
        let z = encode_all(&params, &xs)?;
        match two_view_loss([&xs[0], &xs[1]], &z, spec.weighted, &tr.similarity) {
            Ok((l, _)) => total += l,
            Err(e) => {
                let why = format!("evaluation failed: {e}");
                return Ok(BoundReport::failed(size, terms, seed, reference, tr.tolerance, why));
            }
        }
    }
    let l_u = total / batches as f64;
    let bound = -l_u + libm::log(size as f64);
    Ok(BoundReport::new(size, terms, seed, l_u, bound, reference, tr.tolerance))
}

/// Every `(size, seed)` run, ordered by size then seed.
pub fn check_unsup_bound(spec: &UnsupBoundSpec, sizes: &[usize], seeds: &[u64]) -> Result<Vec<BoundReport>> {
    let mut out = Vec::with_capacity(sizes.len() * seeds.len());
    for &size in sizes {
        for &seed in seeds {
            out.push(unsup_bound_run(spec, size, seed)?);
        }
    }
    Ok(out)
}

/// Mean bound per size over the successful runs, in `sizes` order.
pub fn mean_bound_by_size(reports: &[BoundReport], sizes: &[usize]) -> Vec<Option<f64>> {
    sizes
        .iter()
        .map(|&s| {
            let v: Vec<f64> = reports
                .iter()
                .filter(|r| r.size == s && r.failure.is_none())
                .map(|r| r.bound)
                .collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// Labeled prototype data (see [`synth_prototypes`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFamily {
    /// `K × c` binary label vectors, one per prototype.
    pub prototype_labels: Matrix,
    pub dim: usize,
    pub noise_sd: f64,
    pub train_rows: usize,
    pub eval_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupBoundSpec {
    pub family: PrototypeFamily,
    pub training: BoundTraining,
    pub metric: LabelMetric,
    /// Rows per training and evaluation batch.
    pub batch: usize,
    pub eval_batches: usize,
}

/// MI between the prototypes of two rows that share a label: labels are
/// weighted uniformly and the prototypes carrying a label are equally likely,
/// so `p(u, v) = (1/|A|) Σ_a p(u|a) p(v|a)`. Labels carried by every prototype
/// or by none never form a group and are left out.
pub fn prototype_pair_mi(prototype_labels: &Matrix) -> Result<f64> {
    let k = prototype_labels.rows();
    let mut joint = Matrix::zeros(k, k);
    let mut used = 0usize;
    for a in 0..prototype_labels.cols() {
        let carriers: Vec<usize> = (0..k).filter(|&u| prototype_labels[(u, a)] == 1.0).collect();
        if carriers.is_empty() || carriers.len() == k {
            continue;
        }
        used += 1;
        let p = 1.0 / carriers.len() as f64;
        for &u in &carriers {
            for &v in &carriers {
                joint[(u, v)] += p * p;
            }
        }
    }
    if used == 0 {
        return Err(Error::DegenerateBatch(
            "no label separates the prototypes, so no pair has a reference".to_string(),
        ));
    }
    Ok(discrete_mi(&JointTable::from_weights(&joint)?))
}

#[derive(Default, Clone)]
struct StratumAcc {
    bound: f64,
    loss: f64,
    neg_size: f64,
    batches: usize,
}

/// One seed of the supervised bound: one report per `ε` stratum seen in
/// evaluation, ordered by `ε`. Each evaluation batch gives, per stratum,
/// `L_s` as the label-mean of that stratum's mean pair term and `N` as the
/// label-mean of `ln|𝒩(a)|` over the same labels; the reported values
/// average the batches.
pub fn sup_bound_run(spec: &SupBoundSpec, seed: u64) -> Result<Vec<BoundReport>> {
    let fam = &spec.family;
    let tr = &spec.training;
    if spec.batch < 3 || spec.batch > fam.train_rows || spec.batch > fam.eval_rows {
        return Err(Error::Config(format!(
            "batch {} must be at least 3 and fit both pools ({} train, {} eval rows)",
            spec.batch, fam.train_rows, fam.eval_rows
        )));
    }
    let reference = prototype_pair_mi(&fam.prototype_labels)?;
    let mut master = Rng::new(seed);
    let mut data_rng = master.fork(10);
    let params_seed = master.next_u64();
    let mut batch_rng = master.fork(11);
    let mut eval_rng = master.fork(12);
    let data = synth_prototypes(
        fam.train_rows + fam.eval_rows,
        fam.dim,
        &fam.prototype_labels,
        fam.noise_sd,
        &mut data_rng,
    )?;
    let x = data.dataset.view(0);
    let y = data.dataset.labels();
    let offset = fam.train_rows;

    let arch = tr.architecture(&[fam.dim]);
    let mut params = init_params(&arch, params_seed)?;
    let mut opt = OptimizerState::new(tr.optimizer)?;
    let fail = |why: alloc::string::String| {
        let mut r = BoundReport::failed(spec.batch, 0, seed, reference, tr.tolerance, why);
        r.stratum = Some(0);
        Ok(vec![r])
    };
    for step in 0..tr.steps {
        let rows = batch_rng.sample_indices(fam.train_rows, spec.batch)?;
        let xb = [x.select_rows(&rows)];
        let yb = y.select_rows(&rows);
        let fitted = encoder_step(&params, &xb, |z| {
            let (l, d) = weighted_sup_loss(&z[0], &yb, spec.metric, &tr.similarity)?;
            Ok((l, vec![d]))
        })
        .and_then(|(_, g)| lars_step(&mut params, &g, &mut opt));
        match fitted {
            Ok(()) => {}
            // a batch without a usable label carries no signal
            Err(Error::DegenerateBatch(_)) => {}
            Err(e) => return fail(format!("training diverged at step {step}: {e}")),
        }
    }

    let c = y.cols();
    let mut strata: Vec<StratumAcc> = vec![StratumAcc::default(); c + 1];
    for _ in 0..spec.eval_batches {
        let rows: Vec<usize> = eval_rng
            .sample_indices(fam.eval_rows, spec.batch)?
            .into_iter()
            .map(|r| r + offset)
            .collect();
        let yb = y.select_rows(&rows);
        let z = encode_all(&params, &[x.select_rows(&rows)])?;
        let (groups, terms) = match weighted_sup_pair_terms(&z[0], &yb, spec.metric, &tr.similarity) {
            Ok(v) => v,
            Err(Error::DegenerateBatch(_)) => continue,
            Err(e) => return fail(format!("evaluation failed: {e}")),
        };
        // per (ε, label): term sum and count
        let mut sums = vec![vec![(0.0f64, 0usize); c]; c + 1];
        for t in &terms {
            let e = shared_positives(yb.row(t.i), yb.row(t.j))?;
            let cell = &mut sums[e][t.label];
            cell.0 += t.term;
            cell.1 += 1;
        }
        for (e, per_label) in sums.iter().enumerate().skip(1) {
            let mut loss = 0.0;
            let mut n_term = 0.0;
            let mut neg = 0.0;
            let mut labels = 0usize;
            for g in &groups.groups {
                let (s, k) = per_label[g.id];
                if k > 0 {
                    loss += s / k as f64;
                    n_term += libm::log(g.negatives.len() as f64);
                    neg += g.negatives.len() as f64;
                    labels += 1;
                }
            }
            if labels == 0 {
                continue;
            }
            let m = labels as f64;
            let (loss, n_term) = (loss / m, n_term / m);
            let acc = &mut strata[e];
            acc.bound += (-loss + n_term) / e as f64;
            acc.loss += loss;
            acc.neg_size += neg / m;
            acc.batches += 1;
        }
    }
    let mut out = Vec::new();
    for (e, acc) in strata.iter().enumerate() {
        if acc.batches == 0 {
            continue;
        }
        let b = acc.batches as f64;
        let size = libm::round(acc.neg_size / b) as usize;
        let mut r = BoundReport::new(size, size, seed, acc.loss / b, acc.bound / b, reference, tr.tolerance);
        r.stratum = Some(e);
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::DegenerateBatch(format!(
            "no evaluation batch of {} rows had a valid positive pair",
            spec.batch
        )));
    }
    Ok(out)
}

/// Per-stratum reports for every seed, ordered by seed then `ε`.
pub fn check_sup_bound(spec: &SupBoundSpec, seeds: &[u64]) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for &seed in seeds {
        out.extend(sup_bound_run(spec, seed)?);
    }
    Ok(out)
}
