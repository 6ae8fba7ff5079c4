//! Objective composition and the training loop.
//!
//! `J = L_c + α·L_u + β·L_s`. A term whose effective weight is zero is not
//! evaluated and reports 0, so a method with a zeroed weight replays the
//! reduced method exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{sample_batch, BatchPlan, BatchSpec, Count, Dataset};
use crate::error::{Error, Result};
use crate::losses::{
    cross_entropy, supcon_loss, total_loss, unsup_loss_multiview, unsup_loss_single,
    weighted_sup_loss, LossBreakdown, NegativeSets, SingleViewBatch, TwoViewBatch, TwoViewWeights,
};
use crate::matrix::Matrix;
use crate::metrics::{evaluate, Decision, EvalReport};
use crate::model::{backward, classify, encode, init_params, Architecture, Head, ModelCaches, ModelParams, Upstream};
use crate::optimizer::{lars_step, LarsConfig, OptimizerState};
use crate::projection::AnchorProjection;
use crate::rng::Rng;
use crate::similarity::{weight_g_table, LabelMetric, SimilarityConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// `L_c` only.
    Dnn,
    /// Unweighted unsupervised contrastive term plus `L_c`.
    SimclrStyle,
    /// SupCon plus `L_c`.
    SupconStyle,
    /// Weighted unsupervised term plus `L_c`.
    HclU,
    /// Weighted supervised term plus `L_c`.
    HclS,
    Hcl,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Dnn,
        Method::SimclrStyle,
        Method::SupconStyle,
        Method::HclU,
        Method::HclS,
        Method::Hcl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dnn => "dnn",
            Method::SimclrStyle => "simclr-style",
            Method::SupconStyle => "supcon-style",
            Method::HclU => "hcl-u",
            Method::HclS => "hcl-s",
            Method::Hcl => "hcl",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "method `{s}` is not one of dnn, simclr-style, supcon-style, hcl-u, hcl-s, hcl"
                ))
            })
    }

    /// `(α, β)` after forcing the weights the method excludes to zero.
    pub fn effective_weights(self, alpha: f64, beta: f64) -> (f64, f64) {
        match self {
            Method::Dnn => (0.0, 0.0),
            Method::SimclrStyle | Method::HclU => (alpha, 0.0),
            Method::SupconStyle | Method::HclS => (0.0, beta),
            Method::Hcl => (alpha, beta),
        }
    }

    fn weighted_unsup(self) -> bool {
        !matches!(self, Method::SimclrStyle)
    }

    fn supcon(self) -> bool {
        matches!(self, Method::SupconStyle)
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewMode {
    /// One encoder; the unsupervised term pairs raw anchors with embeddings.
    Single,
    /// Two encoders; the unsupervised term pairs the two views.
    Two,
}

impl ViewMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "single-view" | "single" => Ok(ViewMode::Single),
            "two-view" | "two" => Ok(ViewMode::Two),
            other => Err(Error::Config(format!("mode `{other}` is not single-view or two-view"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ViewMode::Single => "single-view",
            ViewMode::Two => "two-view",
        }
    }
}

/// Label metric for the weighted supervised term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricChoice {
    /// Indicator on one-hot labels, Hamming otherwise.
    Auto,
    Fixed(LabelMetric),
}

impl MetricChoice {
    pub fn resolve(self, ds: &Dataset) -> LabelMetric {
        match self {
            MetricChoice::Auto if ds.is_multiclass() => LabelMetric::Indicator,
            MetricChoice::Auto => LabelMetric::Hamming,
            MetricChoice::Fixed(m) => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    pub mode: ViewMode,
    pub alpha: f64,
    pub beta: f64,
    pub similarity: SimilarityConfig,
    pub label_metric: MetricChoice,
    pub batch: BatchSpec,
    /// Steps per epoch; `None` covers the larger of the labeled and
    /// unlabeled pools once in expectation.
    pub steps_per_epoch: Option<usize>,
    pub epochs: usize,
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Single-view anchor map when the feature count differs from `latent_dim`.
    pub projection: AnchorProjection,
    pub classifier_hidden: Vec<usize>,
    pub optimizer: LarsConfig,
    /// Decision threshold for multi-label F1.
    pub threshold: f64,
    /// Precompute weight tables over the whole dataset when it has at most
    /// this many rows.
    pub cache_weights_up_to: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Hcl,
            mode: ViewMode::Single,
            alpha: 0.2,
            beta: 0.01,
            similarity: SimilarityConfig::default(),
            label_metric: MetricChoice::Auto,
            batch: BatchSpec {
                labeled: Count::Full,
                unlabeled: Count::Full,
                negatives: Count::Full,
            },
            steps_per_epoch: None,
            epochs: 200,
            encoder_hidden: alloc::vec![64],
            latent_dim: 32,
            projection: AnchorProjection::Random,
            classifier_hidden: Vec::new(),
            optimizer: LarsConfig::default(),
            threshold: 0.5,
            cache_weights_up_to: 4096,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::Config(format!(
                "alpha and beta must be non-negative (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.latent_dim == 0 || self.encoder_hidden.contains(&0) || self.classifier_hidden.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        if self.steps_per_epoch == Some(0) {
            return Err(Error::Config("steps_per_epoch must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if self.batch.labeled == Count::Exactly(0) {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        self.optimizer.validate()
    }

    pub fn effective_weights(&self) -> (f64, f64) {
        self.method.effective_weights(self.alpha, self.beta)
    }

    pub fn architecture(&self, ds: &Dataset) -> Architecture {
        let views = match self.mode {
            ViewMode::Single => 1,
            ViewMode::Two => 2,
        };
        let encoders = (0..views)
            .map(|v| {
                let mut s = alloc::vec![ds.view(v).cols()];
                s.extend_from_slice(&self.encoder_hidden);
                s.push(self.latent_dim);
                s
            })
            .collect();
        let mut classifier = alloc::vec![self.latent_dim * views];
        classifier.extend_from_slice(&self.classifier_hidden);
        classifier.push(ds.labels_count());
        Architecture {
            encoders,
            classifier,
            head: if ds.is_multiclass() { Head::Softmax } else { Head::Sigmoid },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnsupTerm {
    /// Unweighted (`g ≡ 1`).
    Plain,
    /// `g`-weighted negatives.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupTerm {
    SupCon,
    Weighted(LabelMetric),
}

/// Which terms enter `J` and with what weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub alpha: f64,
    pub beta: f64,
    pub unsup: Option<UnsupTerm>,
    pub sup: Option<SupTerm>,
    pub similarity: SimilarityConfig,
}

impl Objective {
    pub fn for_method(method: Method, alpha: f64, beta: f64, metric: LabelMetric, similarity: SimilarityConfig) -> Self {
        let (alpha, beta) = method.effective_weights(alpha, beta);
        let unsup = (alpha > 0.0).then_some(if method.weighted_unsup() {
            UnsupTerm::Weighted
        } else {
            UnsupTerm::Plain
        });
        let sup = (beta > 0.0).then_some(if method.supcon() {
            SupTerm::SupCon
        } else {
            SupTerm::Weighted(metric)
        });
        Self {
            alpha,
            beta,
            unsup,
            sup,
            similarity,
        }
    }
}

/// Model inputs for one objective evaluation. Rows of `views` are the
/// encoded rows; `labeled` indexes into them.
#[derive(Debug, Clone)]
pub struct StepBatch {
    pub views: Vec<Matrix>,
    /// Single view only: raw features in the embedding dimension.
    pub anchors: Option<Matrix>,
    /// Labels of the `labeled` rows, in that order.
    pub labels: Matrix,
    pub labeled: Vec<usize>,
    pub negatives: NegativeSets,
    /// Precomputed single-view `g` over the encoded rows.
    pub single_g: Option<Matrix>,
    pub two_view_w: Option<TwoViewWeights>,
}

/// `J` and its gradient with respect to every parameter.
pub fn objective_and_grad(params: &ModelParams, obj: &Objective, batch: &StepBatch) -> Result<(LossBreakdown, ModelParams)> {
    let views = params.views();
    if batch.views.len() != views {
        return Err(Error::contract(format!(
            "model has {views} encoders but the batch has {} views",
            batch.views.len()
        )));
    }
    let mut z = Vec::with_capacity(views);
    let mut enc_caches = Vec::with_capacity(views);
    for (v, x) in batch.views.iter().enumerate() {
        let (zv, cache) = encode(params, x, v + 1)?;
        z.push(zv);
        enc_caches.push(cache);
    }
    let n = z[0].rows();
    let latent = params.latent_dim();
    let mut d_z: Vec<Matrix> = (0..views).map(|_| Matrix::zeros(n, latent)).collect();

    // S over the labeled rows
    let mut s = z[0].select_rows(&batch.labeled);
    for zv in &z[1..] {
        s = s.hconcat(&zv.select_rows(&batch.labeled))?;
    }
    let (y_hat, cls_cache) = classify(params, &s)?;
    let (l_c, d_y_hat) = cross_entropy(&y_hat, &batch.labels)?;

    let mut l_u = 0.0;
    if let Some(term) = obj.unsup {
        let weighted = term == UnsupTerm::Weighted;
        match views {
            1 => {
                let anchors = batch
                    .anchors
                    .as_ref()
                    .ok_or_else(|| Error::contract("single-view unsupervised term needs anchors"))?;
                let b = SingleViewBatch {
                    raw: &batch.views[0],
                    anchors,
                    z: &z[0],
                    negatives: &batch.negatives,
                    g: batch.single_g.as_ref(),
                };
                let (l, g) = unsup_loss_single(&b, weighted, &obj.similarity)?;
                l_u = l;
                d_z[0].add_scaled(&g, obj.alpha)?;
            }
            _ => {
                let b = TwoViewBatch {
                    raw: [&batch.views[0], &batch.views[1]],
                    z: [&z[0], &z[1]],
                    negatives: &batch.negatives,
                    weights: batch.two_view_w.as_ref(),
                };
                let (l, [g1, g2]) = unsup_loss_multiview(&b, weighted, &obj.similarity)?;
                l_u = l;
                d_z[0].add_scaled(&g1, obj.alpha)?;
                d_z[1].add_scaled(&g2, obj.alpha)?;
            }
        }
    }

    let mut l_s = 0.0;
    if let Some(term) = obj.sup {
        let (l, d_s) = match term {
            SupTerm::SupCon => supcon_loss(&s, &batch.labels, &obj.similarity)?,
            SupTerm::Weighted(metric) => weighted_sup_loss(&s, &batch.labels, metric, &obj.similarity)?,
        };
        l_s = l;
        for (r, &row) in batch.labeled.iter().enumerate() {
            for (v, dz) in d_z.iter_mut().enumerate() {
                let src = &d_s.row(r)[v * latent..(v + 1) * latent];
                for (a, &b) in dz.row_mut(row).iter_mut().zip(src) {
                    *a += obj.beta * b;
                }
            }
        }
    }

    let breakdown = total_loss(l_c, l_u, l_s, obj.alpha, obj.beta)?;
    let caches = ModelCaches {
        encoders: enc_caches,
        classifier: Some(cls_cache),
        classified_rows: batch.labeled.clone(),
    };
    let grads = backward(
        params,
        &caches,
        &Upstream {
            d_z,
            d_y_hat: Some(d_y_hat),
        },
    )?;
    Ok((breakdown, grads))
}

/// Parameters plus everything needed to score new rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    /// Fixed `d × latent` map from raw features to anchors (single view).
    pub projection: Option<Matrix>,
    pub decision: Decision,
}

impl TrainedModel {
    /// Class probabilities for every row of `views`.
    pub fn predict(&self, views: &[Matrix]) -> Result<Matrix> {
        if views.len() < self.params.views() {
            return Err(Error::contract(format!(
                "model needs {} views, got {}",
                self.params.views(),
                views.len()
            )));
        }
        let mut s: Option<Matrix> = None;
        for v in 0..self.params.views() {
            let want = self.params.encoders[v].input_dim();
            if views[v].cols() != want {
                return Err(Error::contract(format!(
                    "view {} has {} features but the model expects {want}",
                    v + 1,
                    views[v].cols()
                )));
            }
            let (z, _) = encode(&self.params, &views[v], v + 1)?;
            s = Some(match s {
                None => z,
                Some(prev) => prev.hconcat(&z)?,
            });
        }
        let s = s.ok_or_else(|| Error::contract("model has no encoders"))?;
        Ok(classify(&self.params, &s)?.0)
    }

    /// Scores the rows `rows` of `ds`.
    pub fn evaluate(&self, ds: &Dataset, rows: &[usize]) -> Result<EvalReport> {
        let sub = ds.subset(rows);
        let y_hat = self.predict(sub.views())?;
        evaluate(&y_hat, sub.labels(), self.decision)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Means over the epoch's steps.
    pub loss: LossBreakdown,
    /// `|𝒩ᵢ|` of the epoch's batches.
    pub negative_set: usize,
    /// Negative terms per anchor in `L_u`: `2|𝒩ᵢ|` with two views.
    pub negative_terms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub trace: Vec<EpochRecord>,
    /// On the unlabeled rows.
    pub report: EvalReport,
    pub steps: usize,
}

/// Per-run weight tables over all dataset rows.
enum WeightCache {
    None,
    Single(Matrix),
    Two(TwoViewWeights),
}

fn steps_per_epoch(cfg: &TrainConfig, ds: &Dataset) -> usize {
    if let Some(s) = cfg.steps_per_epoch {
        return s;
    }
    let lab = ds.labeled_indices().len();
    let unl = ds.len() - lab;
    let per = |pool: usize, c: Count| match c {
        Count::Full => 1,
        Count::Exactly(0) => 1,
        Count::Exactly(k) => pool.div_ceil(k).max(1),
    };
    per(lab, cfg.batch.labeled).max(per(unl, cfg.batch.unlabeled))
}

/// Builds the model inputs for a plan. Without an unsupervised term only
/// the labeled rows are encoded.
fn step_batch(ds: &Dataset, plan: &BatchPlan, obj: &Objective, projection: Option<&Matrix>, cache: &WeightCache, views: usize) -> Result<StepBatch> {
    let rows: Vec<usize> = if obj.unsup.is_some() {
        plan.anchors.clone()
    } else {
        plan.labeled.iter().map(|&p| plan.anchors[p]).collect()
    };
    let xs: Vec<Matrix> = (0..views).map(|v| ds.view(v).select_rows(&rows)).collect();
    let labeled_rows: Vec<usize> = plan.labeled.iter().map(|&p| plan.anchors[p]).collect();
    let labels = ds.labels().select_rows(&labeled_rows);
    let weighted = obj.unsup == Some(UnsupTerm::Weighted);
    let (anchors, single_g, two_view_w, negatives) = if obj.unsup.is_some() {
        let anchors = match (views, projection) {
            (1, Some(p)) => Some(xs[0].matmul(p)?),
            (1, None) => Some(xs[0].clone()),
            _ => None,
        };
        let (sg, tw) = match (weighted, cache) {
            (false, _) => (None, None),
            (true, WeightCache::Single(g)) => (Some(g.select(&rows, &rows)), None),
            (true, WeightCache::Two(w)) => (None, Some(w.select(&rows))),
            // the losses weigh only the sampled pairs
            (true, WeightCache::None) => (None, None),
        };
        (anchors, sg, tw, plan.negatives.clone())
    } else {
        (None, None, None, NegativeSets::full(rows.len()))
    };
    Ok(StepBatch {
        views: xs,
        anchors,
        labels,
        labeled: (0..plan.labeled.len()).collect(),
        negatives,
        single_g,
        two_view_w,
    })
}

fn add_breakdown(acc: &mut LossBreakdown, b: &LossBreakdown) {
    acc.l_c += b.l_c;
    acc.l_u += b.l_u;
    acc.l_s += b.l_s;
    acc.j += b.j;
    acc.alpha = b.alpha;
    acc.beta = b.beta;
}

fn with_context(e: Error, epoch: usize, step: usize) -> Error {
    let at = |m: String| format!("epoch {epoch}, step {step}: {m}");
    match e {
        Error::DegenerateBatch(m) => Error::DegenerateBatch(at(m)),
        Error::Numeric(m) => Error::Numeric(at(m)),
        other => other,
    }
}

/// Trains on `ds` (labeled mask set) and evaluates on its unlabeled rows.
pub fn train(ds: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let views = match cfg.mode {
        ViewMode::Single => 1,
        ViewMode::Two => 2,
    };
    if ds.views().len() < views {
        return Err(Error::Config(format!(
            "two-view mode needs a dataset with two views, `{}` has {}",
            ds.name,
            ds.views().len()
        )));
    }
    if ds.labeled_indices().is_empty() {
        return Err(Error::Config(format!("dataset `{}` has no labeled rows", ds.name)));
    }
    let arch = cfg.architecture(ds);
    let mut master = Rng::new(seed);
    let params_seed = master.next_u64();
    let mut proj_rng = master.fork(1);
    let mut batch_rng = master.fork(2);
    let mut params = init_params(&arch, params_seed)?;
    let d0 = ds.view(0).cols();
    let projection = if views == 1 && d0 != cfg.latent_dim {
        Some(cfg.projection.build(ds.view(0), cfg.latent_dim, &mut proj_rng)?)
    } else {
        None
    };

    let metric = cfg.label_metric.resolve(ds);
    let (alpha, beta) = cfg.effective_weights();
    let obj = Objective::for_method(cfg.method, alpha, beta, metric, cfg.similarity);
    let cache = if obj.unsup == Some(UnsupTerm::Weighted) && ds.len() <= cfg.cache_weights_up_to {
        if views == 1 {
            WeightCache::Single(weight_g_table(ds.view(0), ds.view(0))?)
        } else {
            WeightCache::Two(TwoViewWeights::from_raw(ds.view(0), ds.view(1))?)
        }
    } else {
        WeightCache::None
    };
    let mut opt = OptimizerState::new(cfg.optimizer)?;
    let steps = steps_per_epoch(cfg, ds);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut total_steps = 0;
    for epoch in 0..cfg.epochs {
        let mut acc = LossBreakdown::default();
        let mut negative_set = 0;
        for step in 0..steps {
            let plan = sample_batch(ds, &cfg.batch, &mut batch_rng).map_err(|e| match e {
                Error::Contract(m) => Error::Config(m),
                other => other,
            })?;
            negative_set = plan.negative_size();
            let batch = step_batch(ds, &plan, &obj, projection.as_ref(), &cache, views)?;
            let (b, grads) = objective_and_grad(&params, &obj, &batch).map_err(|e| with_context(e, epoch, step))?;
            lars_step(&mut params, &grads, &mut opt).map_err(|e| with_context(e, epoch, step))?;
            add_breakdown(&mut acc, &b);
            total_steps += 1;
        }
        let k = steps as f64;
        acc.l_c /= k;
        acc.l_u /= k;
        acc.l_s /= k;
        acc.j /= k;
        trace.push(EpochRecord {
            epoch,
            loss: acc,
            negative_set,
            negative_terms: views * negative_set,
        });
    }
    let decision = match arch.head {
        Head::Softmax => Decision::Argmax,
        Head::Sigmoid => Decision::Threshold(cfg.threshold),
    };
    let model = TrainedModel {
        params,
        projection,
        decision,
    };
    let eval_rows = ds.unlabeled_indices();
    if eval_rows.is_empty() {
        return Err(Error::Config(format!("dataset `{}` has no unlabeled rows to evaluate", ds.name)));
    }
    let report = model.evaluate(ds, &eval_rows)?;
    Ok(TrainOutcome {
        model,
        trace,
        report,
        steps: total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_prototypes};

    fn tiny() -> Dataset {
        let protos = Matrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]).unwrap();
        let d = synth_prototypes(40, 6, &protos, 0.3, &mut Rng::new(3)).unwrap().dataset;
        split(&d, 16, &mut Rng::new(4)).unwrap()
    }

    fn quick(method: Method) -> TrainConfig {
        TrainConfig {
            method,
            epochs: 3,
            latent_dim: 4,
            encoder_hidden: alloc::vec![5],
            optimizer: LarsConfig {
                eta: 0.02,
                ..LarsConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(matches!(Method::parse("cpc"), Err(Error::Config(_))));
    }

    #[test]
    fn forced_weights() {
        assert_eq!(Method::Dnn.effective_weights(0.2, 0.01), (0.0, 0.0));
        assert_eq!(Method::HclU.effective_weights(0.2, 0.01), (0.2, 0.0));
        assert_eq!(Method::HclS.effective_weights(0.2, 0.01), (0.0, 0.01));
        assert_eq!(Method::Hcl.effective_weights(0.2, 0.01), (0.2, 0.01));
    }

    #[test]
    fn zero_weight_hcl_replays_dnn() {
        let ds = tiny();
        let mut cfg = quick(Method::Hcl);
        cfg.alpha = 0.0;
        cfg.beta = 0.0;
        let a = train(&ds, &cfg, 5).unwrap();
        let b = train(&ds, &quick(Method::Dnn), 5).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.model.params, b.model.params);
    }

    #[test]
    fn runs_are_deterministic() {
        let ds = tiny();
        let a = train(&ds, &quick(Method::Hcl), 9).unwrap();
        let b = train(&ds, &quick(Method::Hcl), 9).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.iter().all(|e| e.loss.l_u > 0.0 && e.loss.l_s > 0.0));
    }

    #[test]
    fn two_view_needs_two_views() {
        let mut cfg = quick(Method::Hcl);
        cfg.mode = ViewMode::Two;
        assert!(matches!(train(&tiny(), &cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn oversized_negative_set_is_a_config_error() {
        let mut cfg = quick(Method::HclU);
        cfg.batch.negatives = Count::Exactly(1000);
        let err = train(&tiny(), &cfg, 1).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("limit 39")), "{err}");
    }
}
