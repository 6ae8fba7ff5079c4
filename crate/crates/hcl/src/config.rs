//! Flat `key = value` run configuration.
//!
//! Every key has a default, so an empty file is a valid Scene-style run.
//! [`RunConfig::snapshot`] writes every key back out in a fixed order;
//! parsing a snapshot reproduces the configuration exactly.

use std::path::{Path, PathBuf};

use hcl_core::data::Count;
use hcl_core::projection::AnchorProjection;
use hcl_core::similarity::{LabelMetric, SimilarityConfig};
use hcl_core::train::{MetricChoice, Method, TrainConfig, ViewMode};
use hcl_core::Matrix;

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// The Scene-shaped synthetic stand-in.
    Scene,
    /// Single-label classes around Gaussian centroids.
    Prototypes,
    /// Two views of a shared latent, multi-label.
    Multiview,
    /// A manifest file naming CSV views and labels.
    Manifest(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Unsup,
    Sup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtoSpec {
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiviewSpec {
    pub rows: usize,
    pub features1: usize,
    pub features2: usize,
    pub labels: usize,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSettings {
    pub kind: BoundKind,
    pub sizes: Vec<usize>,
    pub steps: usize,
    pub lr: f64,
    pub eta: f64,
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub tolerance: f64,
    pub weighted: bool,
    pub independent: bool,
    pub channels: usize,
    pub noise_sd: f64,
    pub train_rows: usize,
    pub eval_rows: usize,
    pub eval_anchors: usize,
    /// Supervised family: one binary label vector per prototype.
    pub prototypes: Matrix,
    pub dim: usize,
    pub batch: usize,
    pub eval_batches: usize,
    pub metric: LabelMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSettings {
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
    pub modes: Vec<ViewMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfSettings {
    pub train_sizes: Vec<usize>,
    /// Sampled negatives per anchor during the train-size sweep.
    pub neg_fixed: usize,
    pub neg_sizes: Vec<usize>,
    /// Epochs per timed run in the train-size sweep.
    pub epochs: usize,
    /// Optimizer steps per timed run in the negative-size sweep.
    pub steps: usize,
    /// Timings are the minimum over this many repeats.
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DataSource,
    pub data_seed: u64,
    pub labeled: usize,
    pub scene_separation: f64,
    pub proto: ProtoSpec,
    pub multiview: MultiviewSpec,
    pub methods: Vec<Method>,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub noise: NoiseSettings,
    pub bound: BoundSettings,
    pub perf: PerfSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DataSource::Scene,
            data_seed: 0,
            labeled: 120,
            scene_separation: crate::scene::SceneSpec::default().separation,
            proto: ProtoSpec {
                rows: 2000,
                features: 64,
                classes: 10,
                noise_sd: 1.0,
            },
            multiview: MultiviewSpec {
                rows: 2000,
                features1: 24,
                features2: 16,
                labels: 4,
                noise_sd: 0.3,
            },
            methods: vec![Method::Hcl],
            train: TrainConfig {
                optimizer: hcl_core::optimizer::LarsConfig {
                    eta: 0.02,
                    ..Default::default()
                },
                projection: AnchorProjection::Principal,
                ..TrainConfig::default()
            },
            seeds: vec![0, 1, 2, 3, 4],
            out: PathBuf::from("runs"),
            noise: NoiseSettings {
                levels: vec![0.0, 0.25, 0.5, 0.75, 1.0],
                methods: vec![Method::Dnn, Method::HclU, Method::HclS, Method::Hcl],
                modes: vec![ViewMode::Single, ViewMode::Two],
            },
            bound: BoundSettings {
                kind: BoundKind::Unsup,
                sizes: vec![16, 64, 256],
                steps: 300,
                lr: 1.0,
                eta: 0.02,
                hidden: vec![32],
                latent: 8,
                tolerance: 0.05,
                weighted: true,
                independent: false,
                channels: 4,
                noise_sd: 0.5,
                train_rows: 1024,
                eval_rows: 1024,
                eval_anchors: 1024,
                // Sparse labels, mostly one per row with a few pairs, as in Scene.
                prototypes: parse_prototypes("100000;010000;001000;000100;000010;000001;110000;001100;000011")
                    .expect("default prototypes"),
                dim: 16,
                batch: 24,
                eval_batches: 8,
                metric: LabelMetric::Hamming,
            },
            perf: PerfSettings {
                train_sizes: vec![500, 1000, 1500, 2000, 2500],
                neg_fixed: 16,
                neg_sizes: vec![100, 200, 300, 400, 500],
                epochs: 20,
                steps: 20,
                repeats: 3,
            },
        }
    }
}

fn bad(key: &str, value: &str, expected: &str) -> AppError {
    AppError::Config(format!("`{key}`: expected {expected}, got `{value}`"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str, expected: &str) -> AppResult<T> {
    v.parse().map_err(|_| bad(key, v, expected))
}

fn float(key: &str, v: &str) -> AppResult<f64> {
    let x: f64 = num(key, v, "a number")?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, v, "a finite number"))
    }
}

fn list<T>(key: &str, v: &str, item: impl Fn(&str) -> AppResult<T>) -> AppResult<Vec<T>> {
    if v == "none" || v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(s.trim())).collect::<AppResult<_>>().map_err(|e| match e {
        AppError::Config(m) => AppError::Config(format!("{m} (in list `{key}`)")),
        other => other,
    })
}

fn core_err(key: &str, e: hcl_core::Error) -> AppError {
    AppError::Config(format!("`{key}`: {e}"))
}

fn boolean(key: &str, v: &str) -> AppResult<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, v, "true or false")),
    }
}

fn count(key: &str, v: &str) -> AppResult<Count> {
    Count::parse(v).map_err(|_| bad(key, v, "`full` or a non-negative integer"))
}

fn join<T: ToString>(xs: &[T]) -> String {
    if xs.is_empty() {
        "none".into()
    } else {
        xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

/// `;`-separated rows of `0`/`1` characters, e.g. `110;011`.
pub fn parse_prototypes(v: &str) -> AppResult<Matrix> {
    let rows: Vec<Vec<f64>> = v
        .split(';')
        .map(|r| {
            r.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0.0),
                    '1' => Ok(1.0),
                    _ => Err(bad("bound_prototypes", v, "rows of 0/1 separated by `;`")),
                })
                .collect()
        })
        .collect::<AppResult<_>>()?;
    Matrix::from_rows(&rows).map_err(|_| bad("bound_prototypes", v, "rows of equal length"))
}

fn format_prototypes(m: &Matrix) -> String {
    m.iter_rows()
        .map(|r| r.iter().map(|&b| if b == 1.0 { '1' } else { '0' }).collect::<String>())
        .collect::<Vec<_>>()
        .join(";")
}

fn metric_name(m: LabelMetric) -> &'static str {
    match m {
        LabelMetric::Hamming => "hamming",
        LabelMetric::Indicator => "indicator",
    }
}

fn parse_metric(key: &str, v: &str) -> AppResult<LabelMetric> {
    match v {
        "hamming" => Ok(LabelMetric::Hamming),
        "indicator" => Ok(LabelMetric::Indicator),
        _ => Err(bad(key, v, "hamming or indicator")),
    }
}

impl RunConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> AppResult<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AppError::Config(format!("line {}: expected `key = value`, got `{line}`", no + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(AppError::Config(format!("line {}: `{key}` is set twice", no + 1)));
            }
            cfg.set(key, value.trim())
                .map_err(|e| AppError::Config(format!("line {}: {}", no + 1, e.to_string().trim_start_matches("config: "))))?;
        }
        Ok(cfg)
    }

    /// Reads and parses a config file; a relative manifest path is taken
    /// relative to the config file.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let DataSource::Manifest(p) = &cfg.dataset {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.dataset = DataSource::Manifest(base.join(p));
            }
        }
        Ok(cfg)
    }

    /// Sets one key; the error names the key and the accepted form.
    pub fn set(&mut self, key: &str, v: &str) -> AppResult<()> {
        let t = &mut self.train;
        match key {
            "dataset" => {
                self.dataset = match v {
                    "scene" => DataSource::Scene,
                    "prototypes" => DataSource::Prototypes,
                    "multiview" => DataSource::Multiview,
                    "" => return Err(bad(key, v, "scene, prototypes, multiview or a manifest path")),
                    path => DataSource::Manifest(PathBuf::from(path)),
                }
            }
            "data_seed" => self.data_seed = num(key, v, "an unsigned integer")?,
            "labeled" => self.labeled = num(key, v, "a positive integer")?,
            "scene_separation" => self.scene_separation = float(key, v)?,
            "proto_rows" => self.proto.rows = num(key, v, "a positive integer")?,
            "proto_features" => self.proto.features = num(key, v, "a positive integer")?,
            "proto_classes" => self.proto.classes = num(key, v, "a positive integer")?,
            "proto_noise_sd" => self.proto.noise_sd = float(key, v)?,
            "mv_rows" => self.multiview.rows = num(key, v, "a positive integer")?,
            "mv_features1" => self.multiview.features1 = num(key, v, "a positive integer")?,
            "mv_features2" => self.multiview.features2 = num(key, v, "a positive integer")?,
            "mv_labels" => self.multiview.labels = num(key, v, "a positive integer")?,
            "mv_noise_sd" => self.multiview.noise_sd = float(key, v)?,
            "method" => {
                self.methods = list(key, v, |s| Method::parse(s).map_err(|e| core_err(key, e)))?;
                if self.methods.is_empty() {
                    return Err(bad(key, v, "at least one method"));
                }
            }
            "mode" => t.mode = ViewMode::parse(v).map_err(|e| core_err(key, e))?,
            "alpha" => t.alpha = float(key, v)?,
            "beta" => t.beta = float(key, v)?,
            "tau" => t.similarity = SimilarityConfig::new(float(key, v)?).map_err(|e| core_err(key, e))?,
            "batch_labeled" => t.batch.labeled = count(key, v)?,
            "batch_unlabeled" => t.batch.unlabeled = count(key, v)?,
            "neg_size" => t.batch.negatives = count(key, v)?,
            "epochs" => t.epochs = num(key, v, "a positive integer")?,
            "steps_per_epoch" => {
                t.steps_per_epoch = match v {
                    "auto" => None,
                    _ => Some(num(key, v, "`auto` or a positive integer")?),
                }
            }
            "seeds" => {
                self.seeds = list(key, v, |s| num(key, s, "unsigned integers"))?;
                if self.seeds.is_empty() {
                    return Err(bad(key, v, "at least one seed"));
                }
            }
            "encoder_hidden" => t.encoder_hidden = list(key, v, |s| num(key, s, "positive integers"))?,
            "latent_dim" => t.latent_dim = num(key, v, "a positive integer")?,
            "classifier_hidden" => t.classifier_hidden = list(key, v, |s| num(key, s, "positive integers"))?,
            "projection" => t.projection = AnchorProjection::parse(v).map_err(|e| core_err(key, e))?,
            "lr" => t.optimizer.base_lr = float(key, v)?,
            "momentum" => t.optimizer.momentum = float(key, v)?,
            "eta" => t.optimizer.eta = float(key, v)?,
            "weight_decay" => t.optimizer.weight_decay = float(key, v)?,
            "threshold" => t.threshold = float(key, v)?,
            "label_metric" => {
                t.label_metric = match v {
                    "auto" => MetricChoice::Auto,
                    _ => MetricChoice::Fixed(parse_metric(key, v)?),
                }
            }
            "cache_weights_up_to" => t.cache_weights_up_to = num(key, v, "an unsigned integer")?,
            "out" => {
                if v.is_empty() {
                    return Err(bad(key, v, "a directory path"));
                }
                self.out = PathBuf::from(v)
            }
            "noise_levels" => self.noise.levels = list(key, v, |s| float(key, s))?,
            "noise_methods" => self.noise.methods = list(key, v, |s| Method::parse(s).map_err(|e| core_err(key, e)))?,
            "noise_modes" => self.noise.modes = list(key, v, |s| ViewMode::parse(s).map_err(|e| core_err(key, e)))?,
            "bound_kind" => {
                self.bound.kind = match v {
                    "unsup" => BoundKind::Unsup,
                    "sup" => BoundKind::Sup,
                    _ => return Err(bad(key, v, "unsup or sup")),
                }
            }
            "bound_sizes" => self.bound.sizes = list(key, v, |s| num(key, s, "positive integers"))?,
            "bound_steps" => self.bound.steps = num(key, v, "an unsigned integer")?,
            "bound_lr" => self.bound.lr = float(key, v)?,
            "bound_eta" => self.bound.eta = float(key, v)?,
            "bound_hidden" => self.bound.hidden = list(key, v, |s| num(key, s, "positive integers"))?,
            "bound_latent" => self.bound.latent = num(key, v, "a positive integer")?,
            "bound_tolerance" => self.bound.tolerance = float(key, v)?,
            "bound_weighted" => self.bound.weighted = boolean(key, v)?,
            "bound_independent" => self.bound.independent = boolean(key, v)?,
            "bound_channels" => self.bound.channels = num(key, v, "a positive integer")?,
            "bound_noise_sd" => self.bound.noise_sd = float(key, v)?,
            "bound_train_rows" => self.bound.train_rows = num(key, v, "a positive integer")?,
            "bound_eval_rows" => self.bound.eval_rows = num(key, v, "a positive integer")?,
            "bound_eval_anchors" => self.bound.eval_anchors = num(key, v, "a positive integer")?,
            "bound_prototypes" => self.bound.prototypes = parse_prototypes(v)?,
            "bound_dim" => self.bound.dim = num(key, v, "a positive integer")?,
            "bound_batch" => self.bound.batch = num(key, v, "a positive integer")?,
            "bound_eval_batches" => self.bound.eval_batches = num(key, v, "a positive integer")?,
            "bound_metric" => self.bound.metric = parse_metric(key, v)?,
            "perf_train_sizes" => self.perf.train_sizes = list(key, v, |s| num(key, s, "positive integers"))?,
            "perf_neg_fixed" => self.perf.neg_fixed = num(key, v, "a positive integer")?,
            "perf_neg_sizes" => self.perf.neg_sizes = list(key, v, |s| num(key, s, "positive integers"))?,
            "perf_epochs" => self.perf.epochs = num(key, v, "a positive integer")?,
            "perf_steps" => self.perf.steps = num(key, v, "a positive integer")?,
            "perf_repeats" => self.perf.repeats = num(key, v, "a positive integer")?,
            _ => return Err(AppError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn snapshot(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        let b = &self.bound;
        let dataset = match &self.dataset {
            DataSource::Scene => "scene".to_string(),
            DataSource::Prototypes => "prototypes".to_string(),
            DataSource::Multiview => "multiview".to_string(),
            DataSource::Manifest(p) => p.display().to_string(),
        };
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let noise_methods: Vec<&str> = self.noise.methods.iter().map(|m| m.name()).collect();
        let noise_modes: Vec<&str> = self.noise.modes.iter().map(|m| m.name()).collect();
        vec![
            ("dataset", dataset),
            ("data_seed", self.data_seed.to_string()),
            ("labeled", self.labeled.to_string()),
            ("scene_separation", self.scene_separation.to_string()),
            ("proto_rows", self.proto.rows.to_string()),
            ("proto_features", self.proto.features.to_string()),
            ("proto_classes", self.proto.classes.to_string()),
            ("proto_noise_sd", self.proto.noise_sd.to_string()),
            ("mv_rows", self.multiview.rows.to_string()),
            ("mv_features1", self.multiview.features1.to_string()),
            ("mv_features2", self.multiview.features2.to_string()),
            ("mv_labels", self.multiview.labels.to_string()),
            ("mv_noise_sd", self.multiview.noise_sd.to_string()),
            ("method", join(&methods)),
            ("mode", t.mode.name().to_string()),
            ("alpha", t.alpha.to_string()),
            ("beta", t.beta.to_string()),
            ("tau", t.similarity.temperature().to_string()),
            ("batch_labeled", t.batch.labeled.to_string()),
            ("batch_unlabeled", t.batch.unlabeled.to_string()),
            ("neg_size", t.batch.negatives.to_string()),
            ("epochs", t.epochs.to_string()),
            ("steps_per_epoch", t.steps_per_epoch.map_or("auto".into(), |s| s.to_string())),
            ("seeds", join(&self.seeds)),
            ("encoder_hidden", join(&t.encoder_hidden)),
            ("latent_dim", t.latent_dim.to_string()),
            ("classifier_hidden", join(&t.classifier_hidden)),
            ("projection", t.projection.name().to_string()),
            ("lr", t.optimizer.base_lr.to_string()),
            ("momentum", t.optimizer.momentum.to_string()),
            ("eta", t.optimizer.eta.to_string()),
            ("weight_decay", t.optimizer.weight_decay.to_string()),
            ("threshold", t.threshold.to_string()),
            (
                "label_metric",
                match t.label_metric {
                    MetricChoice::Auto => "auto".to_string(),
                    MetricChoice::Fixed(m) => metric_name(m).to_string(),
                },
            ),
            ("cache_weights_up_to", t.cache_weights_up_to.to_string()),
            ("out", self.out.display().to_string()),
            ("noise_levels", join(&self.noise.levels)),
            ("noise_methods", join(&noise_methods)),
            ("noise_modes", join(&noise_modes)),
            (
                "bound_kind",
                match b.kind {
                    BoundKind::Unsup => "unsup",
                    BoundKind::Sup => "sup",
                }
                .to_string(),
            ),
            ("bound_sizes", join(&b.sizes)),
            ("bound_steps", b.steps.to_string()),
            ("bound_lr", b.lr.to_string()),
            ("bound_eta", b.eta.to_string()),
            ("bound_hidden", join(&b.hidden)),
            ("bound_latent", b.latent.to_string()),
            ("bound_tolerance", b.tolerance.to_string()),
            ("bound_weighted", b.weighted.to_string()),
            ("bound_independent", b.independent.to_string()),
            ("bound_channels", b.channels.to_string()),
            ("bound_noise_sd", b.noise_sd.to_string()),
            ("bound_train_rows", b.train_rows.to_string()),
            ("bound_eval_rows", b.eval_rows.to_string()),
            ("bound_eval_anchors", b.eval_anchors.to_string()),
            ("bound_prototypes", format_prototypes(&b.prototypes)),
            ("bound_dim", b.dim.to_string()),
            ("bound_batch", b.batch.to_string()),
            ("bound_eval_batches", b.eval_batches.to_string()),
            ("bound_metric", metric_name(b.metric).to_string()),
            ("perf_train_sizes", join(&self.perf.train_sizes)),
            ("perf_neg_fixed", self.perf.neg_fixed.to_string()),
            ("perf_neg_sizes", join(&self.perf.neg_sizes)),
            ("perf_epochs", self.perf.epochs.to_string()),
            ("perf_steps", self.perf.steps.to_string()),
            ("perf_repeats", self.perf.repeats.to_string()),
        ]
    }

    pub fn snapshot_text(&self) -> String {
        self.snapshot().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Launch-time checks, so no compute starts on a bad config.
    pub fn validate(&self) -> AppResult<()> {
        self.train.validate().map_err(AppError::invalid_config)?;
        if let DataSource::Manifest(p) = &self.dataset {
            if !p.is_file() {
                return Err(AppError::Config(format!("`dataset`: manifest `{}` does not exist", p.display())));
            }
        }
        if self.labeled == 0 {
            return Err(AppError::Config("`labeled`: must be positive".into()));
        }
        if self.noise.levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(AppError::Config("`noise_levels`: levels must lie in [0, 1]".into()));
        }
        if self.perf.repeats == 0 {
            return Err(AppError::Config("`perf_repeats`: must be positive".into()));
        }
        Ok(())
    }
}
