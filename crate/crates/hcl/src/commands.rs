//! The subcommands. Each validates its whole config before any compute and
//! writes its tables atomically under `cfg.out`.

use std::path::Path;
use std::time::Instant;

use hcl_core::bounds::{
    check_sup_bound, check_unsup_bound, BoundTraining, GaussianFamily, PrototypeFamily, SupBoundSpec, UnsupBoundSpec,
};
use hcl_core::data::{split, BatchSpec, Count, Dataset};
use hcl_core::metrics::{mean_std, summarize, EvalReport, MeanStd};
use hcl_core::mi::BoundReport;
use hcl_core::optimizer::LarsConfig;
use hcl_core::train::{train, Method, TrainConfig, ViewMode};
use hcl_core::Rng;

use crate::checkpoint::Checkpoint;
use crate::config::{BoundKind, RunConfig};
use crate::datasets::{base_dataset, build_dataset, noisy_views};
use crate::error::{AppError, AppResult};
use crate::fit::{poly_fit, PolyFit};
use crate::io::{sha256_hex, write_atomic};
use crate::record::{metrics_csv, trace_csv, RunRecord};

fn method_config(cfg: &RunConfig, method: Method) -> AppResult<TrainConfig> {
    let mut t = cfg.train.clone();
    t.method = method;
    t.validate().map_err(AppError::invalid_config)?;
    Ok(t)
}

fn write_text(path: &Path, text: &str) -> AppResult<String> {
    write_atomic(path, text.as_bytes())?;
    Ok(sha256_hex(text.as_bytes()))
}

fn summary_csv(groups: &[(String, Vec<u64>, Vec<EvalReport>)]) -> AppResult<String> {
    let mut s = String::from("group,runs,f1_micro_mean,f1_micro_std,auc_macro_mean,auc_macro_std\n");
    for (name, seeds, reports) in groups {
        let r = summarize(seeds, reports)?;
        s.push_str(&format!(
            "{name},{},{},{},{},{}\n",
            seeds.len(),
            r.f1.mean,
            r.f1.std,
            r.auc.mean,
            r.auc.std
        ));
    }
    Ok(s)
}

/// Trains every configured method for every seed on one dataset.
///
/// Layout: `<out>/<method>-seed<seed>/{record.json, checkpoint.json,
/// trace.csv, metrics.csv}` per run, plus `<out>/metrics.csv`,
/// `<out>/summary.csv` and `<out>/config.txt`.
pub fn cmd_train(cfg: &RunConfig) -> AppResult<Vec<RunRecord>> {
    cfg.validate()?;
    let configs = cfg
        .methods
        .iter()
        .map(|&m| method_config(cfg, m).map(|t| (m, t)))
        .collect::<AppResult<Vec<_>>>()?;
    let ds = build_dataset(cfg)?;
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for (method, tc) in configs {
        let mut reports = Vec::new();
        for &seed in &cfg.seeds {
            let start = Instant::now();
            let out = train(&ds, &tc, seed)?;
            let secs = start.elapsed().as_secs_f64();
            let single = RunConfig {
                methods: vec![method],
                seeds: vec![seed],
                ..cfg.clone()
            };
            let mut rec = RunRecord::new(&single, method.name(), seed, &out, secs);
            let dir = cfg.out.join(format!("{}-seed{seed}", method.name()));
            let ck = Checkpoint {
                method: method.name().into(),
                seed,
                model: out.model,
            };
            for (file, text) in [
                ("checkpoint.json", ck.to_json()),
                ("trace.csv", trace_csv(&rec.trace)),
                ("metrics.csv", metrics_csv(std::slice::from_ref(&rec))),
            ] {
                let sum = write_text(&dir.join(file), &text)?;
                rec.checksums.insert(file.into(), sum);
            }
            let json = serde_json::to_string_pretty(&rec).expect("record serializes");
            write_text(&dir.join("record.json"), &json)?;
            reports.push(out.report);
            records.push(rec);
        }
        groups.push((method.name().to_string(), cfg.seeds.clone(), reports));
    }
    write_text(&cfg.out.join("metrics.csv"), &metrics_csv(&records))?;
    write_text(&cfg.out.join("summary.csv"), &summary_csv(&groups)?)?;
    write_text(&cfg.out.join("config.txt"), &cfg.snapshot_text())?;
    Ok(records)
}

/// Scores a checkpoint on the unlabeled rows of the configured split.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path) -> AppResult<EvalReport> {
    cfg.validate()?;
    let ck = Checkpoint::load(checkpoint)?;
    let ds = build_dataset(cfg)?;
    let rows = ds.unlabeled_indices();
    Ok(ck.model.evaluate(&ds, &rows)?)
}

fn bound_training(cfg: &RunConfig) -> BoundTraining {
    let b = &cfg.bound;
    BoundTraining {
        hidden: b.hidden.clone(),
        latent_dim: b.latent,
        steps: b.steps,
        optimizer: LarsConfig {
            base_lr: b.lr,
            eta: b.eta,
            momentum: cfg.train.optimizer.momentum,
            weight_decay: 0.0,
        },
        similarity: cfg.train.similarity,
        tolerance: b.tolerance,
    }
}

pub fn unsup_bound_spec(cfg: &RunConfig) -> UnsupBoundSpec {
    let b = &cfg.bound;
    UnsupBoundSpec {
        family: GaussianFamily {
            channels: b.channels,
            noise_sd: b.noise_sd,
            train_rows: b.train_rows,
            eval_rows: b.eval_rows,
            independent: b.independent,
        },
        training: bound_training(cfg),
        weighted: b.weighted,
        eval_anchors: b.eval_anchors,
    }
}

pub fn sup_bound_spec(cfg: &RunConfig) -> SupBoundSpec {
    let b = &cfg.bound;
    SupBoundSpec {
        family: PrototypeFamily {
            prototype_labels: b.prototypes.clone(),
            dim: b.dim,
            noise_sd: b.noise_sd,
            train_rows: b.train_rows,
            eval_rows: b.eval_rows,
        },
        training: bound_training(cfg),
        metric: b.metric,
        batch: b.batch,
        eval_batches: b.eval_batches,
    }
}

pub fn bounds_csv(kind: BoundKind, reports: &[BoundReport]) -> String {
    let loss = match kind {
        BoundKind::Unsup => "l_u",
        BoundKind::Sup => "l_s",
    };
    let mut s = format!("size,terms,stratum,seed,{loss},bound,reference_mi,gap,tolerance,satisfied,failure\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.size,
            r.terms,
            r.stratum.map_or(String::new(), |e| e.to_string()),
            r.seed,
            r.loss,
            r.bound,
            r.reference_mi,
            r.gap,
            r.tolerance,
            r.satisfied,
            r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        ));
    }
    s
}

/// Runs the configured bound harness and writes `<out>/bounds.csv`.
pub fn cmd_bound_check(cfg: &RunConfig) -> AppResult<Vec<BoundReport>> {
    cfg.validate()?;
    let reports = match cfg.bound.kind {
        BoundKind::Unsup => {
            if cfg.bound.sizes.is_empty() {
                return Err(AppError::Config("`bound_sizes`: at least one size is required".into()));
            }
            check_unsup_bound(&unsup_bound_spec(cfg), &cfg.bound.sizes, &cfg.seeds)?
        }
        BoundKind::Sup => check_sup_bound(&sup_bound_spec(cfg), &cfg.seeds)?,
    };
    write_text(&cfg.out.join("bounds.csv"), &bounds_csv(cfg.bound.kind, &reports))?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub level: f64,
    pub mode: ViewMode,
    pub method: Method,
    pub seed: u64,
    pub report: EvalReport,
}

/// Trains every (level, mode, method, seed) combination. Both views at a
/// level carry independent noise; single-view runs see the first view only.
/// Writes `<out>/noise.csv` and `<out>/noise_summary.csv`.
pub fn cmd_noise_sweep(cfg: &RunConfig) -> AppResult<Vec<NoiseRow>> {
    cfg.validate()?;
    let mut plans = Vec::new();
    for &mode in &cfg.noise.modes {
        for &method in &cfg.noise.methods {
            let mut t = method_config(cfg, method)?;
            t.mode = mode;
            plans.push((mode, method, t));
        }
    }
    let base = build_dataset(cfg)?;
    let mut rows = Vec::new();
    for &level in &cfg.noise.levels {
        let two = noisy_views(&base, level, cfg.data_seed)?;
        for (mode, method, t) in &plans {
            let ds = match mode {
                ViewMode::Single => two.single_view(),
                ViewMode::Two => two.clone(),
            };
            for &seed in &cfg.seeds {
                let out = train(&ds, t, seed)?;
                rows.push(NoiseRow {
                    level,
                    mode: *mode,
                    method: *method,
                    seed,
                    report: out.report,
                });
            }
        }
    }
    let mut s = String::from("level,mode,method,seed,f1_micro,auc_macro\n");
    for r in &rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.level,
            r.mode.name(),
            r.method.name(),
            r.seed,
            r.report.f1,
            r.report.auc
        ));
    }
    write_text(&cfg.out.join("noise.csv"), &s)?;
    let mut summary = String::from("level,mode,method,f1_micro_mean,f1_micro_std,auc_macro_mean,auc_macro_std\n");
    for &level in &cfg.noise.levels {
        for (mode, method, _) in &plans {
            let pick: Vec<&NoiseRow> =
                rows.iter().filter(|r| r.level == level && r.mode == *mode && r.method == *method).collect();
            let f1 = mean_std(&pick.iter().map(|r| r.report.f1).collect::<Vec<_>>())?;
            let auc = mean_std(&pick.iter().map(|r| r.report.auc).collect::<Vec<_>>())?;
            summary.push_str(&format!(
                "{level},{},{},{},{},{},{}\n",
                mode.name(),
                method.name(),
                f1.mean,
                f1.std,
                auc.mean,
                auc.std
            ));
        }
    }
    write_text(&cfg.out.join("noise_summary.csv"), &summary)?;
    Ok(rows)
}

/// Mean F1 of the matching noise-sweep rows.
pub fn noise_mean_f1(rows: &[NoiseRow], level: f64, mode: ViewMode, method: Method) -> AppResult<MeanStd> {
    let f1: Vec<f64> = rows
        .iter()
        .filter(|r| r.level == level && r.mode == mode && r.method == method)
        .map(|r| r.report.f1)
        .collect();
    Ok(mean_std(&f1)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfReport {
    /// `(rows, seconds)` of the train-size sweep.
    pub train_size: Vec<(usize, f64)>,
    /// `(|𝒩|, seconds)` of the negative-size sweep.
    pub neg_size: Vec<(usize, f64)>,
    pub linear: PolyFit,
    pub quadratic: PolyFit,
}

fn time_min(repeats: usize, ds: &Dataset, tc: &TrainConfig, seed: u64) -> AppResult<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        train(ds, tc, seed)?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Wall-clock sweeps with the first configured method and seed.
///
/// Train size: the first `T` rows of a fixed shuffle, `labeled` of them
/// labeled, the configured batch sizes, `perf_neg_fixed` sampled negatives
/// and lazily computed weights, for `perf_epochs` epochs. Every epoch visits
/// each row a fixed number of times, so time grows linearly in `T`.
///
/// Negative size: batches of `|𝒩| + 1` rows (a tenth labeled) whose
/// negative sets are the whole batch complement, for `perf_steps` steps.
/// Each step compares all pairs in the batch.
///
/// Writes `<out>/perf.csv` and `<out>/perf_fits.csv`.
pub fn cmd_perf_sweep(cfg: &RunConfig) -> AppResult<PerfReport> {
    cfg.validate()?;
    let p = &cfg.perf;
    let method = cfg.methods[0];
    let seed = cfg.seeds[0];
    let base_tc = method_config(cfg, method)?;
    let base = base_dataset(cfg)?;
    let largest = p.train_sizes.iter().chain(p.neg_sizes.iter().map(|k| k)).copied().max().unwrap_or(0);
    if largest + 1 > base.len() {
        return Err(AppError::Config(format!(
            "perf sweep needs {} rows but the dataset has {}",
            largest + 1,
            base.len()
        )));
    }
    let mut order: Vec<usize> = (0..base.len()).collect();
    Rng::new(cfg.data_seed).fork(3).shuffle(&mut order);

    let mut train_size = Vec::new();
    for &t in &p.train_sizes {
        if cfg.labeled >= t {
            return Err(AppError::Config(format!("`perf_train_sizes`: {t} rows cannot hold {} labeled", cfg.labeled)));
        }
        let ds = split(&base.subset(&order[..t]), cfg.labeled, &mut Rng::new(cfg.data_seed).fork(2))?;
        let mut tc = base_tc.clone();
        tc.batch.negatives = Count::Exactly(p.neg_fixed);
        tc.cache_weights_up_to = 0;
        tc.epochs = p.epochs;
        train_size.push((t, time_min(p.repeats, &ds, &tc, seed)?));
    }

    let mut neg_size = Vec::new();
    let pool = base.subset(&order);
    for &k in &p.neg_sizes {
        let batch = k + 1;
        let labeled = (batch / 10).max(1);
        let ds = split(&pool, labeled.max(cfg.labeled.min(pool.len() - batch)), &mut Rng::new(cfg.data_seed).fork(2))?;
        let mut tc = base_tc.clone();
        tc.batch = BatchSpec {
            labeled: Count::Exactly(labeled),
            unlabeled: Count::Exactly(batch - labeled),
            negatives: Count::Full,
        };
        tc.cache_weights_up_to = 0;
        tc.epochs = 1;
        tc.steps_per_epoch = Some(p.steps);
        neg_size.push((k, time_min(p.repeats, &ds, &tc, seed)?));
    }

    let xs = |v: &[(usize, f64)]| v.iter().map(|&(x, _)| x as f64).collect::<Vec<_>>();
    let ys = |v: &[(usize, f64)]| v.iter().map(|&(_, y)| y).collect::<Vec<_>>();
    let linear = poly_fit(&xs(&train_size), &ys(&train_size), 1)?;
    let quadratic = poly_fit(&xs(&neg_size), &ys(&neg_size), 2)?;

    let mut s = String::from("sweep,size,seconds\n");
    for &(x, y) in &train_size {
        s.push_str(&format!("train_size,{x},{y}\n"));
    }
    for &(x, y) in &neg_size {
        s.push_str(&format!("neg_size,{x},{y}\n"));
    }
    write_text(&cfg.out.join("perf.csv"), &s)?;
    let coef = |f: &PolyFit| f.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
    let fits = format!(
        "sweep,degree,r_squared,coefficients\ntrain_size,1,{},{}\nneg_size,2,{},{}\n",
        linear.r_squared,
        coef(&linear),
        quadratic.r_squared,
        coef(&quadratic)
    );
    write_text(&cfg.out.join("perf_fits.csv"), &fits)?;
    Ok(PerfReport {
        train_size,
        neg_size,
        linear,
        quadratic,
    })
}
