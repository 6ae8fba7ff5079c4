//! Builds the labeled/unlabeled dataset a config describes.

use hcl_core::data::{inject_noise, one_hot_prototypes, split, synth_multiview, synth_prototypes, Dataset};
use hcl_core::Rng;

use crate::config::{DataSource, RunConfig};
use crate::error::{AppError, AppResult};
use crate::io::load_manifest;
use crate::scene::{scene_surrogate, SceneSpec};

/// The full dataset before the labeled split. Synthetic sources draw from
/// `data_seed`.
pub fn base_dataset(cfg: &RunConfig) -> AppResult<Dataset> {
    let mut rng = Rng::new(cfg.data_seed).fork(1);
    Ok(match &cfg.dataset {
        DataSource::Scene => scene_surrogate(
            &SceneSpec {
                separation: cfg.scene_separation,
                ..SceneSpec::default()
            },
            &mut rng,
        )?,
        DataSource::Prototypes => {
            let p = &cfg.proto;
            synth_prototypes(p.rows, p.features, &one_hot_prototypes(p.classes), p.noise_sd, &mut rng)?.dataset
        }
        DataSource::Multiview => {
            let m = &cfg.multiview;
            synth_multiview(m.rows, m.features1, m.features2, m.labels, m.noise_sd, &mut rng)?.dataset
        }
        DataSource::Manifest(path) => load_manifest(path)?,
    })
}

/// Marks `cfg.labeled` rows as labeled, chosen from `data_seed`.
pub fn with_split(cfg: &RunConfig, ds: &Dataset) -> AppResult<Dataset> {
    if cfg.labeled >= ds.len() {
        return Err(AppError::Config(format!(
            "`labeled`: {} labeled rows leave none of the {} rows for evaluation",
            cfg.labeled,
            ds.len()
        )));
    }
    Ok(split(ds, cfg.labeled, &mut Rng::new(cfg.data_seed).fork(2))?)
}

pub fn build_dataset(cfg: &RunConfig) -> AppResult<Dataset> {
    with_split(cfg, &base_dataset(cfg)?)
}

/// Two noisy copies of the first view at `level`, with independent noise.
/// The single-view variant of a noise study uses the first copy alone.
pub fn noisy_views(ds: &Dataset, level: f64, data_seed: u64) -> AppResult<Dataset> {
    let mut master = Rng::new(data_seed);
    let x = ds.view(0);
    let a = inject_noise(x, level, &mut master.fork(10))?;
    let b = inject_noise(x, level, &mut master.fork(11))?;
    Ok(ds.with_views(vec![a, b])?)
}
