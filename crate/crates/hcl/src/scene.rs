//! A synthetic stand-in shaped like the Scene multi-label benchmark:
//! 2407 rows, 294 standardized features, 6 labels, about 1.07 labels per row.
//!
//! Features are the sum of the row's label centroids, a low-rank nuisance
//! term shared across labels, and isotropic noise; columns are then
//! standardized.

use hcl_core::data::Dataset;
use hcl_core::{Matrix, Result, Rng};

/// Relative label frequencies of the primary label.
const PRIMARY_WEIGHTS: [f64; 6] = [427.0, 364.0, 397.0, 433.0, 533.0, 431.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub rows: usize,
    pub features: usize,
    /// Probability that a row carries a second label.
    pub second_label_rate: f64,
    /// Scale of the label centroids.
    pub separation: f64,
    pub nuisance_rank: usize,
    pub nuisance_sd: f64,
    pub noise_sd: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            rows: 2407,
            features: 294,
            second_label_rate: 0.074,
            separation: 0.12,
            nuisance_rank: 8,
            nuisance_sd: 1.0,
            noise_sd: 1.0,
        }
    }
}

fn weighted_pick(rng: &mut Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.next_f64() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

pub fn scene_surrogate(spec: &SceneSpec, rng: &mut Rng) -> Result<Dataset> {
    let c = PRIMARY_WEIGHTS.len();
    let d = spec.features;
    let centroids = rng.normal_matrix(c, d, spec.separation);
    let loadings = rng.normal_matrix(spec.nuisance_rank.max(1), d, 1.0 / (d as f64).sqrt());
    let mut labels = Matrix::zeros(spec.rows, c);
    for i in 0..spec.rows {
        let a = weighted_pick(rng, &PRIMARY_WEIGHTS);
        labels[(i, a)] = 1.0;
        if rng.next_f64() < spec.second_label_rate {
            let mut w = PRIMARY_WEIGHTS;
            w[a] = 0.0;
            labels[(i, weighted_pick(rng, &w))] = 1.0;
        }
    }
    let mut x = labels.matmul(&centroids)?;
    if spec.nuisance_rank > 0 {
        let h = rng.normal_matrix(spec.rows, spec.nuisance_rank, spec.nuisance_sd);
        x.add_scaled(&h.matmul(&loadings)?, (d as f64).sqrt() / 4.0)?;
    }
    x.add_scaled(&rng.normal_matrix(spec.rows, d, 1.0), spec.noise_sd)?;
    Dataset::new("scene-surrogate", vec![standardize_columns(&x)], labels)
}

/// Zero mean and unit (population) variance per column; constant columns become 0.
pub fn standardize_columns(x: &Matrix) -> Matrix {
    let n = x.rows() as f64;
    let mut out = x.clone();
    for j in 0..x.cols() {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        for i in 0..x.rows() {
            out[(i, j)] = if sd > 0.0 { (x[(i, j)] - mean) / sd } else { 0.0 };
        }
    }
    out
}
