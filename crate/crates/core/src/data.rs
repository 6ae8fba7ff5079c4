//! Datasets, synthetic generators, noise and view augmentation, splits and
//! batch plans.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::losses::NegativeSets;
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::similarity::is_binary;

/// Feature views sharing rows, binary labels and the labeled mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    views: Vec<Matrix>,
    labels: Matrix,
    labeled: Vec<bool>,
}

impl Dataset {
    /// Every row starts unlabeled.
    pub fn new(name: impl Into<String>, views: Vec<Matrix>, labels: Matrix) -> Result<Self> {
        if views.is_empty() || views.len() > 2 {
            return Err(Error::contract(format!("expected 1 or 2 views, got {}", views.len())));
        }
        let n = labels.rows();
        for (v, x) in views.iter().enumerate() {
            if x.rows() != n {
                return Err(Error::contract(format!(
                    "view {} has {} rows but the labels have {n}",
                    v + 1,
                    x.rows()
                )));
            }
            if !x.is_finite() {
                return Err(Error::Numeric(format!("view {} has non-finite features", v + 1)));
            }
        }
        if let Some(p) = labels.as_slice().iter().position(|&v| !is_binary(v)) {
            return Err(Error::contract(format!(
                "label at row {}, column {} is not binary",
                p / labels.cols(),
                p % labels.cols()
            )));
        }
        Ok(Self {
            name: name.into(),
            views,
            labels,
            labeled: alloc::vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.labels.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels_count(&self) -> usize {
        self.labels.cols()
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &Matrix {
        &self.views[v]
    }

    pub fn labels(&self) -> &Matrix {
        &self.labels
    }

    pub fn labeled_mask(&self) -> &[bool] {
        &self.labeled
    }

    pub fn set_labeled_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.len() {
            return Err(Error::contract(format!(
                "mask has {} entries for {} rows",
                mask.len(),
                self.len()
            )));
        }
        self.labeled = mask;
        Ok(())
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labeled[i]).collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.labeled[i]).collect()
    }

    /// Keeps only the first view.
    pub fn single_view(&self) -> Dataset {
        Dataset {
            name: self.name.clone(),
            views: alloc::vec![self.views[0].clone()],
            labels: self.labels.clone(),
            labeled: self.labeled.clone(),
        }
    }

    pub fn with_views(&self, views: Vec<Matrix>) -> Result<Dataset> {
        let mut d = Dataset::new(self.name.clone(), views, self.labels.clone())?;
        d.labeled = self.labeled.clone();
        Ok(d)
    }

    /// Rows `idx` in order; the labeled mask follows the rows.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            views: self.views.iter().map(|v| v.select_rows(idx)).collect(),
            labels: self.labels.select_rows(idx),
            labeled: idx.iter().map(|&i| self.labeled[i]).collect(),
        }
    }

    /// Mean number of positive labels per row.
    pub fn label_cardinality(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.sum() / self.len() as f64
    }

    /// True when every row has exactly one positive label.
    pub fn is_multiclass(&self) -> bool {
        self.labels.iter_rows().all(|r| r.iter().filter(|&&v| v == 1.0).count() == 1)
    }
}

/// Per-column min–max rescaling to `[0, 1]`; constant columns become 0.
pub fn rescale_columns(x: &Matrix) -> Matrix {
    let mut lo = alloc::vec![f64::INFINITY; x.cols()];
    let mut hi = alloc::vec![f64::NEG_INFINITY; x.cols()];
    for r in x.iter_rows() {
        for (j, &v) in r.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    Matrix::from_fn(x.rows(), x.cols(), |i, j| {
        let span = hi[j] - lo[j];
        if span > 0.0 {
            ((x[(i, j)] - lo[j]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    })
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::contract(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Rescales columns to `[0, 1]`, adds uniform `[0, 1)` noise to exactly
/// `round(level · entries)` uniformly chosen entries, then truncates to `[0, 1]`.
pub fn inject_noise(x: &Matrix, level: f64, rng: &mut Rng) -> Result<Matrix> {
    check_fraction("noise level", level)?;
    let mut out = rescale_columns(x);
    let total = out.as_slice().len();
    let k = libm::round(level * total as f64) as usize;
    let picked = rng.sample_indices(total, k.min(total))?;
    let data = out.as_mut_slice();
    for p in picked {
        data[p] = (data[p] + rng.next_f64()).min(1.0);
    }
    Ok(out)
}

/// Zeroes exactly `round(rate · entries)` uniformly chosen entries.
pub fn mask_features(x: &Matrix, rate: f64, rng: &mut Rng) -> Result<Matrix> {
    check_fraction("mask rate", rate)?;
    let mut out = x.clone();
    let total = out.as_slice().len();
    let k = libm::round(rate * total as f64) as usize;
    let data = out.as_mut_slice();
    for p in rng.sample_indices(total, k.min(total))? {
        data[p] = 0.0;
    }
    Ok(out)
}

/// One stochastic view transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    /// [`inject_noise`] at this level.
    Noise(f64),
    /// Column rescaling followed by [`mask_features`] at this rate.
    Mask(f64),
}

impl Augmentation {
    /// `noise:<level>` or `mask:<rate>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("augmentation `{s}` is not of the form kind:value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("augmentation `{s}` has a non-numeric value")))?;
        let aug = match kind.trim() {
            "noise" => Augmentation::Noise(v),
            "mask" => Augmentation::Mask(v),
            other => return Err(Error::Config(format!("unknown augmentation kind `{other}`"))),
        };
        let (Augmentation::Noise(f) | Augmentation::Mask(f)) = aug;
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Config(format!("augmentation `{s}` value must lie in [0, 1]")));
        }
        Ok(aug)
    }

    pub fn apply(&self, x: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        match *self {
            Augmentation::Noise(level) => inject_noise(x, level, rng),
            Augmentation::Mask(rate) => mask_features(&rescale_columns(x), rate, rng),
        }
    }
}

impl core::fmt::Display for Augmentation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Augmentation::Noise(v) => write!(f, "noise:{v}"),
            Augmentation::Mask(v) => write!(f, "mask:{v}"),
        }
    }
}

/// Two views of `x` with independent randomness.
pub fn make_views(x: &Matrix, aug_a: Augmentation, aug_b: Augmentation, rng: &mut Rng) -> Result<(Matrix, Matrix)> {
    let mut ra = rng.fork(1);
    let mut rb = rng.fork(2);
    Ok((aug_a.apply(x, &mut ra)?, aug_b.apply(x, &mut rb)?))
}

/// A generated dataset with the generative parameters kept for audits.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMultiview {
    pub dataset: Dataset,
    /// `n × k` latent points on the unit sphere.
    pub latent: Matrix,
    /// `k × d_v` linear maps; view `v` is `latent · maps[v]` plus noise.
    pub maps: [Matrix; 2],
    /// `k × c` halfspace normals.
    pub halfspaces: Matrix,
    /// Median thresholds per label.
    pub thresholds: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Latent `h` uniform on the sphere in `ℝ^{min(d1,d2)}`; each view is a
/// random Gaussian linear map of `h` plus `N(0, noise_sd²)`; label `a` is
/// `h·w_a` above its median.
pub fn synth_multiview(n: usize, d1: usize, d2: usize, c: usize, noise_sd: f64, rng: &mut Rng) -> Result<SyntheticMultiview> {
    if n < 2 || d1 == 0 || d2 == 0 || c < 2 || !(noise_sd >= 0.0) {
        return Err(Error::contract(format!(
            "synth_multiview needs n ≥ 2, positive dims, c ≥ 2, noise_sd ≥ 0 (got n={n}, d1={d1}, d2={d2}, c={c}, sd={noise_sd})"
        )));
    }
    let k = d1.min(d2);
    let mut latent = Matrix::zeros(n, k);
    for i in 0..n {
        latent.row_mut(i).copy_from_slice(&rng.unit_sphere(k));
    }
    let maps = [rng.normal_matrix(k, d1, 1.0), rng.normal_matrix(k, d2, 1.0)];
    let mut views = Vec::with_capacity(2);
    for m in &maps {
        let mut x = latent.matmul(m)?;
        if noise_sd > 0.0 {
            x.add_scaled(&rng.normal_matrix(n, m.cols(), 1.0), noise_sd)?;
        }
        views.push(x);
    }
    let halfspaces = rng.normal_matrix(k, c, 1.0);
    let scores = latent.matmul(&halfspaces)?;
    let thresholds: Vec<f64> = (0..c).map(|a| median(scores.column(a))).collect();
    let labels = Matrix::from_fn(n, c, |i, a| f64::from(u8::from(scores[(i, a)] > thresholds[a])));
    Ok(SyntheticMultiview {
        dataset: Dataset::new("synth-multiview", views, labels)?,
        latent,
        maps,
        halfspaces,
        thresholds,
    })
}

/// Random `k × k` orthogonal matrix (Gram–Schmidt on a Gaussian draw).
pub fn random_orthogonal(k: usize, rng: &mut Rng) -> Matrix {
    loop {
        let g = rng.normal_matrix(k, k, 1.0);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut ok = true;
        for i in 0..k {
            let mut v = g.row(i).to_vec();
            for b in &q {
                let p = crate::numeric::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, &y)| *x -= p * y);
            }
            let nv = crate::numeric::norm(&v);
            if nv < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            q.push(v);
        }
        if ok {
            return Matrix::from_fn(k, k, |i, j| q[i][j]);
        }
    }
}

/// Two views with an exactly known mutual information.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianViews {
    pub views: [Matrix; 2],
    /// Per-channel correlation between the views.
    pub rho: f64,
    /// `k · gaussian_mi(ρ)` nats.
    pub mutual_information: f64,
}

/// `k` independent channels `h_j ~ N(0, 1)`; view `v` is `(h + s·e_v)·Q_v`
/// with fresh noise `e_v` and a random rotation `Q_v`. The views are jointly
/// Gaussian with per-channel correlation `1/(1 + s²)`, and the rotations
/// leave the mutual information unchanged.
pub fn synth_gaussian_views(n: usize, k: usize, noise_sd: f64, rng: &mut Rng) -> Result<GaussianViews> {
    if n == 0 || k == 0 || !(noise_sd > 0.0) {
        return Err(Error::contract(format!(
            "gaussian views need n, k > 0 and noise_sd > 0 (got n={n}, k={k}, sd={noise_sd})"
        )));
    }
    let h = rng.normal_matrix(n, k, 1.0);
    let q = [random_orthogonal(k, rng), random_orthogonal(k, rng)];
    let mut view = |qv: &Matrix| -> Result<Matrix> {
        let mut x = h.clone();
        x.add_scaled(&rng.normal_matrix(n, k, 1.0), noise_sd)?;
        x.matmul(qv)
    };
    let views = [view(&q[0])?, view(&q[1])?];
    let rho = 1.0 / (1.0 + noise_sd * noise_sd);
    let mutual_information = k as f64 * crate::mi::gaussian_mi(rho)?;
    Ok(GaussianViews {
        views,
        rho,
        mutual_information,
    })
}

/// Rows drawn from labeled prototypes.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeData {
    pub dataset: Dataset,
    /// Prototype index of each row.
    pub assignment: Vec<usize>,
    /// `K × d` centroids.
    pub centroids: Matrix,
}

/// Each row picks a prototype `u` uniformly from the rows of
/// `prototype_labels` (`K × c`), takes its label vector, and has features
/// `centroid_u + N(0, noise_sd²)`, with centroids `N(0, 1)` in `ℝ^d`.
pub fn synth_prototypes(n: usize, d: usize, prototype_labels: &Matrix, noise_sd: f64, rng: &mut Rng) -> Result<PrototypeData> {
    let k = prototype_labels.rows();
    if n == 0 || d == 0 || k == 0 || !(noise_sd >= 0.0) {
        return Err(Error::contract("prototype data needs n, d, K > 0 and noise_sd ≥ 0"));
    }
    let centroids = rng.normal_matrix(k, d, 1.0);
    let assignment: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
    let mut x = centroids.select_rows(&assignment);
    if noise_sd > 0.0 {
        x.add_scaled(&rng.normal_matrix(n, d, 1.0), noise_sd)?;
    }
    let labels = prototype_labels.select_rows(&assignment);
    Ok(PrototypeData {
        dataset: Dataset::new("synth-prototypes", alloc::vec![x], labels)?,
        assignment,
        centroids,
    })
}

/// `c`-class one-hot identity prototypes.
pub fn one_hot_prototypes(c: usize) -> Matrix {
    Matrix::identity(c)
}

/// Marks `n_labeled` uniformly chosen rows as labeled.
pub fn split(ds: &Dataset, n_labeled: usize, rng: &mut Rng) -> Result<Dataset> {
    if n_labeled == 0 || n_labeled >= ds.len() {
        return Err(Error::contract(format!(
            "n_labeled must satisfy 0 < n_labeled < {}, got {n_labeled}",
            ds.len()
        )));
    }
    let mut mask = alloc::vec![false; ds.len()];
    for i in rng.sample_indices(ds.len(), n_labeled)? {
        mask[i] = true;
    }
    let mut out = ds.clone();
    out.labeled = mask;
    Ok(out)
}

/// A size that is either every available item or a fixed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Full,
    Exactly(usize),
}

impl Count {
    pub fn resolve(self, available: usize) -> usize {
        match self {
            Count::Full => available,
            Count::Exactly(k) => k,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Count::Full),
            t => t
                .parse()
                .map(Count::Exactly)
                .map_err(|_| Error::Config(format!("expected `full` or a non-negative integer, got `{t}`"))),
        }
    }
}

impl core::fmt::Display for Count {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Count::Full => f.write_str("full"),
            Count::Exactly(k) => write!(f, "{k}"),
        }
    }
}

/// Rows and negative sets for one optimization step.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    /// Dataset rows: labeled rows first, then unlabeled.
    pub anchors: Vec<usize>,
    /// Positions in `anchors` of the labeled rows (`0..labeled_count`).
    pub labeled: Vec<usize>,
    /// `𝒩ᵢ` as positions in `anchors`.
    pub negatives: NegativeSets,
    pub seed: u64,
}

impl BatchPlan {
    pub fn negative_size(&self) -> usize {
        if self.anchors.is_empty() {
            0
        } else {
            self.negatives.set_len(0)
        }
    }
}

/// Batch composition controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSpec {
    pub labeled: Count,
    pub unlabeled: Count,
    /// `|𝒩ᵢ|`; `Full` means every other anchor.
    pub negatives: Count,
}

/// Draws labeled and unlabeled rows without replacement, then `𝒩ᵢ` for every
/// anchor without replacement from the other anchors.
pub fn sample_batch(ds: &Dataset, spec: &BatchSpec, rng: &mut Rng) -> Result<BatchPlan> {
    let seed = rng.next_u64();
    let mut r = Rng::new(seed);
    let lab = ds.labeled_indices();
    let unl = ds.unlabeled_indices();
    let nl = spec.labeled.resolve(lab.len());
    let nu = spec.unlabeled.resolve(unl.len());
    if nl > lab.len() || nu > unl.len() {
        return Err(Error::contract(format!(
            "batch asks for {nl} labeled and {nu} unlabeled rows but only {} and {} exist",
            lab.len(),
            unl.len()
        )));
    }
    let pick = |pool: &[usize], k: usize, r: &mut Rng| -> Result<Vec<usize>> {
        if k == pool.len() {
            return Ok(pool.to_vec());
        }
        let mut idx = r.sample_indices(pool.len(), k)?;
        idx.sort_unstable();
        Ok(idx.into_iter().map(|i| pool[i]).collect())
    };
    let mut anchors = pick(&lab, nl, &mut r)?;
    anchors.extend(pick(&unl, nu, &mut r)?);
    let n = anchors.len();
    let limit = n.saturating_sub(1);
    let k = spec.negatives.resolve(limit);
    if k > limit {
        return Err(Error::contract(format!(
            "negative-set size {k} exceeds the limit {limit} for a batch of {n} anchors"
        )));
    }
    let negatives = if k == limit {
        NegativeSets::full(n)
    } else {
        let sets = (0..n)
            .map(|i| {
                r.sample_indices(limit, k)
                    .map(|v| v.into_iter().map(|j| if j >= i { j + 1 } else { j }).collect())
            })
            .collect::<Result<Vec<Vec<usize>>>>()?;
        NegativeSets::Sampled(sets)
    };
    Ok(BatchPlan {
        anchors,
        labeled: (0..nl).collect(),
        negatives,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let mut rng = Rng::new(1);
        let x = rng.uniform(n, 3, -2.0, 5.0).unwrap();
        let y = Matrix::from_fn(n, 2, |i, j| f64::from(u8::from((i + j) % 2 == 0)));
        Dataset::new("toy", alloc::vec![x], y).unwrap()
    }

    #[test]
    fn dataset_validation() {
        let x = Matrix::zeros(3, 2);
        assert!(Dataset::new("a", alloc::vec![x.clone()], Matrix::zeros(2, 1)).is_err());
        assert!(Dataset::new("a", alloc::vec![x.clone()], Matrix::filled(3, 1, 2.0)).is_err());
        assert!(Dataset::new("a", alloc::vec![], Matrix::zeros(3, 1)).is_err());
        assert!(Dataset::new("a", alloc::vec![x], Matrix::zeros(3, 1)).is_ok());
    }

    #[test]
    fn zero_noise_is_rescale_only() {
        let x = toy(20).view(0).clone();
        let out = inject_noise(&x, 0.0, &mut Rng::new(3)).unwrap();
        assert_eq!(out, rescale_columns(&x));
        assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn full_noise_stays_in_unit_interval() {
        let x = Rng::new(2).normal_matrix(50, 4, 3.0);
        let out = inject_noise(&x, 1.0, &mut Rng::new(3)).unwrap();
        assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(inject_noise(&x, 1.5, &mut Rng::new(3)).is_err());
    }

    #[test]
    fn view_augmentations() {
        let x = toy(10).view(0).clone();
        let (a, b) = make_views(&x, Augmentation::Noise(0.0), Augmentation::Mask(0.0), &mut Rng::new(1)).unwrap();
        assert_eq!(a, rescale_columns(&x));
        assert_eq!(b, a);
        let (m, _) = make_views(&x, Augmentation::Mask(1.0), Augmentation::Noise(0.0), &mut Rng::new(1)).unwrap();
        assert_eq!(m.max_abs(), 0.0);
        let (p, q) = make_views(&x, Augmentation::Noise(0.25), Augmentation::Noise(0.25), &mut Rng::new(1)).unwrap();
        assert_ne!(p, q);
    }

    #[test]
    fn augmentation_parsing() {
        assert_eq!(Augmentation::parse("noise:0.25").unwrap(), Augmentation::Noise(0.25));
        assert_eq!(Augmentation::parse("mask: 0.1").unwrap(), Augmentation::Mask(0.1));
        assert!(matches!(Augmentation::parse("crop:0.1"), Err(Error::Config(_))));
        assert!(Augmentation::parse("noise").is_err());
        assert!(Augmentation::parse("mask:2").is_err());
    }

    #[test]
    fn split_cases() {
        let ds = toy(10);
        let s = split(&ds, 9, &mut Rng::new(5)).unwrap();
        assert_eq!(s.unlabeled_indices().len(), 1);
        assert_eq!(split(&ds, 4, &mut Rng::new(7)).unwrap(), split(&ds, 4, &mut Rng::new(7)).unwrap());
        assert!(split(&ds, 0, &mut Rng::new(5)).is_err());
        assert!(split(&ds, 10, &mut Rng::new(5)).is_err());
    }

    #[test]
    fn forced_negatives_for_three_anchors() {
        let ds = split(&toy(3), 1, &mut Rng::new(1)).unwrap();
        let spec = BatchSpec {
            labeled: Count::Full,
            unlabeled: Count::Full,
            negatives: Count::Exactly(2),
        };
        let plan = sample_batch(&ds, &spec, &mut Rng::new(4)).unwrap();
        assert_eq!(plan.negatives, NegativeSets::full(3));
        let spec = BatchSpec {
            negatives: Count::Exactly(3),
            ..spec
        };
        let err = sample_batch(&ds, &spec, &mut Rng::new(4)).unwrap_err();
        assert!(err.to_string().contains("limit 2"));
    }

    #[test]
    fn count_parsing() {
        assert_eq!(Count::parse("full").unwrap(), Count::Full);
        assert_eq!(Count::parse(" 16 ").unwrap(), Count::Exactly(16));
        assert!(Count::parse("-1").is_err());
    }
}
