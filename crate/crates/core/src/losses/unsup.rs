use alloc::vec::Vec;

use super::{NegativeSets, Normalized};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::dot;
use crate::similarity::{g_from_units, weight_g_table, SimilarityConfig};

/// One view: the anchor of row `i` is its raw feature vector (already in the
/// embedding dimension), its positive is `z_i`, its negatives `z_k, k ∈ 𝒩ᵢ`.
#[derive(Debug, Clone, Copy)]
pub struct SingleViewBatch<'a> {
    /// Raw features the `g` weights are computed from.
    pub raw: &'a Matrix,
    /// Raw features mapped into the embedding dimension (`raw` itself when the
    /// dimensions already agree, otherwise a fixed projection of it).
    pub anchors: &'a Matrix,
    pub z: &'a Matrix,
    pub negatives: &'a NegativeSets,
    /// Precomputed `g` over batch rows; computed from `raw` when absent.
    pub g: Option<&'a Matrix>,
}

/// Two views of the same rows with shared-dimension embeddings.
#[derive(Debug, Clone, Copy)]
pub struct TwoViewBatch<'a> {
    pub raw: [&'a Matrix; 2],
    pub z: [&'a Matrix; 2],
    pub negatives: &'a NegativeSets,
    pub weights: Option<&'a TwoViewWeights>,
}

/// `g(X_{i,v}, X_{k,j})` for anchor view `v` and negative view `j`.
///
/// With unequal raw dimensions the cross-view cosine is undefined, so both
/// negatives of an anchor in view `v` use the same-view value
/// `g(X_{i,v}, X_{k,v})`.
///
/// Built either as full tables (cheap lookups, `O(n²)` memory) or lazily from
/// unit-normalized rows (each lookup a dot product). Both give identical values.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewWeights {
    store: WeightStore,
    proxy: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum WeightStore {
    // same-view tables and g(X_{i,1}, X_{k,2}) unless the proxy applies
    Tables { same: [Matrix; 2], cross: Option<Matrix> },
    Units([Matrix; 2]),
}

impl TwoViewWeights {
    pub fn from_raw(x1: &Matrix, x2: &Matrix) -> Result<Self> {
        if x1.rows() != x2.rows() {
            return Err(Error::shape("TwoViewWeights", x1.shape(), x2.shape()));
        }
        let same = [weight_g_table(x1, x1)?, weight_g_table(x2, x2)?];
        let proxy = x1.cols() != x2.cols();
        let cross = if proxy { None } else { Some(weight_g_table(x1, x2)?) };
        Ok(Self {
            store: WeightStore::Tables { same, cross },
            proxy,
        })
    }

    /// Computes each weight on demand.
    pub fn lazy(x1: &Matrix, x2: &Matrix) -> Result<Self> {
        if x1.rows() != x2.rows() {
            return Err(Error::shape("TwoViewWeights", x1.shape(), x2.shape()));
        }
        Ok(Self {
            store: WeightStore::Units([x1.normalized_rows().0, x2.normalized_rows().0]),
            proxy: x1.cols() != x2.cols(),
        })
    }

    /// Weights restricted to the rows `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let store = match &self.store {
            WeightStore::Tables { same, cross } => WeightStore::Tables {
                same: [same[0].select(idx, idx), same[1].select(idx, idx)],
                cross: cross.as_ref().map(|c| c.select(idx, idx)),
            },
            WeightStore::Units(u) => WeightStore::Units([u[0].select_rows(idx), u[1].select_rows(idx)]),
        };
        Self {
            store,
            proxy: self.proxy,
        }
    }

    pub fn uses_proxy(&self) -> bool {
        self.proxy
    }

    #[inline]
    pub fn get(&self, anchor_view: usize, neg_view: usize, i: usize, k: usize) -> f64 {
        let neg_view = if self.proxy { anchor_view } else { neg_view };
        match &self.store {
            WeightStore::Tables { same, cross } => {
                if anchor_view == neg_view {
                    return same[anchor_view][(i, k)];
                }
                let c = cross.as_ref().expect("cross table exists without the proxy");
                if anchor_view == 0 {
                    c[(i, k)]
                } else {
                    c[(k, i)]
                }
            }
            WeightStore::Units(u) => {
                // g(X_{i,2}, X_{k,1}) is the cross table at (k, i): same operands, same order
                if anchor_view == 0 || anchor_view == neg_view {
                    g_from_units(u[anchor_view].row(i), u[neg_view].row(k))
                } else {
                    g_from_units(u[0].row(k), u[1].row(i))
                }
            }
        }
    }

    pub fn rows(&self) -> usize {
        match &self.store {
            WeightStore::Tables { same, .. } => same[0].rows(),
            WeightStore::Units(u) => u[0].rows(),
        }
    }
}

enum SingleWeights<'a> {
    Off,
    Table(&'a Matrix),
    Units(Matrix),
}

impl SingleWeights<'_> {
    #[inline]
    fn get(&self, i: usize, k: usize) -> f64 {
        match self {
            SingleWeights::Off => 1.0,
            SingleWeights::Table(t) => t[(i, k)],
            SingleWeights::Units(u) => g_from_units(u.row(i), u.row(k)),
        }
    }
}

/// Accumulates one anchor's `−log(w₀e^{l₀} / Σ wₖe^{lₖ})` and turns `logits`
/// into gradient coefficients in place: `p − 1` for the positive (index 0,
/// weight 1) and `p` for each negative. Weights lie in `[1, e²]`, so
/// shifting by the largest logit alone cannot overflow.
fn weighted_anchor_term(logits: &mut [f64], weights: &[f64]) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (v, &w) in logits.iter_mut().zip(weights) {
        *v = w * libm::exp(*v - m);
        s += *v;
    }
    let term = -libm::log(logits[0] / s);
    for v in logits.iter_mut() {
        *v /= s;
    }
    logits[0] -= 1.0;
    term
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yy, &xx) in y.iter_mut().zip(x) {
        *yy += a * xx;
    }
}

/// Mean over anchors of `−log[f(Xᵢ,Zᵢ) / (f(Xᵢ,Zᵢ) + Σ_k wᵢₖ f(Xᵢ,Zₖ))]`,
/// with `wᵢₖ = g(Xᵢ,Xₖ)` when `weighted`, else 1. Returns the gradient w.r.t. `Z`.
pub fn unsup_loss_single(
    batch: &SingleViewBatch<'_>,
    weighted: bool,
    cfg: &SimilarityConfig,
) -> Result<(f64, Matrix)> {
    let SingleViewBatch {
        raw,
        anchors,
        z,
        negatives,
        g,
    } = *batch;
    let n = z.rows();
    if anchors.shape() != z.shape() {
        return Err(Error::shape("unsup_loss_single", anchors.shape(), z.shape()));
    }
    if raw.rows() != n {
        return Err(Error::shape("unsup_loss_single", raw.shape(), z.shape()));
    }
    negatives.ensure_nonempty(n)?;
    let weights = match (weighted, g) {
        (false, _) => SingleWeights::Off,
        (true, Some(t)) => {
            if t.shape() != (n, n) {
                return Err(Error::shape("unsup_loss_single weights", t.shape(), (n, n)));
            }
            SingleWeights::Table(t)
        }
        (true, None) => SingleWeights::Units(raw.normalized_rows().0),
    };

    let inv_t = 1.0 / cfg.temperature();
    let a = Normalized::new(anchors);
    let zn = Normalized::new(z);
    // full negative sets go through dense products; sampled ones pair by pair
    let dense = matches!(negatives, NegativeSets::Full(_));
    // row i of `sims` is overwritten by its gradient coefficients once read
    let mut sims = if dense { Some(a.unit.matmul_transposed(&zn.unit)?) } else { None };
    let mut d_unit = Matrix::zeros(n, z.cols());
    let mut logits = Vec::new();
    let mut w = Vec::new();
    let mut ids = Vec::new();
    let mut total = 0.0;
    let scale = 1.0 / n as f64;

    for i in 0..n {
        let ai = a.unit.row(i);
        let sim = |k: usize| {
            let c = match &sims {
                Some(s) => s[(i, k)],
                None => dot(ai, zn.unit.row(k)),
            };
            c.clamp(-1.0, 1.0) * inv_t
        };
        logits.clear();
        w.clear();
        ids.clear();
        logits.push(sim(i));
        w.push(1.0);
        ids.push(i);
        negatives.for_each(i, |k| {
            logits.push(sim(k));
            w.push(weights.get(i, k));
            ids.push(k);
        });
        total += weighted_anchor_term(&mut logits, &w);
        for (&coef, &k) in logits.iter().zip(&ids) {
            match &mut sims {
                Some(c) => c[(i, k)] = coef * inv_t * scale,
                None => axpy(d_unit.row_mut(k), coef * inv_t * scale, ai),
            }
        }
    }
    if let Some(c) = &sims {
        d_unit = c.transposed_matmul(&a.unit)?;
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::Numeric(alloc::format!("single-view loss is {loss}")));
    }
    Ok((loss, zn.backward(&d_unit)))
}

/// Symmetrized two-view loss over anchors `(i,1)` and `(i,2)`. For anchor
/// `(i,v)` the positive is `Z_{i,u}` (the other view) and the negatives are
/// both views of every `k ∈ 𝒩ᵢ`, so each anchor has `2|𝒩ᵢ|` negative terms.
pub fn unsup_loss_multiview(
    batch: &TwoViewBatch<'_>,
    weighted: bool,
    cfg: &SimilarityConfig,
) -> Result<(f64, [Matrix; 2])> {
    let TwoViewBatch {
        raw,
        z,
        negatives,
        weights,
    } = *batch;
    let n = z[0].rows();
    if n < 2 {
        return Err(Error::contract(
            "two-view contrastive loss needs at least 2 samples",
        ));
    }
    if z[0].shape() != z[1].shape() {
        return Err(Error::shape("unsup_loss_multiview", z[0].shape(), z[1].shape()));
    }
    if raw[0].rows() != n || raw[1].rows() != n {
        return Err(Error::shape("unsup_loss_multiview", raw[0].shape(), raw[1].shape()));
    }
    negatives.ensure_nonempty(n)?;
    let owned;
    let w = match (weighted, weights) {
        (false, _) => None,
        (true, Some(w)) => {
            if w.rows() != n {
                return Err(Error::shape(
                    "unsup_loss_multiview weights",
                    (w.rows(), w.rows()),
                    (n, n),
                ));
            }
            Some(w)
        }
        (true, None) => {
            owned = TwoViewWeights::lazy(raw[0], raw[1])?;
            Some(&owned)
        }
    };

    let inv_t = 1.0 / cfg.temperature();
    let zn = [Normalized::new(z[0]), Normalized::new(z[1])];
    let d = z[0].cols();
    let mut d_unit = [Matrix::zeros(n, d), Matrix::zeros(n, d)];
    let dense = matches!(negatives, NegativeSets::Full(_));
    let mut logits = Vec::new();
    let mut wts = Vec::new();
    let mut ids: Vec<(usize, usize)> = Vec::new();
    let mut total = 0.0;
    let scale = 1.0 / (2 * n) as f64;

    for v in 0..2 {
        let u = 1 - v;
        // sims[j] row i: anchor (i,v) against view j; overwritten by coefficients once read
        let mut sims = if dense {
            Some([zn[v].unit.matmul_transposed(&zn[0].unit)?, zn[v].unit.matmul_transposed(&zn[1].unit)?])
        } else {
            None
        };
        for i in 0..n {
            let anchor = zn[v].unit.row(i);
            let sim = |j: usize, k: usize| {
                let c = match &sims {
                    Some(s) => s[j][(i, k)],
                    None => dot(anchor, zn[j].unit.row(k)),
                };
                c.clamp(-1.0, 1.0) * inv_t
            };
            logits.clear();
            wts.clear();
            ids.clear();
            logits.push(sim(u, i));
            wts.push(1.0);
            ids.push((u, i));
            negatives.for_each(i, |k| {
                for j in 0..2 {
                    logits.push(sim(j, k));
                    wts.push(w.map_or(1.0, |w| w.get(v, j, i, k)));
                    ids.push((j, k));
                }
            });
            total += weighted_anchor_term(&mut logits, &wts);
            match &mut sims {
                Some(c) => {
                    for (&coef, &(j, k)) in logits.iter().zip(&ids) {
                        c[j][(i, k)] = coef * inv_t * scale;
                    }
                }
                None => {
                    let mut d_anchor = alloc::vec![0.0; d];
                    for (&coef, &(j, k)) in logits.iter().zip(&ids) {
                        let c = coef * inv_t * scale;
                        axpy(&mut d_anchor, c, zn[j].unit.row(k));
                        axpy(d_unit[j].row_mut(k), c, anchor);
                    }
                    axpy(d_unit[v].row_mut(i), 1.0, &d_anchor);
                }
            }
        }
        if let Some(c) = &sims {
            for j in 0..2 {
                d_unit[v].add_scaled(&c[j].matmul(&zn[j].unit)?, 1.0)?;
                d_unit[j].add_scaled(&c[j].transposed_matmul(&zn[v].unit)?, 1.0)?;
            }
        }
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::Numeric(alloc::format!("two-view loss is {loss}")));
    }
    let [d0, d1] = d_unit;
    Ok((loss, [zn[0].backward(&d0), zn[1].backward(&d1)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn same_rows(n: usize, v: &[f64]) -> Matrix {
        Matrix::from_fn(n, v.len(), |_, j| v[j])
    }

    fn complement_sets(n: usize) -> NegativeSets {
        NegativeSets::Sampled((0..n).map(|i| (0..n).filter(|&k| k != i).collect()).collect())
    }

    #[test]
    fn dense_and_pairwise_paths_agree() {
        let mut rng = Rng::new(31);
        let cfg = SimilarityConfig::default();
        let (full, listed) = (NegativeSets::full(9), complement_sets(9));
        let raw = rng.normal_matrix(9, 5, 1.0);
        let anchors = rng.normal_matrix(9, 3, 1.0);
        let z = rng.normal_matrix(9, 3, 1.0);
        for weighted in [false, true] {
            let run = |negatives| {
                let b = SingleViewBatch { raw: &raw, anchors: &anchors, z: &z, negatives, g: None };
                unsup_loss_single(&b, weighted, &cfg).unwrap()
            };
            let ((l1, g1), (l2, g2)) = (run(&full), run(&listed));
            assert!((l1 - l2).abs() < 1e-12 && g1.sub(&g2).unwrap().max_abs() < 1e-12);
        }
        let raw2 = rng.normal_matrix(9, 4, 1.0);
        let z2 = rng.normal_matrix(9, 3, 1.0);
        for weighted in [false, true] {
            let run = |negatives| {
                let b = TwoViewBatch { raw: [&raw, &raw2], z: [&z, &z2], negatives, weights: None };
                unsup_loss_multiview(&b, weighted, &cfg).unwrap()
            };
            let ((l1, [a1, b1]), (l2, [a2, b2])) = (run(&full), run(&listed));
            assert!((l1 - l2).abs() < 1e-12);
            assert!(a1.sub(&a2).unwrap().max_abs() < 1e-12 && b1.sub(&b2).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn lazy_weights_match_tables_exactly() {
        let mut rng = Rng::new(9);
        for d2 in [3, 5] {
            let x1 = rng.normal_matrix(7, 3, 1.0);
            let x2 = rng.normal_matrix(7, d2, 1.0);
            let t = TwoViewWeights::from_raw(&x1, &x2).unwrap();
            let l = TwoViewWeights::lazy(&x1, &x2).unwrap();
            let idx = [4, 1, 6];
            let (ts, ls) = (t.select(&idx), l.select(&idx));
            for (v, j, i, k) in all_lookups(2, 7) {
                assert_eq!(t.get(v, j, i, k).to_bits(), l.get(v, j, i, k).to_bits());
                if i < 3 && k < 3 {
                    assert_eq!(ts.get(v, j, i, k).to_bits(), ls.get(v, j, i, k).to_bits());
                }
            }
        }
        let x = rng.normal_matrix(6, 4, 1.0);
        let z = rng.normal_matrix(6, 4, 1.0);
        let negs = NegativeSets::full(6);
        let table = weight_g_table(&x, &x).unwrap();
        let with = |g| SingleViewBatch {
            raw: &x,
            anchors: &x,
            z: &z,
            negatives: &negs,
            g,
        };
        let cfg = SimilarityConfig::default();
        let (a, ga) = unsup_loss_single(&with(Some(&table)), true, &cfg).unwrap();
        let (b, gb) = unsup_loss_single(&with(None), true, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(ga, gb);
    }

    fn all_lookups(views: usize, n: usize) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for v in 0..views {
            for j in 0..views {
                for i in 0..n {
                    for k in 0..n {
                        out.push((v, j, i, k));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn equal_similarities_give_ln2() {
        let x = same_rows(2, &[0.3, 0.4]);
        let negs = NegativeSets::full(2);
        let b = SingleViewBatch {
            raw: &x,
            anchors: &x,
            z: &x,
            negatives: &negs,
            g: None,
        };
        let (l, _) = unsup_loss_single(&b, false, &SimilarityConfig::default()).unwrap();
        assert!((l - core::f64::consts::LN_2).abs() < 1e-12);
        // g ≡ 1 on identical raw rows
        let (lw, _) = unsup_loss_single(&b, true, &SimilarityConfig::default()).unwrap();
        assert!((lw - l).abs() < 1e-12);
    }

    #[test]
    fn single_view_rejects_bad_inputs() {
        let x = Rng::new(1).uniform(3, 2, -1.0, 1.0).unwrap();
        let z = Rng::new(2).uniform(3, 4, -1.0, 1.0).unwrap();
        let negs = NegativeSets::full(3);
        let b = SingleViewBatch {
            raw: &x,
            anchors: &x,
            z: &z,
            negatives: &negs,
            g: None,
        };
        assert!(matches!(
            unsup_loss_single(&b, false, &SimilarityConfig::default()),
            Err(Error::Shape { .. })
        ));
        let empty = NegativeSets::sampled(alloc::vec![alloc::vec![], alloc::vec![], alloc::vec![]]).unwrap();
        let b = SingleViewBatch {
            raw: &x,
            anchors: &x,
            z: &x,
            negatives: &empty,
            g: None,
        };
        assert!(matches!(
            unsup_loss_single(&b, false, &SimilarityConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn two_equal_samples_give_ln3() {
        let z = same_rows(2, &[0.6, 0.8]);
        let negs = NegativeSets::full(2);
        let b = TwoViewBatch {
            raw: [&z, &z],
            z: [&z, &z],
            negatives: &negs,
            weights: None,
        };
        let (l, _) = unsup_loss_multiview(&b, false, &SimilarityConfig::default()).unwrap();
        assert!((l - libm::log(3.0)).abs() < 1e-12);
    }

    #[test]
    fn two_view_needs_two_samples() {
        let z = same_rows(1, &[1.0]);
        let negs = NegativeSets::full(1);
        let b = TwoViewBatch {
            raw: [&z, &z],
            z: [&z, &z],
            negatives: &negs,
            weights: None,
        };
        assert!(unsup_loss_multiview(&b, false, &SimilarityConfig::default()).is_err());
    }

    #[test]
    fn proxy_weights_for_unequal_dims() {
        let mut rng = Rng::new(5);
        let x1 = rng.uniform(4, 3, -1.0, 1.0).unwrap();
        let x2 = rng.uniform(4, 5, -1.0, 1.0).unwrap();
        let w = TwoViewWeights::from_raw(&x1, &x2).unwrap();
        assert!(w.uses_proxy());
        assert_eq!(w.get(0, 1, 1, 2), w.get(0, 0, 1, 2));
        assert_eq!(w.get(1, 0, 1, 2), w.get(1, 1, 1, 2));
        let w = TwoViewWeights::from_raw(&x1, &x1.scale(2.0)).unwrap();
        assert!(!w.uses_proxy());
        assert!((w.get(1, 0, 2, 1) - w.get(0, 1, 1, 2)).abs() < 1e-15);
    }
}
