use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::Normalized;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::{dot, logsumexp};
use crate::similarity::{is_binary, label_distance, pos_weight_sigma_with, LabelMetric, SimilarityConfig};

/// Positive/negative index sets the supervised losses enumerate.
///
/// Each group contributes the mean over its ordered positive pairs `(i, j)`,
/// `i ≠ j`; the loss is the mean over groups.
#[derive(Debug, Clone, PartialEq)]
pub struct SupGroups {
    pub groups: Vec<SupGroup>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupGroup {
    /// Label index (weighted loss) or class id (SupCon).
    pub id: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl SupGroups {
    /// One group per label `a` with `|𝒫(a)| ≥ 2` and `|𝒩(a)| ≥ 1`.
    pub fn per_label(y: &Matrix) -> Result<Self> {
        check_binary(y)?;
        let mut groups = Vec::new();
        for a in 0..y.cols() {
            let (positives, negatives): (Vec<usize>, Vec<usize>) =
                (0..y.rows()).partition(|&i| y[(i, a)] == 1.0);
            if positives.len() >= 2 && !negatives.is_empty() {
                groups.push(SupGroup {
                    id: a,
                    positives,
                    negatives,
                });
            }
        }
        if groups.is_empty() {
            return Err(Error::DegenerateBatch(format!(
                "no label has at least 2 positives and 1 negative ({})",
                composition(y)
            )));
        }
        Ok(Self { groups })
    }

    /// Classes for SupCon. A single label column uses its positive class only;
    /// otherwise each distinct label vector is a class (for one-hot rows, the
    /// usual multi-class partition).
    pub fn per_class(y: &Matrix) -> Result<Self> {
        check_binary(y)?;
        if y.cols() == 1 {
            return Self::per_label(y);
        }
        let mut classes: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
        for i in 0..y.rows() {
            match classes.iter_mut().find(|(v, _)| v.as_slice() == y.row(i)) {
                Some((_, m)) => m.push(i),
                None => classes.push((y.row(i).to_vec(), alloc::vec![i])),
            }
        }
        let mut groups = Vec::new();
        for (id, (_, members)) in classes.iter().enumerate() {
            if members.len() < 2 || members.len() == y.rows() {
                continue;
            }
            let negatives = (0..y.rows()).filter(|i| !members.contains(i)).collect();
            groups.push(SupGroup {
                id,
                positives: members.clone(),
                negatives,
            });
        }
        if groups.is_empty() {
            return Err(Error::DegenerateBatch(format!(
                "no class has at least 2 members and 1 non-member ({})",
                composition(y)
            )));
        }
        Ok(Self { groups })
    }
}

fn check_binary(y: &Matrix) -> Result<()> {
    match y.as_slice().iter().position(|&v| !is_binary(v)) {
        None => Ok(()),
        Some(p) => Err(Error::contract(format!(
            "label matrix entry ({}, {}) is not binary",
            p / y.cols(),
            p % y.cols()
        ))),
    }
}

fn composition(y: &Matrix) -> String {
    let mut s = format!("n = {}, c = {}, positives per label = [", y.rows(), y.cols());
    for a in 0..y.cols() {
        let p = (0..y.rows()).filter(|&i| y[(i, a)] == 1.0).count();
        if a > 0 {
            s.push_str(", ");
        }
        s.push_str(&format!("{p}"));
    }
    s.push(']');
    s
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `d_i += c·û_k`, `d_k += c·û_i` for the pair logit `(i, k)`.
#[inline]
fn scatter(d: &mut Matrix, unit: &Matrix, i: usize, k: usize, c: f64) {
    for b in 0..d.cols() {
        d[(i, b)] += c * unit[(k, b)];
        d[(k, b)] += c * unit[(i, b)];
    }
}

/// Shared evaluator with caller-supplied pair weights: pair term
/// `−log[σᵢⱼf(Sᵢ,Sⱼ) / (σᵢⱼf(Sᵢ,Sⱼ) + Σ_k γᵢₖ f(Sᵢ,Sₖ))]`. Weights must be
/// positive.
///
/// The negative sum does not depend on `j`, so it is formed once per
/// `(group, i)` in log space and reused.
pub fn sup_loss_with_weights(
    s: &Matrix,
    groups: &SupGroups,
    sigma: impl Fn(usize, usize) -> Result<f64>,
    gamma: impl Fn(usize, usize) -> Result<f64>,
    cfg: &SimilarityConfig,
) -> Result<(f64, Matrix)> {
    let n = s.rows();
    let inv_t = 1.0 / cfg.temperature();
    let sn = Normalized::new(s);
    let logit = |i: usize, k: usize| dot(sn.unit.row(i), sn.unit.row(k)).clamp(-1.0, 1.0) * inv_t;
    // gradient w.r.t. the pair logits, scattered straight into unit rows
    let mut d_unit = Matrix::zeros(n, s.cols());
    let mut total = 0.0;
    let group_scale = 1.0 / groups.groups.len() as f64;
    let mut neg_logits = Vec::new();
    for g in &groups.groups {
        let pairs = g.positives.len() * (g.positives.len() - 1);
        let w = group_scale / pairs as f64;
        for &i in &g.positives {
            neg_logits.clear();
            for &k in &g.negatives {
                neg_logits.push(libm::log(gamma(i, k)?) + logit(i, k));
            }
            let ln_d = logsumexp(&neg_logits)?;
            let mut acc = 0.0;
            for &j in &g.positives {
                if j == i {
                    continue;
                }
                let t = libm::log(sigma(i, j)?) + logit(i, j);
                total += w * softplus(ln_d - t);
                let r = sigmoid(ln_d - t);
                acc += r;
                scatter(&mut d_unit, &sn.unit, i, j, -r * w * inv_t);
            }
            for (&k, &nl) in g.negatives.iter().zip(&neg_logits) {
                let q = libm::exp(nl - ln_d);
                scatter(&mut d_unit, &sn.unit, i, k, q * acc * w * inv_t);
            }
        }
    }
    if !total.is_finite() {
        return Err(Error::Numeric(format!("supervised contrastive loss is {total}")));
    }
    Ok((total, sn.backward(&d_unit)))
}

/// SupCon over classes from [`SupGroups::per_class`], unit pair weights.
pub fn supcon_loss(s: &Matrix, y: &Matrix, cfg: &SimilarityConfig) -> Result<(f64, Matrix)> {
    if s.rows() != y.rows() {
        return Err(Error::shape("supcon_loss", s.shape(), y.shape()));
    }
    let groups = SupGroups::per_class(y)?;
    sup_loss_with_weights(s, &groups, |_, _| Ok(1.0), |_, _| Ok(1.0), cfg)
}

/// Label-weighted supervised contrastive loss: for each label `a` with a
/// positive pair and a negative, the mean pair term with `σ = 1 − dist/c` on
/// the positive and `γ = dist` on each negative, then the mean over labels.
pub fn weighted_sup_loss(
    s: &Matrix,
    y: &Matrix,
    metric: LabelMetric,
    cfg: &SimilarityConfig,
) -> Result<(f64, Matrix)> {
    if s.rows() != y.rows() {
        return Err(Error::shape("weighted_sup_loss", s.shape(), y.shape()));
    }
    let groups = SupGroups::per_label(y)?;
    sup_loss_with_weights(
        s,
        &groups,
        |i, j| pos_weight_sigma_with(y.row(i), y.row(j), y.cols(), metric),
        |i, k| {
            let d = label_distance(y.row(i), y.row(k), metric)?;
            if d == 0 {
                return Err(Error::contract(format!(
                    "rows {i} and {k} are paired as negatives but have identical labels"
                )));
            }
            Ok(d as f64)
        },
        cfg,
    )
}

/// One ordered positive pair of a label group with its loss term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub label: usize,
    pub i: usize,
    pub j: usize,
    pub term: f64,
}

/// Every pair term of [`weighted_sup_loss`] with the groups they came from.
/// Averaging the terms within each group and then over groups gives the loss.
pub fn weighted_sup_pair_terms(
    s: &Matrix,
    y: &Matrix,
    metric: LabelMetric,
    cfg: &SimilarityConfig,
) -> Result<(SupGroups, Vec<PairTerm>)> {
    if s.rows() != y.rows() {
        return Err(Error::shape("weighted_sup_pair_terms", s.shape(), y.shape()));
    }
    let groups = SupGroups::per_label(y)?;
    let inv_t = 1.0 / cfg.temperature();
    let sn = Normalized::new(s);
    let logit = |i: usize, k: usize| dot(sn.unit.row(i), sn.unit.row(k)).clamp(-1.0, 1.0) * inv_t;
    let mut out = Vec::new();
    let mut neg_logits = Vec::new();
    for g in &groups.groups {
        for &i in &g.positives {
            neg_logits.clear();
            for &k in &g.negatives {
                let d = label_distance(y.row(i), y.row(k), metric)? as f64;
                neg_logits.push(libm::log(d) + logit(i, k));
            }
            let ln_d = logsumexp(&neg_logits)?;
            for &j in &g.positives {
                if j == i {
                    continue;
                }
                let sigma = pos_weight_sigma_with(y.row(i), y.row(j), y.cols(), metric)?;
                let t = libm::log(sigma) + logit(i, j);
                out.push(PairTerm {
                    label: g.id,
                    i,
                    j,
                    term: softplus(ln_d - t),
                });
            }
        }
    }
    Ok((groups, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn labels(rows: &[&[f64]]) -> Matrix {
        Matrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn constant(n: usize, d: usize) -> Matrix {
        Matrix::filled(n, d, 0.5)
    }

    #[test]
    fn supcon_equal_similarities_give_ln2() {
        let y = labels(&[&[1.0], &[1.0], &[0.0]]);
        let (l, _) = supcon_loss(&constant(3, 2), &y, &SimilarityConfig::default()).unwrap();
        assert!((l - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn supcon_single_class_is_degenerate() {
        let y = labels(&[&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]]);
        let err = supcon_loss(&constant(3, 2), &y, &SimilarityConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateBatch(_)));
    }

    #[test]
    fn weighted_full_distance_negative_gives_ln_1_plus_c() {
        let y = labels(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]]);
        let (l, _) = weighted_sup_loss(&constant(3, 4), &y, LabelMetric::Hamming, &SimilarityConfig::default()).unwrap();
        assert!((l - libm::log(4.0)).abs() < 1e-12);
    }

    #[test]
    fn weighted_degenerate_error_names_composition() {
        let y = labels(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        match weighted_sup_loss(&constant(3, 2), &y, LabelMetric::Hamming, &SimilarityConfig::default()) {
            Err(Error::DegenerateBatch(m)) => assert!(m.contains("[1, 1]"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_hot_weighted_equals_supcon() {
        let mut rng = Rng::new(9);
        let s = rng.normal_matrix(9, 4, 1.0);
        let y = Matrix::from_fn(9, 3, |i, j| f64::from(u8::from(i % 3 == j)));
        let cfg = SimilarityConfig::default();
        let (a, ga) = weighted_sup_loss(&s, &y, LabelMetric::Indicator, &cfg).unwrap();
        let (b, gb) = supcon_loss(&s, &y, &cfg).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(ga.sub(&gb).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn pair_terms_average_to_the_loss() {
        let mut rng = Rng::new(17);
        let s = rng.normal_matrix(9, 4, 1.0);
        let y = Matrix::from_fn(9, 3, |i, a| f64::from(u8::from((i + a) % 3 != 0)));
        let cfg = SimilarityConfig::default();
        let (loss, _) = weighted_sup_loss(&s, &y, LabelMetric::Hamming, &cfg).unwrap();
        let (groups, terms) = weighted_sup_pair_terms(&s, &y, LabelMetric::Hamming, &cfg).unwrap();
        let mut total = 0.0;
        for g in &groups.groups {
            let mine: Vec<f64> = terms.iter().filter(|t| t.label == g.id).map(|t| t.term).collect();
            assert_eq!(mine.len(), g.positives.len() * (g.positives.len() - 1));
            total += mine.iter().sum::<f64>() / mine.len() as f64;
        }
        total /= groups.groups.len() as f64;
        assert!((total - loss).abs() < 1e-12);
    }

    #[test]
    fn non_binary_labels_rejected() {
        let y = labels(&[&[1.0], &[0.5]]);
        assert!(matches!(SupGroups::per_label(&y), Err(Error::Contract(_))));
    }
}
