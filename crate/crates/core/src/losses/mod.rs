//! The objective and its terms, each returning the loss value together with
//! its exact gradient.
//!
//! | term | function |
//! |------|----------|
//! | `L_c` | [`cross_entropy`] |
//! | `L_u` single view | [`unsup_loss_single`] |
//! | `L_u` two views | [`unsup_loss_multiview`] |
//! | SupCon | [`supcon_loss`] |
//! | `L_s` | [`weighted_sup_loss`] |
//! | `J` | [`total_loss`] |
//!
//! Contrastive terms score pairs with `f = exp(cos/τ)` and are evaluated in
//! log space: each anchor contributes `logsumexp(candidates) − positive`.

mod ce;
mod sup;
mod unsup;

use alloc::vec::Vec;

pub use ce::cross_entropy;
pub use sup::{
    sup_loss_with_weights, supcon_loss, weighted_sup_loss, weighted_sup_pair_terms, PairTerm, SupGroup, SupGroups,
};
pub use unsup::{
    unsup_loss_multiview, unsup_loss_single, SingleViewBatch, TwoViewBatch, TwoViewWeights,
};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Scalar values of the objective and the weights used to combine them.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub l_c: f64,
    pub l_u: f64,
    pub l_s: f64,
    pub j: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `J = L_c + α·L_u + β·L_s`.
pub fn total_loss(l_c: f64, l_u: f64, l_s: f64, alpha: f64, beta: f64) -> Result<LossBreakdown> {
    if !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::contract(alloc::format!(
            "loss weights must be non-negative (alpha = {alpha}, beta = {beta})"
        )));
    }
    Ok(LossBreakdown {
        l_c,
        l_u,
        l_s,
        j: l_c + alpha * l_u + beta * l_s,
        alpha,
        beta,
    })
}

/// Per-anchor negative index sets over the rows of a batch.
#[derive(Debug, Clone, PartialEq)]
pub enum NegativeSets {
    /// `𝒩ᵢ = batch ∖ {i}` for a batch of the given size.
    Full(usize),
    /// Explicit sets; `sets[i]` never contains `i`.
    Sampled(Vec<Vec<usize>>),
}

impl NegativeSets {
    pub fn full(n: usize) -> Self {
        NegativeSets::Full(n)
    }

    /// Validates anchor exclusion, bounds and distinctness.
    pub fn sampled(sets: Vec<Vec<usize>>) -> Result<Self> {
        let n = sets.len();
        let mut seen = alloc::vec![usize::MAX; n];
        for (i, s) in sets.iter().enumerate() {
            for &k in s {
                if k >= n {
                    return Err(Error::contract(alloc::format!(
                        "negative index {k} of anchor {i} is out of range for batch of {n}"
                    )));
                }
                if k == i {
                    return Err(Error::contract(alloc::format!(
                        "anchor {i} appears in its own negative set"
                    )));
                }
                if seen[k] == i {
                    return Err(Error::contract(alloc::format!(
                        "negative index {k} repeated for anchor {i}"
                    )));
                }
                seen[k] = i;
            }
        }
        Ok(NegativeSets::Sampled(sets))
    }

    pub fn batch_len(&self) -> usize {
        match self {
            NegativeSets::Full(n) => *n,
            NegativeSets::Sampled(s) => s.len(),
        }
    }

    /// Size of `𝒩ᵢ` (index-set size, not the number of denominator terms).
    pub fn set_len(&self, i: usize) -> usize {
        match self {
            NegativeSets::Full(n) => n.saturating_sub(1),
            NegativeSets::Sampled(s) => s[i].len(),
        }
    }

    pub fn for_each(&self, i: usize, mut f: impl FnMut(usize)) {
        match self {
            NegativeSets::Full(n) => (0..*n).filter(|&k| k != i).for_each(&mut f),
            NegativeSets::Sampled(s) => s[i].iter().copied().for_each(&mut f),
        }
    }

    pub(crate) fn ensure_nonempty(&self, n: usize) -> Result<()> {
        if self.batch_len() != n {
            return Err(Error::contract(alloc::format!(
                "negative sets cover {} anchors but the batch has {n} rows",
                self.batch_len()
            )));
        }
        for i in 0..n {
            if self.set_len(i) == 0 {
                return Err(Error::contract(alloc::format!(
                    "anchor {i} has an empty negative set"
                )));
            }
        }
        Ok(())
    }
}

/// Rows normalized once, with norms kept for the backward pass.
pub(crate) struct Normalized {
    pub unit: Matrix,
    pub norms: Vec<f64>,
}

impl Normalized {
    pub fn new(m: &Matrix) -> Self {
        let (unit, norms) = m.normalized_rows();
        Self { unit, norms }
    }

    /// Gradient w.r.t. the raw rows given the gradient w.r.t. the unit rows:
    /// `(g − (g·û)û) / ‖u‖`, zero for rows treated as zero vectors.
    pub fn backward(&self, d_unit: &Matrix) -> Matrix {
        let mut out = d_unit.clone();
        for i in 0..out.rows() {
            let n = self.norms[i];
            let u = self.unit.row(i);
            let r = out.row_mut(i);
            if n < crate::numeric::NORM_EPS {
                r.iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            let proj = crate::numeric::dot(r, u);
            for (v, &uu) in r.iter_mut().zip(u) {
                *v = (*v - proj * uu) / n;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_loss_arithmetic() {
        let b = total_loss(1.0, 2.0, 3.0, 0.5, 0.1).unwrap();
        assert!((b.j - 2.3).abs() < 1e-12);
        let b = total_loss(0.7, 5.0, 9.0, 0.0, 0.0).unwrap();
        assert_eq!(b.j, 0.7);
        assert!(total_loss(1.0, 1.0, 1.0, -0.1, 0.0).is_err());
        let scene = total_loss(0.5, 1.0, 1.0, 0.2, 0.01).unwrap();
        assert!((scene.j - (0.5 + 0.2 + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn sampled_sets_validate_exclusion() {
        assert!(NegativeSets::sampled(alloc::vec![alloc::vec![1], alloc::vec![0]]).is_ok());
        assert!(NegativeSets::sampled(alloc::vec![alloc::vec![0], alloc::vec![0]]).is_err());
        assert!(NegativeSets::sampled(alloc::vec![alloc::vec![1, 1], alloc::vec![0]]).is_err());
        assert!(NegativeSets::sampled(alloc::vec![alloc::vec![2], alloc::vec![0]]).is_err());
    }
}
