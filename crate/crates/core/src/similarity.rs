//! Pair kernels and label-distance weights.
//!
//! * `f(u, v) = exp(cos(u, v) / τ)` scores embedding pairs.
//! * `g(x, y) = exp(1 − cos(x, y))` down-weights negatives whose raw inputs
//!   already look alike; it ranges over `[1, e²]`.
//! * `σ = 1 − hamming/c` weights a positive label pair, `γ = hamming` a
//!   negative one.

use alloc::format;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::cosine;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    temperature: f64,
}

impl SimilarityConfig {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::Config(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        Ok(Self { temperature })
    }

    #[inline]
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self { temperature: 1.0 }
    }
}

/// How label vectors are compared for the supervised weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMetric {
    /// Count of differing positions.
    #[default]
    Hamming,
    /// 0 for identical vectors, 1 otherwise. Used on one-hot (multi-class)
    /// labels, where it turns the weighted supervised loss into SupCon.
    Indicator,
}

pub fn sim_f(u: &[f64], v: &[f64], cfg: &SimilarityConfig) -> Result<f64> {
    Ok(libm::exp(cosine(u, v)? / cfg.temperature))
}

pub fn weight_g(x_anchor: &[f64], x_neg: &[f64]) -> Result<f64> {
    Ok(libm::exp(1.0 - cosine(x_anchor, x_neg)?))
}

pub fn hamming(y1: &[f64], y2: &[f64]) -> Result<usize> {
    if y1.len() != y2.len() {
        return Err(Error::shape("hamming", (1, y1.len()), (1, y2.len())));
    }
    let mut d = 0;
    for (pos, (&a, &b)) in y1.iter().zip(y2).enumerate() {
        if !is_binary(a) || !is_binary(b) {
            return Err(Error::contract(format!(
                "label entry at position {pos} is not binary ({a}, {b})"
            )));
        }
        if a != b {
            d += 1;
        }
    }
    Ok(d)
}

#[inline]
pub(crate) fn is_binary(v: f64) -> bool {
    v == 0.0 || v == 1.0
}

pub fn label_distance(y1: &[f64], y2: &[f64], metric: LabelMetric) -> Result<usize> {
    let h = hamming(y1, y2)?;
    Ok(match metric {
        LabelMetric::Hamming => h,
        LabelMetric::Indicator => usize::from(h > 0),
    })
}

/// `σ = 1 − dist/c` for a positive pair.
pub fn pos_weight_sigma(y1: &[f64], y2: &[f64], c: usize) -> Result<f64> {
    pos_weight_sigma_with(y1, y2, c, LabelMetric::Hamming)
}

pub fn pos_weight_sigma_with(y1: &[f64], y2: &[f64], c: usize, metric: LabelMetric) -> Result<f64> {
    if c == 0 || y1.len() != c {
        return Err(Error::shape("pos_weight_sigma", (1, y1.len()), (1, c)));
    }
    let d = label_distance(y1, y2, metric)?;
    // integer numerator: d = c − 1 gives exactly 1/c
    Ok(c.saturating_sub(d) as f64 / c as f64)
}

/// `γ = dist` for a negative pair. Zero distance means the caller paired two
/// identical label vectors as negatives.
pub fn neg_weight_gamma(y1: &[f64], y2: &[f64]) -> Result<f64> {
    neg_weight_gamma_with(y1, y2, LabelMetric::Hamming)
}

pub fn neg_weight_gamma_with(y1: &[f64], y2: &[f64], metric: LabelMetric) -> Result<f64> {
    let d = label_distance(y1, y2, metric)?;
    if d == 0 {
        return Err(Error::contract(
            "negative pair has identical label vectors (distance 0)",
        ));
    }
    Ok(d as f64)
}

/// `g` for every (row of `a`, row of `b`) pair, via one normalized product.
pub fn weight_g_table(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::shape("weight_g_table", a.shape(), b.shape()));
    }
    let (an, _) = a.normalized_rows();
    let (bn, _) = b.normalized_rows();
    // zero rows normalize to zero, so cos = 0 as in `cosine`
    Ok(Matrix::from_fn(a.rows(), b.rows(), |i, k| g_from_units(an.row(i), bn.row(k))))
}

/// `g` from unit-normalized rows; bit-identical to the table entries.
#[inline]
pub(crate) fn g_from_units(u: &[f64], v: &[f64]) -> f64 {
    libm::exp(1.0 - crate::numeric::dot(u, v).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use core::f64::consts::E;

    fn cfg(t: f64) -> SimilarityConfig {
        SimilarityConfig::new(t).unwrap()
    }

    #[test]
    fn f_values() {
        let u = [0.3, -1.2, 2.0];
        assert!((sim_f(&u, &u, &cfg(1.0)).unwrap() - E).abs() < 1e-12);
        assert!((sim_f(&[1.0, 0.0], &[0.0, 3.0], &cfg(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((sim_f(&u, &u, &cfg(0.5)).unwrap() - E * E).abs() < 1e-11);
        assert!(sim_f(&u, &[1.0], &cfg(1.0)).is_err());
        assert!(SimilarityConfig::new(0.0).is_err());
    }

    #[test]
    fn g_values() {
        let x = [0.5, 0.25];
        assert!((weight_g(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((weight_g(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - E).abs() < 1e-15);
        assert!((weight_g(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() - E * E).abs() < 1e-14);
        // zero vector: cos = 0, so g = e
        assert!((weight_g(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - E).abs() < 1e-15);
    }

    #[test]
    fn hamming_values() {
        let a = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 3);
        assert_eq!(hamming(&[1.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 0.0, 0.0]).unwrap(), 1);
        assert!(matches!(
            hamming(&[2.0, 0.0], &[1.0, 0.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sigma_values() {
        let a = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(pos_weight_sigma(&a, &a, 6).unwrap(), 1.0);
        let b = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(hamming(&a, &b).unwrap(), 3);
        assert_eq!(pos_weight_sigma(&a, &b, 6).unwrap(), 0.5);
        assert_eq!(
            pos_weight_sigma(&[1.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 1.0], 4).unwrap(),
            0.25
        );
    }

    #[test]
    fn gamma_values() {
        assert_eq!(neg_weight_gamma(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(neg_weight_gamma(&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]).unwrap(), 3.0);
        let a = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let b = [0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        assert_eq!(neg_weight_gamma(&a, &b).unwrap(), 2.0);
        assert!(neg_weight_gamma(&a, &a).is_err());
    }

    #[test]
    fn one_hot_weights_are_constant() {
        let c = 5;
        for i in 0..c {
            for j in 0..c {
                let yi: alloc::vec::Vec<f64> = (0..c).map(|k| f64::from(u8::from(k == i))).collect();
                let yj: alloc::vec::Vec<f64> = (0..c).map(|k| f64::from(u8::from(k == j))).collect();
                if i == j {
                    assert_eq!(pos_weight_sigma(&yi, &yj, c).unwrap(), 1.0);
                } else {
                    assert_eq!(neg_weight_gamma(&yi, &yj).unwrap(), 2.0);
                    assert_eq!(neg_weight_gamma_with(&yi, &yj, LabelMetric::Indicator).unwrap(), 1.0);
                }
            }
        }
    }

    #[test]
    fn g_table_matches_pairwise() {
        let mut rng = Rng::new(4);
        let a = rng.uniform(5, 3, -1.0, 1.0).unwrap();
        let b = rng.uniform(4, 3, -1.0, 1.0).unwrap();
        let t = weight_g_table(&a, &b).unwrap();
        for i in 0..5 {
            for k in 0..4 {
                assert!((t[(i, k)] - weight_g(a.row(i), b.row(k)).unwrap()).abs() < 1e-13);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn f_symmetric_and_scale_invariant(
            u in proptest::collection::vec(-3.0f64..3.0, 5),
            v in proptest::collection::vec(-3.0f64..3.0, 5),
            s in 0.1f64..10.0,
        ) {
            let c = SimilarityConfig::default();
            let a = sim_f(&u, &v, &c).unwrap();
            proptest::prop_assert!((a - sim_f(&v, &u, &c).unwrap()).abs() < 1e-14);
            let su: alloc::vec::Vec<f64> = u.iter().map(|x| x * s).collect();
            if crate::numeric::norm(&u) > 1e-6 {
                proptest::prop_assert!((a - sim_f(&su, &v, &c).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn sigma_plus_normalized_hamming_is_one(bits in proptest::collection::vec(0u8..2, 12)) {
            let y1: alloc::vec::Vec<f64> = bits[..6].iter().map(|&b| f64::from(b)).collect();
            let y2: alloc::vec::Vec<f64> = bits[6..].iter().map(|&b| f64::from(b)).collect();
            let h = hamming(&y1, &y2).unwrap();
            let s = pos_weight_sigma(&y1, &y2, 6).unwrap();
            proptest::prop_assert_eq!(s + h as f64 / 6.0, 1.0);
        }
    }
}
