//! Fixed linear maps that bring raw single-view features to the embedding
//! width, so `f(x·P, z)` is defined.
//!
//! A Gaussian map keeps angles only up to `O(√(d/k))` distortion, which
//! drowns weak structure when `k ≪ d`. The principal map keeps the `k`
//! strongest second-moment directions of the features instead; it reads
//! features only, never labels.

use alloc::format;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorProjection {
    /// Entries drawn from `N(0, 1/k)`.
    Random,
    /// Top-`k` eigenvectors of `XᵀX / n`, by subspace iteration.
    Principal,
}

impl AnchorProjection {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "principal" => Ok(Self::Principal),
            other => Err(Error::Config(format!("unknown projection `{other}` (random | principal)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Principal => "principal",
        }
    }

    /// A `d × k` map for features `x` (`n × d`).
    pub fn build(self, x: &Matrix, k: usize, rng: &mut Rng) -> Result<Matrix> {
        let d = x.cols();
        let start = rng.normal_matrix(d, k, 1.0 / libm::sqrt(k as f64));
        match self {
            Self::Random => Ok(start),
            Self::Principal => {
                if k > d {
                    return Err(Error::Config(format!(
                        "principal projection needs latent_dim <= feature count ({k} > {d})"
                    )));
                }
                let second = x.transposed_matmul(x)?.scale(1.0 / x.rows().max(1) as f64);
                subspace_iteration(&second, start, SUBSPACE_ITERS)
            }
        }
    }
}

const SUBSPACE_ITERS: usize = 200;

/// Orthonormal basis of the dominant `k`-dimensional invariant subspace of
/// the symmetric `c`, columns ordered by Rayleigh quotient (descending).
pub fn subspace_iteration(c: &Matrix, start: Matrix, iters: usize) -> Result<Matrix> {
    let mut q = orthonormalize(start);
    for _ in 0..iters {
        q = orthonormalize(c.matmul(&q)?);
    }
    // order columns so the map is stable under permutation of equal-rate runs
    let cq = c.matmul(&q)?;
    let k = q.cols();
    let mut order: alloc::vec::Vec<(usize, f64)> =
        (0..k).map(|j| (j, (0..q.rows()).map(|i| q[(i, j)] * cq[(i, j)]).sum())).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(Matrix::from_fn(q.rows(), k, |i, j| q[(i, order[j].0)]))
}

/// Modified Gram-Schmidt on columns; a column that collapses is replaced by
/// the first unit vector orthogonal to the ones kept.
fn orthonormalize(mut m: Matrix) -> Matrix {
    let (d, k) = m.shape();
    for j in 0..k {
        for p in 0..j {
            let dot: f64 = (0..d).map(|i| m[(i, j)] * m[(i, p)]).sum();
            for i in 0..d {
                m[(i, j)] -= dot * m[(i, p)];
            }
        }
        let n = libm::sqrt((0..d).map(|i| m[(i, j)] * m[(i, j)]).sum());
        if n > 1e-12 {
            (0..d).for_each(|i| m[(i, j)] /= n);
        } else {
            replace_with_free_axis(&mut m, j);
        }
    }
    m
}

fn replace_with_free_axis(m: &mut Matrix, j: usize) {
    let d = m.rows();
    for axis in 0..d {
        let mut v: alloc::vec::Vec<f64> = (0..d).map(|i| f64::from(u8::from(i == axis))).collect();
        for p in 0..j {
            let dot: f64 = (0..d).map(|i| v[i] * m[(i, p)]).sum();
            (0..d).for_each(|i| v[i] -= dot * m[(i, p)]);
        }
        let n = libm::sqrt(v.iter().map(|x| x * x).sum());
        if n > 0.5 {
            (0..d).for_each(|i| m[(i, j)] = v[i] / n);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_map_finds_the_high_variance_axes() {
        let mut rng = Rng::new(3);
        let scales = [5.0, 0.1, 3.0, 0.2, 0.1];
        let x = Matrix::from_fn(2000, 5, |_, j| scales[j] * rng.normal());
        let p = AnchorProjection::Principal.build(&x, 2, &mut Rng::new(4)).unwrap();
        assert!(p[(0, 0)].abs() > 0.999, "{p:?}");
        assert!(p[(2, 1)].abs() > 0.999, "{p:?}");
        let gram = p.transposed_matmul(&p).unwrap();
        assert!(gram.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_input_still_gives_an_orthonormal_map() {
        let x = Matrix::from_fn(10, 4, |i, j| if j == 0 { i as f64 } else { 0.0 });
        let p = AnchorProjection::Principal.build(&x, 3, &mut Rng::new(1)).unwrap();
        let gram = p.transposed_matmul(&p).unwrap();
        assert!(gram.sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-12);
        assert!(AnchorProjection::Principal.build(&x, 5, &mut Rng::new(1)).is_err());
    }

    #[test]
    fn random_map_matches_the_plain_draw() {
        let x = Matrix::zeros(3, 6);
        let p = AnchorProjection::Random.build(&x, 2, &mut Rng::new(9)).unwrap();
        assert_eq!(p, Rng::new(9).normal_matrix(6, 2, 1.0 / libm::sqrt(2.0)));
    }
}
