//! Seeded, platform-independent pseudo-randomness.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// ChaCha8 stream seeded from a single `u64`. Identical seeds give identical
/// streams on every platform. Single owner; clone to fork a copy of the state.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent child stream derived from this one's next output and `tag`.
    pub fn fork(&mut self, tag: u64) -> Rng {
        let s = self.next_u64() ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Rng::new(s)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_scalar(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::contract(alloc::format!(
                "uniform range requires lo < hi, got [{lo}, {hi})"
            )));
        }
        Ok(lo + (hi - lo) * self.next_f64())
    }

    /// `rows x cols` matrix of i.i.d. uniform entries in `[lo, hi)`.
    pub fn uniform(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Matrix> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::contract(alloc::format!(
                "uniform range requires lo < hi, got [{lo}, {hi})"
            )));
        }
        let w = hi - lo;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            // guard the rounding case lo + w * (1 - 2^-53) == hi
            let v = lo + w * self.next_f64();
            data.push(if v < hi { v } else { lo });
        }
        Matrix::from_vec(rows, cols, data)
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize, sd: f64) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.as_mut_slice() {
            *v = sd * self.normal();
        }
        m
    }

    /// Uniform integer in `0..n` (Lemire's nearly-divisionless method).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        loop {
            let x = self.next_u64();
            let m = (x as u128) * (n as u128);
            let low = m as u64;
            if low >= n || low >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in random order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Result<Vec<usize>> {
        if k > n {
            return Err(Error::contract(alloc::format!(
                "cannot sample {k} distinct indices from {n}"
            )));
        }
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        Ok(pool)
    }

    /// Uniform point on the unit sphere in `dim` dimensions.
    pub fn unit_sphere(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let n = crate::numeric::norm(&v);
            if n > 1e-9 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let a = Rng::new(1).uniform(2, 2, 0.0, 1.0).unwrap();
        let b = Rng::new(1).uniform(2, 2, 0.0, 1.0).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        let c = Rng::new(2).uniform(2, 2, 0.0, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_mean_within_clt_bound() {
        // sd of the mean is sqrt(1/12 / 1e4) ~= 0.0029; 0.02 is ~7 sd
        let m = Rng::new(11).uniform(100, 100, 0.0, 1.0).unwrap();
        let mean = m.sum() / 1e4;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        assert!(m.as_slice().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn degenerate_range_is_rejected() {
        assert!(matches!(
            Rng::new(1).uniform(2, 2, 1.0, 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sampling_is_distinct() {
        let mut rng = Rng::new(5);
        let mut s = rng.sample_indices(50, 20).unwrap();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 20);
        assert!(rng.sample_indices(3, 4).is_err());
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = Rng::new(9);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[rng.below(5)] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }

    #[test]
    fn normal_moments() {
        let mut rng = Rng::new(13);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.normal()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }
}
