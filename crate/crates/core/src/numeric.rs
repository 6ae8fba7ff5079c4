//! Scalar kernels shared by the losses plus the finite-difference oracle.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Norm below which a vector is treated as zero by [`cosine`].
pub const NORM_EPS: f64 = 1e-12;

#[inline]
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    // four accumulators so the reduction vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = u.len() / 4;
    for c in 0..chunks {
        let b = c * 4;
        acc[0] += u[b] * v[b];
        acc[1] += u[b + 1] * v[b + 1];
        acc[2] += u[b + 2] * v[b + 2];
        acc[3] += u[b + 3] * v[b + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..u.len() {
        s += u[i] * v[i];
    }
    s
}

#[inline]
pub fn norm(u: &[f64]) -> f64 {
    libm::sqrt(dot(u, u))
}

/// Cosine similarity clamped to `[-1, 1]`; zero when either norm is below
/// [`NORM_EPS`].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::shape("cosine", (1, u.len()), (1, v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu < NORM_EPS || nv < NORM_EPS {
        return Ok(0.0);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// `ln Σ exp(vᵢ)` via max-shift.
pub fn logsumexp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::contract("logsumexp of an empty vector"));
    }
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Numeric(alloc::format!("logsumexp input max is {m}")));
    }
    let s: f64 = values.iter().map(|&v| libm::exp(v - m)).sum();
    Ok(m + libm::log(s))
}

/// Central-difference gradient of `f` at `point`, one entry at a time.
pub fn finite_diff_grad<F>(mut f: F, point: &Matrix, eps: f64) -> Result<Matrix>
where
    F: FnMut(&Matrix) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::contract("finite difference step must be positive"));
    }
    let mut x = point.clone();
    let mut grad = Matrix::zeros(point.rows(), point.cols());
    for p in 0..point.as_slice().len() {
        let orig = x.as_slice()[p];
        x.as_mut_slice()[p] = orig + eps;
        let hi = f(&x)?;
        x.as_mut_slice()[p] = orig - eps;
        let lo = f(&x)?;
        x.as_mut_slice()[p] = orig;
        if !hi.is_finite() || !lo.is_finite() {
            return Err(Error::Numeric(alloc::format!(
                "function value non-finite while perturbing entry {p}"
            )));
        }
        grad.as_mut_slice()[p] = (hi - lo) / (2.0 * eps);
    }
    Ok(grad)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both are zero.
pub fn relative_error(a: &Matrix, b: &Matrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        libm::sqrt(diff)
    } else {
        libm::sqrt(diff) / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn logsumexp_cases() {
        assert!((logsumexp(&[0.0, 0.0]).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(logsumexp(&[3.5]).unwrap(), 3.5);
        let big = logsumexp(&[1000.0, 1000.0]).unwrap();
        assert!((big - (1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
        assert!(logsumexp(&[]).is_err());
    }

    #[test]
    fn fd_of_half_squared_norm_is_identity() {
        let mut rng = Rng::new(2);
        let x = rng.uniform(3, 4, -2.0, 2.0).unwrap();
        let g = finite_diff_grad(|m| Ok(0.5 * m.norm() * m.norm()), &x, 1e-5).unwrap();
        assert!(g.sub(&x).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn fd_of_constant_is_zero() {
        let x = Matrix::filled(2, 2, 0.3);
        let g = finite_diff_grad(|_| Ok(4.2), &x, 1e-5).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn fd_propagates_non_finite() {
        let x = Matrix::filled(1, 1, 0.0);
        assert!(matches!(
            finite_diff_grad(|m| Ok(if m.as_slice()[0] > 0.0 { f64::INFINITY } else { 0.0 }), &x, 1e-5),
            Err(Error::Numeric(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn logsumexp_shift(v in proptest::collection::vec(-50.0f64..50.0, 1..10), c in -100.0f64..100.0) {
            let shifted: alloc::vec::Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = logsumexp(&shifted).unwrap();
            let b = logsumexp(&v).unwrap() + c;
            proptest::prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn cosine_scale_invariant(
            u in proptest::collection::vec(-5.0f64..5.0, 4),
            v in proptest::collection::vec(-5.0f64..5.0, 4),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            proptest::prop_assume!(norm(&u) > 1e-3 && norm(&v) > 1e-3);
            let su: alloc::vec::Vec<f64> = u.iter().map(|x| x * a).collect();
            let sv: alloc::vec::Vec<f64> = v.iter().map(|x| x * b).collect();
            proptest::prop_assert!((cosine(&u, &v).unwrap() - cosine(&su, &sv).unwrap()).abs() <= 1e-12);
        }
    }
}
