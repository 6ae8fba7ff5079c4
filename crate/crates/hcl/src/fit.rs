//! Least-squares polynomial fits for timing sweeps.

use nalgebra::{DMatrix, DVector};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    /// Coefficients from the constant term up.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl PolyFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Fits `y ≈ Σ_{p ≤ degree} c_p x^p`; needs more points than coefficients.
pub fn poly_fit(xs: &[f64], ys: &[f64], degree: usize) -> AppResult<PolyFit> {
    let n = xs.len();
    if n != ys.len() || n <= degree + 1 {
        return Err(AppError::Config(format!(
            "a degree-{degree} fit needs more than {} points, got {n}",
            degree + 1
        )));
    }
    // scale x to [0, 1] so the normal problem stays well conditioned
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(n, degree + 1, |i, p| (xs[i] / scale).powi(p as i32));
    let b = DVector::from_column_slice(ys);
    let c = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| AppError::Config(format!("least squares failed: {e}")))?;
    let coefficients: Vec<f64> = c.iter().enumerate().map(|(p, v)| v / scale.powi(p as i32)).collect();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let fit = PolyFit {
        coefficients,
        r_squared: 0.0,
    };
    let ss_res: f64 = xs.iter().zip(ys).map(|(&x, &y)| (y - fit.predict(x)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(PolyFit { r_squared, ..fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_is_recovered() {
        let xs = [100.0, 200.0, 300.0, 400.0, 500.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 0.01 * x + 3e-5 * x * x).collect();
        let q = poly_fit(&xs, &ys, 2).unwrap();
        assert!((q.r_squared - 1.0).abs() < 1e-12);
        assert!((q.coefficients[2] - 3e-5).abs() < 1e-12);
        let l = poly_fit(&xs, &ys, 1).unwrap();
        assert!(l.r_squared < 1.0 && l.r_squared > 0.9);
    }

    #[test]
    fn r_squared_matches_hand_computation() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 2.0, 2.0];
        let f = poly_fit(&[0.0, 1.0, 2.0, 3.0], &[0.0, 2.0, 2.0, 3.0], 1).unwrap();
        // slope Sxy/Sxx = 4.5/5, intercept 1.75 - 0.9·1.5; residuals -0.4, 0.7, -0.2, -0.1
        assert!((f.coefficients[1] - 0.9).abs() < 1e-12 && (f.coefficients[0] - 0.4).abs() < 1e-12);
        let ss_res = 0.16 + 0.49 + 0.04 + 0.01;
        let ss_tot = 3.0625 + 0.0625 + 0.0625 + 1.5625;
        assert!((f.r_squared - (1.0 - ss_res / ss_tot)).abs() < 1e-12);
        assert!(poly_fit(&xs, &ys, 2).is_err());
    }
}
