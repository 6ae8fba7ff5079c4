use crate::error::{Error, Result};
use crate::matrix::Matrix;

const CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy over every (sample, label) cell, with the
/// gradient w.r.t. `y_hat`. Predictions are clamped to `[1e-12, 1 − 1e-12]`;
/// cells that hit the clamp get a zero gradient.
pub fn cross_entropy(y_hat: &Matrix, y: &Matrix) -> Result<(f64, Matrix)> {
    if y_hat.shape() != y.shape() {
        return Err(Error::shape("cross_entropy", y_hat.shape(), y.shape()));
    }
    let cells = (y.rows() * y.cols()) as f64;
    if cells == 0.0 {
        return Err(Error::contract("cross_entropy on an empty batch"));
    }
    let mut grad = Matrix::zeros(y.rows(), y.cols());
    let mut loss = 0.0;
    for ((&p_raw, &t), g) in y_hat
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .zip(grad.as_mut_slice())
    {
        let p = p_raw.clamp(CLAMP, 1.0 - CLAMP);
        loss -= t * libm::log(p) + (1.0 - t) * libm::log(1.0 - p);
        if p == p_raw {
            *g = (-t / p + (1.0 - t) / (1.0 - p)) / cells;
        }
    }
    Ok((loss / cells, grad))
}
