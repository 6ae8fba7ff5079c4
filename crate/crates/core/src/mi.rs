//! Reference mutual information and the arithmetic of the contrastive
//! lower bounds. All quantities are in nats.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const TABLE_TOL: f64 = 1e-12;

/// Joint distribution over a finite alphabet pair, rows indexing `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    p: Matrix,
    px: Vec<f64>,
    py: Vec<f64>,
}

impl JointTable {
    /// Entries must be non-negative and sum to 1 within 1e-12.
    pub fn new(p: Matrix) -> Result<Self> {
        if p.rows() == 0 || p.cols() == 0 {
            return Err(Error::contract("joint table is empty"));
        }
        if let Some(v) = p.as_slice().iter().find(|&&v| !(v >= 0.0)) {
            return Err(Error::contract(format!("joint table has negative entry {v}")));
        }
        let total = p.sum();
        if (total - 1.0).abs() > TABLE_TOL {
            return Err(Error::contract(format!("joint table sums to {total}, not 1")));
        }
        let px = (0..p.rows()).map(|i| p.row(i).iter().sum()).collect();
        let py = (0..p.cols()).map(|j| p.column(j).iter().sum()).collect();
        Ok(Self { p, px, py })
    }

    /// Normalizes non-negative weights (e.g. counts).
    pub fn from_weights(w: &Matrix) -> Result<Self> {
        let total = w.sum();
        if !(total > 0.0) {
            return Err(Error::contract("joint weights must have a positive total"));
        }
        Self::new(w.scale(1.0 / total))
    }

    pub fn probabilities(&self) -> &Matrix {
        &self.p
    }

    pub fn marginal_x(&self) -> &[f64] {
        &self.px
    }

    pub fn marginal_y(&self) -> &[f64] {
        &self.py
    }

    pub fn transpose(&self) -> JointTable {
        JointTable {
            p: self.p.transpose(),
            px: self.py.clone(),
            py: self.px.clone(),
        }
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * libm::log(p)
    } else {
        0.0
    }
}

/// `−Σ p ln p` with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&v| plogp(v)).sum::<f64>()
}

pub fn joint_entropy(t: &JointTable) -> f64 {
    entropy(t.p.as_slice())
}

/// `Σ p(x,y) ln[p(x,y) / (p(x)p(y))]`.
pub fn discrete_mi(t: &JointTable) -> f64 {
    let mut mi = 0.0;
    for i in 0..t.p.rows() {
        for j in 0..t.p.cols() {
            let p = t.p[(i, j)];
            if p > 0.0 {
                mi += p * libm::log(p / (t.px[i] * t.py[j]));
            }
        }
    }
    // rounding can leave a tiny negative value on product tables
    mi.max(0.0)
}

/// `−½ ln(1 − ρ²)` for a bivariate normal with correlation `ρ`.
pub fn gaussian_mi(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::contract(format!("correlation must satisfy |rho| < 1, got {rho}")));
    }
    Ok(-0.5 * libm::log(1.0 - rho * rho))
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard bivariate normal with correlation `rho`, quantized on a
/// `bins × bins` grid of equal cells over `[−span, span]²`; the outermost
/// cells absorb the tails.
pub fn quantized_gaussian_table(rho: f64, bins: usize, span: f64) -> Result<JointTable> {
    if !(rho.abs() < 1.0) || bins < 2 || !(span > 0.0) {
        return Err(Error::contract(format!(
            "invalid quantization (rho = {rho}, bins = {bins}, span = {span})"
        )));
    }
    let edges: Vec<f64> = (0..=bins)
        .map(|k| match k {
            0 => f64::NEG_INFINITY,
            k if k == bins => f64::INFINITY,
            k => -span + 2.0 * span * k as f64 / bins as f64,
        })
        .collect();
    let s = libm::sqrt(1.0 - rho * rho);
    // p(cell) = ∫ φ(x) [Φ((b − ρx)/s) − Φ((a − ρx)/s)] dx, Simpson in x on
    // the quantile scale u = Φ(x) so the tails are finite intervals
    const PTS: usize = 16;
    let mut p = Matrix::zeros(bins, bins);
    for i in 0..bins {
        let (u0, u1) = (std_normal_cdf(edges[i]), std_normal_cdf(edges[i + 1]));
        let h = (u1 - u0) / PTS as f64;
        for k in 0..=PTS {
            let w = match k {
                0 => 1.0,
                k if k == PTS => 1.0,
                k if k % 2 == 1 => 4.0,
                _ => 2.0,
            } * h
                / 3.0;
            let u = (u0 + k as f64 * h).clamp(1e-300, 1.0 - 1e-16);
            let x = inverse_normal_cdf(u);
            let mut prev = 0.0;
            for j in 0..bins {
                let upper = if j + 1 == bins {
                    1.0
                } else {
                    std_normal_cdf((edges[j + 1] - rho * x) / s)
                };
                p[(i, j)] += w * (upper - prev);
                prev = upper;
            }
        }
    }
    JointTable::from_weights(&p)
}

/// Acklam's rational approximation refined by one Halley step.
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let lo = 0.02425;
    let x = if p < lo {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lo {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = std_normal_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// `ε(i, j)`: labels positive in both vectors.
pub fn shared_positives(y1: &[f64], y2: &[f64]) -> Result<usize> {
    if y1.len() != y2.len() {
        return Err(Error::shape("shared_positives", (1, y1.len()), (1, y2.len())));
    }
    Ok(y1.iter().zip(y2).filter(|(&a, &b)| a == 1.0 && b == 1.0).count())
}

/// `N`: mean over evaluated labels of `ln |𝒩(a)|`.
pub fn label_negative_term(negative_sizes: &[usize]) -> Result<f64> {
    if negative_sizes.is_empty() || negative_sizes.contains(&0) {
        return Err(Error::contract(format!(
            "every evaluated label needs a nonempty negative set, got {negative_sizes:?}"
        )));
    }
    Ok(negative_sizes.iter().map(|&k| libm::log(k as f64)).sum::<f64>() / negative_sizes.len() as f64)
}

/// One bound evaluation against its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `|𝒩|` as an index-set size.
    pub size: usize,
    /// Negative terms per anchor denominator (`2|𝒩|` for two views).
    pub terms: usize,
    pub seed: u64,
    /// The evaluated contrastive loss (`L_u` or the stratum's `L_s`).
    pub loss: f64,
    pub bound: f64,
    pub reference_mi: f64,
    /// `reference_mi − bound`.
    pub gap: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    /// `ε` for supervised strata.
    pub stratum: Option<usize>,
    /// Set when training failed; the bound fields are then NaN.
    pub failure: Option<alloc::string::String>,
}

impl BoundReport {
    pub fn new(size: usize, terms: usize, seed: u64, loss: f64, bound: f64, reference_mi: f64, tolerance: f64) -> Self {
        Self {
            size,
            terms,
            seed,
            loss,
            bound,
            reference_mi,
            gap: reference_mi - bound,
            tolerance,
            satisfied: bound <= reference_mi + tolerance,
            stratum: None,
            failure: None,
        }
    }

    pub fn failed(size: usize, terms: usize, seed: u64, reference_mi: f64, tolerance: f64, why: alloc::string::String) -> Self {
        Self {
            size,
            terms,
            seed,
            loss: f64::NAN,
            bound: f64::NAN,
            reference_mi,
            gap: f64::NAN,
            tolerance,
            satisfied: false,
            stratum: None,
            failure: Some(why),
        }
    }
}
