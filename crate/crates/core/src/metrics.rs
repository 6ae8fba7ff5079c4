//! Micro-averaged F1 and macro rank AUC.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How scores become hard predictions for F1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    /// Multi-label: predict 1 where `score ≥ threshold`.
    Threshold(f64),
    /// Multi-class: predict the first row maximum.
    Argmax,
}

impl Default for Decision {
    fn default() -> Self {
        Decision::Threshold(0.5)
    }
}

pub fn predictions(y_hat: &Matrix, decision: Decision) -> Result<Matrix> {
    match decision {
        Decision::Threshold(t) => {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("threshold must lie in (0, 1), got {t}")));
            }
            Ok(y_hat.map(|v| f64::from(u8::from(v >= t))))
        }
        Decision::Argmax => {
            let mut out = Matrix::zeros(y_hat.rows(), y_hat.cols());
            for i in 0..y_hat.rows() {
                let r = y_hat.row(i);
                let mut best = 0;
                for (j, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = j;
                    }
                }
                if !r.is_empty() {
                    out.row_mut(i)[best] = 1.0;
                }
            }
            Ok(out)
        }
    }
}

/// Micro F1 `2TP / (2TP + FP + FN)` over all cells; 0 when the denominator is 0.
pub fn f1_score(y_hat: &Matrix, y: &Matrix, decision: Decision) -> Result<f64> {
    if y_hat.shape() != y.shape() {
        return Err(Error::shape("f1_score", y_hat.shape(), y.shape()));
    }
    let pred = predictions(y_hat, decision)?;
    let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
    for (&p, &t) in pred.as_slice().iter().zip(y.as_slice()) {
        match (p == 1.0, t == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let den = 2 * tp + fp + fneg;
    Ok(if den == 0 { 0.0 } else { (2 * tp) as f64 / den as f64 })
}

/// Mann–Whitney AUC of one column with midranks for ties; `None` without
/// both classes.
pub fn column_auc(scores: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if scores.len() != y.len() {
        return Err(Error::shape("column_auc", (scores.len(), 1), (y.len(), 1)));
    }
    let pos = y.iter().filter(|&&v| v == 1.0).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Ok(None);
    }
    if scores.iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric("AUC scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1..=end share their mean
        let mid = (start + 1 + end) as f64 / 2.0;
        rank_sum += mid * order[start..end].iter().filter(|&&i| y[i] == 1.0).count() as f64;
        start = end;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok(Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucReport {
    /// Mean over evaluable labels.
    pub macro_auc: f64,
    /// `None` for labels lacking a positive or a negative.
    pub per_label: Vec<Option<f64>>,
}

pub fn auc(scores: &Matrix, y: &Matrix) -> Result<AucReport> {
    if scores.shape() != y.shape() {
        return Err(Error::shape("auc", scores.shape(), y.shape()));
    }
    let mut per_label = Vec::with_capacity(y.cols());
    for a in 0..y.cols() {
        per_label.push(column_auc(&scores.column(a), &y.column(a))?);
    }
    let vals: Vec<f64> = per_label.iter().flatten().copied().collect();
    if vals.is_empty() {
        return Err(Error::DegenerateEvaluation(format!(
            "none of the {} labels has both classes among {} rows",
            y.cols(),
            y.rows()
        )));
    }
    Ok(AucReport {
        macro_auc: vals.iter().sum::<f64>() / vals.len() as f64,
        per_label,
    })
}

/// Scores of one model on one evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Micro F1.
    pub f1: f64,
    pub auc: f64,
    pub per_label_auc: Vec<Option<f64>>,
    pub n_eval: usize,
}

pub fn evaluate(y_hat: &Matrix, y: &Matrix, decision: Decision) -> Result<EvalReport> {
    let f1 = f1_score(y_hat, y, decision)?;
    let a = auc(y_hat, y)?;
    Ok(EvalReport {
        f1,
        auc: a.macro_auc,
        per_label_auc: a.per_label,
        n_eval: y.rows(),
    })
}

/// Mean and sample standard deviation (`n − 1`; 0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> Result<MeanStd> {
    if values.is_empty() {
        return Err(Error::contract("mean/std over zero repeats"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
    };
    Ok(MeanStd { mean, std })
}

/// Reports across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatSummary {
    pub seeds: Vec<u64>,
    pub f1: MeanStd,
    pub auc: MeanStd,
}

pub fn summarize(seeds: &[u64], reports: &[EvalReport]) -> Result<RepeatSummary> {
    if seeds.len() != reports.len() {
        return Err(Error::contract(format!(
            "{} seeds but {} reports",
            seeds.len(),
            reports.len()
        )));
    }
    let f1: Vec<f64> = reports.iter().map(|r| r.f1).collect();
    let auc: Vec<f64> = reports.iter().map(|r| r.auc).collect();
    Ok(RepeatSummary {
        seeds: seeds.to_vec(),
        f1: mean_std(&f1)?,
        auc: mean_std(&auc)?,
    })
}
