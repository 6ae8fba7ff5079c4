//! Versioned JSON checkpoints. Every `f64` is stored as the hex of its bit
//! pattern, so a load reproduces the trained model bit for bit.

use std::path::Path;

use hcl_core::metrics::Decision;
use hcl_core::model::{Activation, Dense, Head, Mlp, ModelParams};
use hcl_core::train::TrainedModel;
use hcl_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const FORMAT: &str = "hcl-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    bits: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct LayerFile {
    activation: String,
    weight: MatrixFile,
    bias: MatrixFile,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct CheckpointFile {
    format: String,
    version: u32,
    method: String,
    seed: u64,
    head: String,
    /// `argmax` or `threshold:<hex bits>`.
    decision: String,
    encoders: Vec<Vec<LayerFile>>,
    classifier: Vec<LayerFile>,
    projection: Option<MatrixFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub method: String,
    pub seed: u64,
    pub model: TrainedModel,
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> AppResult<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| AppError::Format(format!("`{s}` is not a 16-digit hex float")))
}

fn to_file(m: &Matrix) -> MatrixFile {
    MatrixFile {
        rows: m.rows(),
        cols: m.cols(),
        bits: m.as_slice().iter().map(|&v| hex(v)).collect(),
    }
}

fn from_file(f: &MatrixFile) -> AppResult<Matrix> {
    let data = f.bits.iter().map(|s| unhex(s)).collect::<AppResult<Vec<_>>>()?;
    Matrix::from_vec(f.rows, f.cols, data).map_err(|e| AppError::Format(e.to_string()))
}

fn mlp_to_file(m: &Mlp) -> Vec<LayerFile> {
    m.layers
        .iter()
        .map(|l| LayerFile {
            activation: match l.activation {
                Activation::Relu => "relu",
                Activation::Identity => "identity",
            }
            .into(),
            weight: to_file(&l.weight),
            bias: to_file(&l.bias),
        })
        .collect()
}

fn mlp_from_file(layers: &[LayerFile]) -> AppResult<Mlp> {
    let layers = layers
        .iter()
        .map(|l| {
            Ok(Dense {
                weight: from_file(&l.weight)?,
                bias: from_file(&l.bias)?,
                activation: match l.activation.as_str() {
                    "relu" => Activation::Relu,
                    "identity" => Activation::Identity,
                    other => return Err(AppError::Format(format!("unknown activation `{other}`"))),
                },
            })
        })
        .collect::<AppResult<_>>()?;
    Ok(Mlp { layers })
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let p = &self.model.params;
        let file = CheckpointFile {
            format: FORMAT.into(),
            version: VERSION,
            method: self.method.clone(),
            seed: self.seed,
            head: match p.head {
                Head::Sigmoid => "sigmoid",
                Head::Softmax => "softmax",
            }
            .into(),
            decision: match self.model.decision {
                Decision::Argmax => "argmax".into(),
                Decision::Threshold(t) => format!("threshold:{}", hex(t)),
            },
            encoders: p.encoders.iter().map(mlp_to_file).collect(),
            classifier: mlp_to_file(&p.classifier),
            projection: self.model.projection.as_ref().map(to_file),
        };
        serde_json::to_string_pretty(&file).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> AppResult<Self> {
        let f: CheckpointFile = serde_json::from_str(text).map_err(|e| AppError::Format(format!("checkpoint: {e}")))?;
        if f.format != FORMAT || f.version != VERSION {
            return Err(AppError::Format(format!(
                "checkpoint is `{}` version {}, expected `{FORMAT}` version {VERSION}",
                f.format, f.version
            )));
        }
        let head = match f.head.as_str() {
            "sigmoid" => Head::Sigmoid,
            "softmax" => Head::Softmax,
            other => return Err(AppError::Format(format!("unknown head `{other}`"))),
        };
        let decision = match f.decision.split_once(':') {
            None if f.decision == "argmax" => Decision::Argmax,
            Some(("threshold", bits)) => Decision::Threshold(unhex(bits)?),
            _ => return Err(AppError::Format(format!("unknown decision `{}`", f.decision))),
        };
        let params = ModelParams {
            encoders: f.encoders.iter().map(|e| mlp_from_file(e)).collect::<AppResult<_>>()?,
            classifier: mlp_from_file(&f.classifier)?,
            head,
        };
        params.validate().map_err(|e| AppError::Format(format!("checkpoint: {e}")))?;
        Ok(Checkpoint {
            method: f.method,
            seed: f.seed,
            model: TrainedModel {
                params,
                projection: f.projection.as_ref().map(from_file).transpose()?,
                decision,
            },
        })
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hcl_core::model::{init_params, Architecture};

    #[test]
    fn round_trip_is_bit_exact() {
        let params = init_params(
            &Architecture {
                encoders: vec![vec![3, 4, 2], vec![5, 2]],
                classifier: vec![4, 3],
                head: Head::Softmax,
            },
            7,
        )
        .unwrap();
        let mut m = Matrix::from_rows(&[[f64::MIN_POSITIVE, -0.0], [1.0 / 3.0, 1e300]]).unwrap();
        m[(0, 0)] = f64::from_bits(1);
        let ck = Checkpoint {
            method: "hcl".into(),
            seed: 11,
            model: TrainedModel {
                params,
                projection: Some(m),
                decision: Decision::Threshold(0.1 + 0.2),
            },
        };
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back.model.params.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            ck.model.params.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(back.model.projection.unwrap()[(0, 1)].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back.model.decision, ck.model.decision);
        assert_eq!(back.seed, 11);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = r#"{"format":"hcl-checkpoint","version":9,"method":"dnn","seed":0,"head":"sigmoid",
            "decision":"argmax","encoders":[],"classifier":[],"projection":null}"#;
        assert!(Checkpoint::from_json(text).unwrap_err().to_string().contains("version 9"));
    }
}
