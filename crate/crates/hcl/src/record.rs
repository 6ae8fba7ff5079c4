//! Run records and the CSV tables written next to them.
//!
//! Numbers use Rust's shortest round-trip formatting, so identical runs
//! produce identical bytes. Undefined per-label AUCs are written as empty
//! cells.

use std::collections::BTreeMap;

use hcl_core::metrics::EvalReport;
use hcl_core::train::{EpochRecord, TrainOutcome};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub l_c: f64,
    pub l_u: f64,
    pub l_s: f64,
    pub j: f64,
    pub negative_set: usize,
    pub negative_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub f1: f64,
    pub auc: f64,
    pub per_label_auc: Vec<Option<f64>>,
    pub n_eval: usize,
}

impl From<&EvalReport> for ReportRow {
    fn from(r: &EvalReport) -> Self {
        Self {
            f1: r.f1,
            auc: r.auc,
            per_label_auc: r.per_label_auc.clone(),
            n_eval: r.n_eval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    /// Every config key; parsing these back replays the run.
    pub config: BTreeMap<String, String>,
    pub steps: usize,
    pub trace: Vec<TraceRow>,
    pub report: ReportRow,
    pub wall_seconds: f64,
    /// SHA-256 of each artifact file, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

impl RunRecord {
    pub fn new(cfg: &RunConfig, method: &str, seed: u64, out: &TrainOutcome, wall_seconds: f64) -> Self {
        Self {
            method: method.into(),
            seed,
            config: cfg.snapshot().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            steps: out.steps,
            trace: out.trace.iter().map(trace_row).collect(),
            report: (&out.report).into(),
            wall_seconds,
            checksums: BTreeMap::new(),
        }
    }

    /// Config text that replays this run.
    pub fn config_text(&self) -> String {
        self.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn trace_row(e: &EpochRecord) -> TraceRow {
    TraceRow {
        epoch: e.epoch,
        l_c: e.loss.l_c,
        l_u: e.loss.l_u,
        l_s: e.loss.l_s,
        j: e.loss.j,
        negative_set: e.negative_set,
        negative_terms: e.negative_terms,
    }
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("epoch,l_c,l_u,l_s,j,negative_set,negative_terms\n");
    for t in trace {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t.epoch, t.l_c, t.l_u, t.l_s, t.j, t.negative_set, t.negative_terms
        ));
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// One row per run. F1 is micro-averaged over all label cells; AUC is the
/// mean over labels where it is defined.
pub fn metrics_csv(records: &[RunRecord]) -> String {
    let labels = records.iter().map(|r| r.report.per_label_auc.len()).max().unwrap_or(0);
    let mut s = String::from("method,seed,f1_micro,auc_macro,n_eval");
    for a in 0..labels {
        s.push_str(&format!(",auc_{a}"));
    }
    s.push('\n');
    for r in records {
        s.push_str(&format!("{},{},{},{},{}", r.method, r.seed, r.report.f1, r.report.auc, r.report.n_eval));
        for a in 0..labels {
            s.push(',');
            s.push_str(&opt(r.report.per_label_auc.get(a).copied().flatten()));
        }
        s.push('\n');
    }
    s
}
