//! Per-iteration solver records, serialized as JSON lines.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One iteration of a solve. Fields a solver does not track are omitted
/// from the JSON record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Exact `F_{l,p}` at the iterate.
    #[serde(rename = "F")]
    pub f: f64,
    /// Smoothed functional (convolution CG only).
    #[serde(rename = "H", skip_serializing_if = "Option::is_none", default)]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual_norm_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub penalty_norm_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    pub nnz: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

impl SolveTrace {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn functional_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f).collect()
    }

    /// Appends `other`, renumbering its iterations to follow on from `self`.
    pub fn extend_renumbered(&mut self, other: SolveTrace) {
        let offset = self.records.last().map_or(0, |r| r.iter + 1);
        for mut r in other.records {
            r.iter += offset;
            self.records.push(r);
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(src: &str) -> Result<Self> {
        let records = src
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(SolveTrace { records })
    }
}
