//! CSV schemas. Every file starts with a header row.

use std::path::Path;

use anyhow::Context;
use ptme_core::metrics::rank_sum_test;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const QD_SCORES_CSV: &str = "qd_scores.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const PVALUES_CSV: &str = "pvalues.csv";
pub const INFERENCE_CSV: &str = "inference.csv";
pub const POLICY_JSON: &str = "policy.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdRow {
    pub method: String,
    pub seed: u64,
    pub resolution: usize,
    pub qd_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub seed: u64,
    pub mr_qd_score: f64,
    /// Present when a distillation report sits next to the log.
    pub inference_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueRow {
    pub method_a: String,
    pub method_b: String,
    /// One-sided p-value of "method_a scores higher than method_b".
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRow {
    pub method: String,
    pub seed: u64,
    pub resolution: usize,
    pub elites: usize,
    pub best_epoch: usize,
    pub validation_loss: f64,
    pub probes: usize,
    pub inference_score: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush()
        .map_err(|e| ptme_core::Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row = row.map_err(|e| csv_error(path, e)).with_context(|| format!("row {}", i + 2))?;
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> anyhow::Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => ptme_core::Error::Io { path: path.to_path_buf(), source }.into(),
            _ => unreachable!("checked io kind"),
        }
    } else {
        ptme_core::Error::Validation(vec![format!("{}: {e}", path.display())]).into()
    }
}

/// One row per ordered pair of distinct methods, methods in first-seen order.
pub fn pvalue_table(samples: &[(String, f64)]) -> anyhow::Result<Vec<PValueRow>> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (method, value) in samples {
        match groups.iter_mut().find(|(m, _)| m == method) {
            Some((_, v)) => v.push(*value),
            None => groups.push((method.clone(), vec![*value])),
        }
    }
    let mut rows = Vec::new();
    for (a, va) in &groups {
        for (b, vb) in &groups {
            if a != b {
                rows.push(PValueRow {
                    method_a: a.clone(),
                    method_b: b.clone(),
                    p_value: rank_sum_test(va, vb)?,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pvalue_pairs_are_complementary() {
        let samples: Vec<(String, f64)> = (0..10)
            .flat_map(|i| [("a".to_string(), i as f64 + 0.5), ("b".to_string(), i as f64 * 0.9)])
            .collect();
        let rows = pvalue_table(&samples).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].method_a.as_str(), rows[0].method_b.as_str()), ("a", "b"));
        assert!((rows[0].p_value + rows[1].p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_method_has_no_pairs() {
        let rows = pvalue_table(&[("a".into(), 1.0), ("a".into(), 2.0)]).unwrap();
        assert!(rows.is_empty());
    }
}
