//! Binary classification metrics over prediction records.
//!
//! The positive class is AD (label 1). Thresholding uses the `>=` convention:
//! a score exactly at the threshold predicts positive. Degenerate
//! denominators (e.g. sensitivity with no positive records) yield 0 together
//! with a warning instead of NaN, so batch reports stay finite.
//!
//! AUROC is the Mann–Whitney statistic (ties get half credit), computed from
//! average ranks; this equals the trapezoidal area under the ROC curve.
//! AUPRC is average precision with tied scores processed as one block,
//! precision evaluated after the whole block is included.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One subject's ground truth and model score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub subject_id: String,
    /// 0 = CN, 1 = AD.
    pub true_label: u8,
    /// Higher = more AD-like.
    pub score: f64,
}

impl PredictionRecord {
    pub fn new(subject_id: impl Into<String>, true_label: u8, score: f64) -> Result<Self> {
        if true_label > 1 {
            return Err(Error::InvalidParameter(format!(
                "label must be 0 or 1, got {true_label}"
            )));
        }
        if !score.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "score must be finite, got {score}"
            )));
        }
        Ok(PredictionRecord {
            subject_id: subject_id.into(),
            true_label,
            score,
        })
    }
}

/// Confusion-matrix counts with AD as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.true_negatives + self.false_positives + self.false_negatives
    }
}

/// Count outcomes at a threshold (predicted positive iff score >= threshold).
pub fn confusion(records: &[PredictionRecord], threshold: f64) -> Result<ConfusionCounts> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no prediction records".to_string()));
    }
    let mut counts = ConfusionCounts {
        true_positives: 0,
        true_negatives: 0,
        false_positives: 0,
        false_negatives: 0,
    };
    for r in records {
        let predicted = r.score >= threshold;
        match (r.true_label, predicted) {
            (1, true) => counts.true_positives += 1,
            (1, false) => counts.false_negatives += 1,
            (0, true) => counts.false_positives += 1,
            (0, false) => counts.true_negatives += 1,
            _ => unreachable!("labels validated on construction"),
        }
    }
    Ok(counts)
}

/// Threshold-dependent metrics derived from confusion counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

fn guarded_ratio(num: f64, den: f64, what: &str, warnings: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        warnings.push(format!("degenerate denominator for {what}; reporting 0"));
        0.0
    } else {
        num / den
    }
}

/// Sensitivity, specificity, F-1 and balanced accuracy from counts.
pub fn point_metrics(counts: &ConfusionCounts) -> PointMetrics {
    let tp = counts.true_positives as f64;
    let tn = counts.true_negatives as f64;
    let fp = counts.false_positives as f64;
    let fn_ = counts.false_negatives as f64;

    let mut warnings = Vec::new();
    let sensitivity = guarded_ratio(tp, tp + fn_, "sensitivity", &mut warnings);
    let specificity = guarded_ratio(tn, tn + fp, "specificity", &mut warnings);
    let f1 = guarded_ratio(2.0 * tp, 2.0 * tp + fp + fn_, "f1", &mut warnings);
    PointMetrics {
        sensitivity,
        specificity,
        f1,
        balanced_accuracy: (sensitivity + specificity) / 2.0,
        warnings,
    }
}

/// Average rank (1-based) per record, ties sharing the mean rank of their block.
fn average_ranks(records: &[PredictionRecord]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].score.total_cmp(&records[b].score));
    let mut ranks = vec![0.0; records.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && records[order[j + 1]].score == records[order[i]].score {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share the block mean.
        let mean = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Area under the ROC curve via the Mann–Whitney statistic.
pub fn auroc(records: &[PredictionRecord]) -> Result<f64> {
    let positives = records.iter().filter(|r| r.true_label == 1).count();
    let negatives = records.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClassInput);
    }
    let ranks = average_ranks(records);
    let rank_sum: f64 = records
        .iter()
        .zip(&ranks)
        .filter(|(r, _)| r.true_label == 1)
        .map(|(_, &rank)| rank)
        .sum();
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Area under the precision-recall curve (average precision).
pub fn auprc(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no prediction records".to_string()));
    }
    let positives = records.iter().filter(|r| r.true_label == 1).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[b].score.total_cmp(&records[a].score));

    let mut ap = 0.0;
    let mut cum_tp = 0usize;
    let mut cum_n = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && records[order[j + 1]].score == records[order[i]].score {
            j += 1;
        }
        let block_tp = order[i..=j]
            .iter()
            .filter(|&&idx| records[idx].true_label == 1)
            .count();
        cum_tp += block_tp;
        cum_n += j - i + 1;
        if block_tp > 0 {
            let precision = cum_tp as f64 / cum_n as f64;
            ap += (block_tp as f64 / positives as f64) * precision;
        }
        i = j + 1;
    }
    Ok(ap)
}

/// Full metric suite at a threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub auroc: f64,
    pub auprc: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Evaluate every metric over a record set.
pub fn evaluate(records: &[PredictionRecord], threshold: f64) -> Result<MetricReport> {
    let counts = confusion(records, threshold)?;
    let point = point_metrics(&counts);
    Ok(MetricReport {
        threshold,
        counts,
        sensitivity: point.sensitivity,
        specificity: point.specificity,
        f1: point.f1,
        balanced_accuracy: point.balanced_accuracy,
        auroc: auroc(records)?,
        auprc: auprc(records)?,
        warnings: point.warnings,
    })
}

/// CSV projection of a metric report (Tables I/II column set).
pub fn report_to_csv(report: &MetricReport) -> String {
    format!(
        "f1,balanced_accuracy,auroc,auprc,specificity,sensitivity\n{},{},{},{},{},{}\n",
        report.f1,
        report.balanced_accuracy,
        report.auroc,
        report.auprc,
        report.specificity,
        report.sensitivity
    )
}

/// Load prediction records from CSV with header `subject_id,true_label,score`.
pub fn load_predictions_csv(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    {
        let headers = reader.headers().map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let expected = ["subject_id", "true_label", "score"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {expected:?}, got {got:?}"),
            });
        }
    }

    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2; // 1-based, after the header
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, got {}", row.len()),
            });
        }
        let label: u8 = row[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad label {:?} (expected 0 or 1)", &row[1]),
        })?;
        let score: f64 = row[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad score {:?}", &row[2]),
        })?;
        records.push(
            PredictionRecord::new(row[0].to_string(), label, score).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?,
        );
    }
    if records.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} holds no prediction rows",
            path.display()
        )));
    }
    Ok(records)
}
