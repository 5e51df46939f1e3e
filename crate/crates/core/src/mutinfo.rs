//! Mutual information between volumetric features and the diagnosis label.
//!
//! The estimator is plug-in MI over a joint histogram of the binary label
//! and the feature discretized into equal-frequency bins (default 10).
//! Binning is rank-based: a sample's bin is `(max_rank − 1) · bins / n`
//! where `max_rank` counts values ≤ the sample's value, so tied samples
//! always share a bin (collapsing bins where ties are heavy) and the
//! estimate is exactly invariant under strictly increasing transforms of
//! the feature. MI is reported in bits and is bounded by the label entropy
//! (≤ 1 bit for binary labels).
//!
//! Feature names follow the segmentation-statistics convention
//! `<region><statistic suffix>` (e.g. `Left-Hippocampus_Volume_mm3`);
//! rankings map each feature back to its region by stripping a known
//! statistic suffix, with an optional override map for names that do not
//! follow the convention.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{Category, CategoryTable};

/// Statistic suffixes stripped when mapping a feature name to its region.
/// Longest match wins (`_Volume_mm3` before any shorter overlap).
pub const STAT_SUFFIXES: &[&str] = &[
    "_Volume_mm3",
    "_NVoxels",
    "_normMean",
    "_normStdDev",
    "_normMin",
    "_normMax",
    "_normRange",
    "_SurfArea",
    "_GrayVol",
    "_ThickAvg",
    "_ThickStd",
    "_MeanCurv",
    "_GausCurv",
    "_FoldInd",
    "_CurvInd",
];

/// Map a feature name to its brain region.
///
/// Overrides take precedence; otherwise the longest matching statistic
/// suffix is stripped. Returns the untouched name (flagged `false`) when
/// neither applies.
pub fn region_for_feature(
    feature: &str,
    overrides: Option<&BTreeMap<String, String>>,
) -> (String, bool) {
    if let Some(map) = overrides {
        if let Some(region) = map.get(feature) {
            return (region.clone(), true);
        }
    }
    let mut best: Option<&str> = None;
    for suffix in STAT_SUFFIXES {
        if feature.ends_with(suffix) && suffix.len() > best.map_or(0, str::len) {
            best = Some(suffix);
        }
    }
    match best {
        Some(suffix) => (feature[..feature.len() - suffix.len()].to_string(), true),
        None => (feature.to_string(), false),
    }
}

/// Per-subject feature vectors plus diagnosis labels.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    /// One row per subject, `feature_names.len()` values each.
    pub rows: Vec<Vec<f64>>,
    /// One binary label per subject.
    pub labels: Vec<u8>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::InvalidParameter(format!(
                    "row {i} holds {} values, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteData(format!("feature row {i}")));
            }
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".to_string()));
        }
        Ok(FeatureMatrix {
            feature_names,
            rows,
            labels,
        })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|row| row[j]).collect()
    }

    pub fn n_subjects(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Plug-in MI estimate for one feature column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    /// Constant features carry no information; reported as 0 with this flag.
    pub constant_feature: bool,
}

/// Equal-frequency bin index per sample (rank-based, ties share a bin).
fn equal_frequency_bins(feature: &[f64], bins: usize) -> Vec<usize> {
    let n = feature.len();
    let mut sorted = feature.to_vec();
    sorted.sort_by(f64::total_cmp);
    feature
        .iter()
        .map(|&x| {
            let max_rank = sorted.partition_point(|&v| v <= x);
            (max_rank - 1) * bins / n
        })
        .collect()
}

/// Mutual information, in bits, between a feature and binary labels.
pub fn mutual_information(feature: &[f64], labels: &[u8], bins: usize) -> Result<MiEstimate> {
    if feature.is_empty() {
        return Err(Error::EmptyInput("empty feature column".to_string()));
    }
    if feature.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature values but {} labels",
            feature.len(),
            labels.len()
        )));
    }
    if bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    if !feature.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteData("feature column".to_string()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClassInput);
    }

    let lo = feature.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = feature.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(MiEstimate {
            bits: 0.0,
            constant_feature: true,
        });
    }

    let assignment = equal_frequency_bins(feature, bins);
    let n = feature.len() as f64;
    let mut joint = vec![[0usize; 2]; bins];
    for (&bin, &label) in assignment.iter().zip(labels) {
        joint[bin][label as usize] += 1;
    }

    let label_marginal = [(labels.len() - n_pos) as f64 / n, n_pos as f64 / n];
    let mut mi = 0.0;
    for cell in &joint {
        let bin_total = (cell[0] + cell[1]) as f64 / n;
        if bin_total == 0.0 {
            continue;
        }
        for (label, &count) in cell.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let p_joint = count as f64 / n;
            mi += p_joint * (p_joint / (bin_total * label_marginal[label])).log2();
        }
    }
    Ok(MiEstimate {
        bits: mi.max(0.0), // clamp -0.0 and rounding dust at exact independence
        constant_feature: false,
    })
}

/// One row of an MI ranking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiRankingEntry {
    pub rank: usize,
    pub feature: String,
    pub mi_bits: f64,
    pub region: String,
    pub category: Category,
    pub score: u32,
    pub known_category: bool,
}

/// Top features by mutual information, scored with the DF system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiRanking {
    pub bins: usize,
    pub top_k: usize,
    pub entries: Vec<MiRankingEntry>,
    /// Mean category score over the ranked entries; in [0, 2].
    pub df_score: f64,
    pub unknown_regions: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Rank features by MI (descending, name tie-break), keep the top `k`, map
/// each to its region and score with the category table.
///
/// Constant columns score 0 bits and are recorded as warnings rather than
/// aborting the run.
pub fn rank_features(
    matrix: &FeatureMatrix,
    cats: &CategoryTable,
    bins: usize,
    k: usize,
    overrides: Option<&BTreeMap<String, String>>,
) -> Result<MiRanking> {
    if matrix.n_features() == 0 || matrix.n_subjects() == 0 {
        return Err(Error::EmptyInput("empty feature matrix".to_string()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("top-k must be >= 1".to_string()));
    }

    let mut warnings = Vec::new();
    let mut scored: Vec<(String, f64)> = Vec::with_capacity(matrix.n_features());
    for (j, name) in matrix.feature_names.iter().enumerate() {
        let estimate = mutual_information(&matrix.column(j), &matrix.labels, bins)?;
        if estimate.constant_feature {
            warnings.push(format!("feature {name} is constant; MI recorded as 0"));
        }
        scored.push((name.clone(), estimate.bits));
    }

    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k.min(scored.len()));

    let mut entries = Vec::with_capacity(scored.len());
    let mut unknown = Vec::new();
    let mut total: u64 = 0;
    for (rank0, (feature, bits)) in scored.into_iter().enumerate() {
        let (region, mapped) = region_for_feature(&feature, overrides);
        if !mapped {
            warnings.push(format!(
                "feature {feature} has no known statistic suffix; using the full name as region"
            ));
        }
        let hit = cats.lookup(&region);
        if !hit.known {
            unknown.push(region.clone());
        }
        total += hit.category.score() as u64;
        entries.push(MiRankingEntry {
            rank: rank0 + 1,
            feature,
            mi_bits: bits,
            region,
            category: hit.category,
            score: hit.category.score(),
            known_category: hit.known,
        });
    }

    let len = entries.len();
    Ok(MiRanking {
        bins,
        top_k: len,
        entries,
        df_score: total as f64 / len as f64,
        unknown_regions: unknown,
        warnings,
    })
}

/// CSV projection of an MI ranking.
pub fn ranking_to_csv(ranking: &MiRanking) -> String {
    let mut out = String::from("rank,feature,mi_bits,region,category,score\n");
    for e in &ranking.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.rank, e.feature, e.mi_bits, e.region, e.category, e.score
        ));
    }
    out
}

/// Load a feature matrix from CSV: header row of feature names plus a
/// `label` column (any position), one subject per row.
pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing required `label` column".to_string(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_col)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no feature columns besides `label`".to_string(),
        });
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", headers.len(), row.len()),
            });
        }
        let label: u8 = row[label_col].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad label {:?} (expected 0 or 1)", &row[label_col]),
        })?;
        if label > 1 {
            return Err(Error::Parse {
                line,
                message: format!("bad label {label} (expected 0 or 1)"),
            });
        }
        let mut values = Vec::with_capacity(feature_names.len());
        for (i, field) in row.iter().enumerate() {
            if i == label_col {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad value {field:?} in column {:?}", headers[i]),
            })?;
            values.push(v);
        }
        rows.push(values);
        labels.push(label);
    }
    FeatureMatrix::new(feature_names, rows, labels)
}
