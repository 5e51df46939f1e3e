//! Per-region saliency statistics and disease-focus scoring.
//!
//! For a normalized saliency map and a segmentation label map, each region's
//! median gradient intensity `M_r` is the median of the map over that
//! region's voxels. Regions are ranked by descending `M_r` and the top-K
//! (default 10) are scored against a category table; the disease-focus score
//! of a report is the arithmetic mean of those per-region scores, so it lies
//! in [0, 2] with 2 meaning every top region is C1.
//!
//! Cohorts of maps, split by classification outcome (TP/TN/FP/FN), aggregate
//! in one of two labeled modes: `pooled-median` pools every member voxel per
//! region before taking the median, `per-image-then-average` averages the
//! per-image medians. Background voxels (label 0) are excluded from region
//! statistics; their pooled median is reported separately as a diagnostic
//! for models that attend to the background.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saliency::SaliencyMap;
use crate::tables::{Category, CategoryTable};
use crate::volume::{check_same_grid, LabelMap};

/// Median of a non-empty sample; even counts average the two central order
/// statistics. Reorders the slice.
fn median_inplace(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let n = values.len();
    let mid = n / 2;
    let (low, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = low
            .iter()
            .copied()
            .max_by(f64::total_cmp)
            .expect("even count >= 2 has a lower half");
        (lower + upper) / 2.0
    }
}

/// Per-region aggregate of a saliency map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStatRecord {
    pub region_id: u32,
    pub region_name: String,
    pub voxel_count: usize,
    /// Median gradient intensity M_r; in [0, 1] for normalized maps.
    pub median_intensity: f64,
    /// 1 = highest median; assigned over the full region set.
    pub rank: usize,
}

fn rank_order(a: &RegionStatRecord, b: &RegionStatRecord) -> std::cmp::Ordering {
    // Descending median, then descending voxel count, then name.
    b.median_intensity
        .total_cmp(&a.median_intensity)
        .then_with(|| b.voxel_count.cmp(&a.voxel_count))
        .then_with(|| a.region_name.cmp(&b.region_name))
}

fn assign_ranks(records: &mut [RegionStatRecord]) {
    records.sort_by(rank_order);
    for (i, r) in records.iter_mut().enumerate() {
        r.rank = i + 1;
    }
}

/// Median gradient intensity per region of a normalized saliency map.
///
/// Background (label 0) is excluded. Records come back ranked over the full
/// region set (descending median; ties by descending voxel count, then
/// region name). Regions named in the table but absent from the voxel data
/// are skipped.
pub fn region_medians(s: &SaliencyMap, labels: &LabelMap) -> Result<Vec<RegionStatRecord>> {
    check_same_grid(s.volume(), labels.grid())?;
    if !s.is_normalized() {
        return Err(Error::InvalidParameter(
            "saliency map must be normalized before region statistics".to_string(),
        ));
    }

    let mut buckets: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (i, &value) in s.values().iter().enumerate() {
        let id = labels.label_at(i);
        if id != 0 {
            buckets.entry(id).or_default().push(value);
        }
    }
    if buckets.is_empty() {
        return Err(Error::EmptyLabelMap);
    }

    let mut records = Vec::with_capacity(buckets.len());
    for (id, mut values) in buckets {
        let name = labels
            .region_name(id)
            .expect("label map closure guarantees a name")
            .to_string();
        records.push(RegionStatRecord {
            region_id: id,
            region_name: name,
            voxel_count: values.len(),
            median_intensity: median_inplace(&mut values),
            rank: 0,
        });
    }
    assign_ranks(&mut records);
    Ok(records)
}

/// Median saliency over background (label 0) voxels, if any exist.
pub fn background_median(s: &SaliencyMap, labels: &LabelMap) -> Result<Option<f64>> {
    check_same_grid(s.volume(), labels.grid())?;
    let mut values: Vec<f64> = s
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| labels.label_at(*i) == 0)
        .map(|(_, &v)| v)
        .collect();
    Ok(if values.is_empty() {
        None
    } else {
        Some(median_inplace(&mut values))
    })
}

/// Top `k` regions by median intensity (all regions when `k` exceeds the
/// region count), re-ranked 1..len within the returned list.
pub fn rank_regions(stats: &[RegionStatRecord], k: usize) -> Vec<RegionStatRecord> {
    let mut sorted: Vec<RegionStatRecord> = stats.to_vec();
    assign_ranks(&mut sorted);
    sorted.truncate(k.min(sorted.len()));
    sorted
}

/// Classification outcome group of a test subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "TP")]
    Tp,
    #[serde(rename = "TN")]
    Tn,
    #[serde(rename = "FP")]
    Fp,
    #[serde(rename = "FN")]
    Fn,
    #[serde(rename = "ALL")]
    All,
}

impl Outcome {
    pub const GROUPS: [Outcome; 4] = [Outcome::Tp, Outcome::Tn, Outcome::Fp, Outcome::Fn];
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::Tp => "TP",
            Outcome::Tn => "TN",
            Outcome::Fp => "FP",
            Outcome::Fn => "FN",
            Outcome::All => "ALL",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TP" => Ok(Outcome::Tp),
            "TN" => Ok(Outcome::Tn),
            "FP" => Ok(Outcome::Fp),
            "FN" => Ok(Outcome::Fn),
            "ALL" => Ok(Outcome::All),
            other => Err(Error::InvalidParameter(format!(
                "unknown outcome {other:?} (expected TP, TN, FP, FN or ALL)"
            ))),
        }
    }
}

/// How a cohort of maps is reduced to one set of region medians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregationMode {
    /// Pool every member voxel per region, then take one median.
    #[serde(rename = "pooled-median")]
    PooledMedian,
    /// Median per image per region, averaged across images.
    #[serde(rename = "per-image-then-average")]
    PerImageAverage,
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationMode::PooledMedian => write!(f, "pooled-median"),
            AggregationMode::PerImageAverage => write!(f, "per-image-then-average"),
        }
    }
}

impl FromStr for AggregationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" | "pooled-median" => Ok(AggregationMode::PooledMedian),
            "per-image" | "per-image-then-average" => Ok(AggregationMode::PerImageAverage),
            other => Err(Error::InvalidParameter(format!(
                "unknown aggregation mode {other:?} (expected pooled or per-image)"
            ))),
        }
    }
}

/// One scored row of a disease-focus report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DfRegionRow {
    pub rank: usize,
    pub region: String,
    pub region_id: u32,
    pub voxel_count: usize,
    pub median_intensity: f64,
    pub category: Category,
    pub score: u32,
    /// False when the region was absent from the category table and fell
    /// back to C3.
    pub known_category: bool,
}

/// Disease-focus report for one outcome group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DfReport {
    pub model_id: String,
    pub group: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<AggregationMode>,
    /// Number of maps that fed this report (1 for single-map reports).
    pub members: usize,
    pub top_k: usize,
    pub regions: Vec<DfRegionRow>,
    /// Arithmetic mean of the region scores; in [0, 2].
    pub df_score: f64,
    /// Regions scored 0 because they were absent from the category table.
    pub unknown_regions: Vec<String>,
    /// Median saliency over background voxels, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_median: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Score a ranked top-region list against a category table.
///
/// The returned report carries placeholder metadata (`model_id` empty,
/// group `ALL`); callers fill in context.
pub fn df_score(top: &[RegionStatRecord], cats: &CategoryTable) -> Result<DfReport> {
    if top.is_empty() {
        return Err(Error::EmptyInput(
            "disease-focus score needs at least one region".to_string(),
        ));
    }
    let mut rows = Vec::with_capacity(top.len());
    let mut unknown = Vec::new();
    let mut total: u64 = 0;
    for record in top {
        let hit = cats.lookup(&record.region_name);
        if !hit.known {
            unknown.push(record.region_name.clone());
        }
        total += hit.category.score() as u64;
        rows.push(DfRegionRow {
            rank: record.rank,
            region: record.region_name.clone(),
            region_id: record.region_id,
            voxel_count: record.voxel_count,
            median_intensity: record.median_intensity,
            category: hit.category,
            score: hit.category.score(),
            known_category: hit.known,
        });
    }
    Ok(DfReport {
        model_id: String::new(),
        group: Outcome::All,
        mode: None,
        members: 1,
        top_k: top.len(),
        regions: rows,
        df_score: total as f64 / top.len() as f64,
        unknown_regions: unknown,
        background_median: None,
        warnings: Vec::new(),
    })
}

/// One cohort member: a normalized saliency map, its classification outcome,
/// and its (grid-compatible) label map.
pub struct CohortMember<'a> {
    pub saliency: &'a SaliencyMap,
    pub outcome: Outcome,
    pub labels: &'a LabelMap,
}

/// Result of a cohort analysis: one report per nonempty outcome group.
#[derive(Debug, Clone)]
pub struct CohortAnalysis {
    pub mode: AggregationMode,
    pub reports: Vec<DfReport>,
    pub warnings: Vec<String>,
}

/// Options for [`cohort_analysis`].
#[derive(Debug, Clone)]
pub struct CohortOptions {
    pub mode: AggregationMode,
    pub top_k: usize,
    pub model_id: String,
    /// Emit the background-median diagnostic on each report.
    pub background_diagnostic: bool,
}

impl Default for CohortOptions {
    fn default() -> Self {
        CohortOptions {
            mode: AggregationMode::PooledMedian,
            top_k: 10,
            model_id: String::new(),
            background_diagnostic: false,
        }
    }
}

/// Group maps by outcome and emit one disease-focus report per group.
///
/// Groups are emitted in TP, TN, FP, FN, ALL order; outcome groups without
/// members are skipped with a warning. Errors with
/// [`Error::EmptyGroup`] when the cohort itself is empty.
pub fn cohort_analysis(
    members: &[CohortMember<'_>],
    cats: &CategoryTable,
    options: &CohortOptions,
) -> Result<CohortAnalysis> {
    if members.is_empty() {
        return Err(Error::EmptyGroup("cohort contains no subjects".to_string()));
    }
    if options.top_k == 0 {
        return Err(Error::InvalidParameter("top-k must be >= 1".to_string()));
    }
    for m in members {
        if !m.saliency.is_normalized() {
            return Err(Error::InvalidParameter(format!(
                "saliency map {:?} is not normalized",
                m.saliency.source()
            )));
        }
        check_same_grid(m.saliency.volume(), m.labels.grid())?;
    }

    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    let tagged_outcomes = members.iter().any(|m| m.outcome != Outcome::All);

    let mut order: Vec<Outcome> = Outcome::GROUPS.to_vec();
    order.push(Outcome::All);
    for outcome in order {
        let group: Vec<&CohortMember<'_>> =
            members.iter().filter(|m| m.outcome == outcome).collect();
        if group.is_empty() {
            if tagged_outcomes && outcome != Outcome::All {
                warnings.push(format!("group {outcome} has no members; report omitted"));
            }
            continue;
        }
        let mut report = analyze_group(&group, cats, options)?;
        report.group = outcome;
        reports.push(report);
    }

    Ok(CohortAnalysis {
        mode: options.mode,
        reports,
        warnings,
    })
}

fn analyze_group(
    group: &[&CohortMember<'_>],
    cats: &CategoryTable,
    options: &CohortOptions,
) -> Result<DfReport> {
    // Regions are keyed by name: member label maps may use different ids for
    // the same structure. The reported id is the first one seen.
    struct Pool {
        id: u32,
        voxels: usize,
        values: Vec<f64>,        // pooled voxel values
        image_medians: Vec<f64>, // one median per image containing the region
    }
    let mut pools: BTreeMap<String, Pool> = BTreeMap::new();
    let mut background: Vec<f64> = Vec::new();
    let mut background_image_medians: Vec<f64> = Vec::new();

    for member in group {
        let per_image = region_medians(member.saliency, member.labels)?;
        for record in &per_image {
            let pool = pools
                .entry(record.region_name.clone())
                .or_insert_with(|| Pool {
                    id: record.region_id,
                    voxels: 0,
                    values: Vec::new(),
                    image_medians: Vec::new(),
                });
            pool.voxels += record.voxel_count;
            pool.image_medians.push(record.median_intensity);
        }
        if options.mode == AggregationMode::PooledMedian {
            for (i, &value) in member.saliency.values().iter().enumerate() {
                let id = member.labels.label_at(i);
                if id != 0 {
                    let name = member.labels.region_name(id).expect("closure");
                    pools.get_mut(name).expect("pool exists").values.push(value);
                }
            }
        }
        if options.background_diagnostic {
            match options.mode {
                AggregationMode::PooledMedian => {
                    for (i, &value) in member.saliency.values().iter().enumerate() {
                        if member.labels.label_at(i) == 0 {
                            background.push(value);
                        }
                    }
                }
                AggregationMode::PerImageAverage => {
                    if let Some(m) = background_median(member.saliency, member.labels)? {
                        background_image_medians.push(m);
                    }
                }
            }
        }
    }

    let mut stats = Vec::with_capacity(pools.len());
    for (name, mut pool) in pools {
        let median = match options.mode {
            AggregationMode::PooledMedian => median_inplace(&mut pool.values),
            AggregationMode::PerImageAverage => {
                pool.image_medians.iter().sum::<f64>() / pool.image_medians.len() as f64
            }
        };
        stats.push(RegionStatRecord {
            region_id: pool.id,
            region_name: name,
            voxel_count: pool.voxels,
            median_intensity: median,
            rank: 0,
        });
    }

    let top = rank_regions(&stats, options.top_k);
    let mut report = df_score(&top, cats)?;
    report.model_id = options.model_id.clone();
    report.mode = Some(options.mode);
    report.members = group.len();
    report.top_k = options.top_k.min(stats.len());
    if options.background_diagnostic {
        report.background_median = match options.mode {
            AggregationMode::PooledMedian => {
                if background.is_empty() {
                    None
                } else {
                    Some(median_inplace(&mut background))
                }
            }
            AggregationMode::PerImageAverage => {
                if background_image_medians.is_empty() {
                    None
                } else {
                    Some(
                        background_image_medians.iter().sum::<f64>()
                            / background_image_medians.len() as f64,
                    )
                }
            }
        };
    }
    Ok(report)
}

/// CSV projection of disease-focus reports: one row per ranked region.
///
/// Columns: `group,rank,region,voxel_count,M_r,category,score`.
pub fn reports_to_csv(reports: &[DfReport]) -> String {
    let mut out = String::from("group,rank,region,voxel_count,M_r,category,score\n");
    for report in reports {
        for row in &report.regions {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.group,
                row.rank,
                row.region,
                row.voxel_count,
                row.median_intensity,
                row.category,
                row.score
            ));
        }
    }
    out
}
