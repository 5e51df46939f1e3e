//! Brute-force oracles shared by the integration and acceptance tests.
//!
//! Everything here is written the slowest, most obvious way on purpose: full
//! sorts, triple loops, O(P·N) pair counts. The implementations under test
//! must match these exactly (or within the stated tolerance), so none of
//! this may call into the code paths it checks.

// Each test target compiles this module separately and uses a subset.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dfocus_core::metrics::PredictionRecord;
use dfocus_core::model::ScoreModel;
use dfocus_core::saliency::SaliencyMap;
use dfocus_core::transforms::StructuringElement;
use dfocus_core::volume::{LabelMap, Volume3D};

/// Uniform random volume with values in [lo, hi).
pub fn random_volume(
    rng: &mut ChaCha8Rng,
    dims: (usize, usize, usize),
    lo: f64,
    hi: f64,
) -> Volume3D {
    let n = dims.0 * dims.1 * dims.2;
    let data = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    Volume3D::new(dims, (1.0, 1.0, 1.0), data).unwrap()
}

/// Random label map: every voxel gets a label in 0..=regions (0 = background).
pub fn random_label_map(
    rng: &mut ChaCha8Rng,
    dims: (usize, usize, usize),
    regions: u32,
) -> LabelMap {
    let n = dims.0 * dims.1 * dims.2;
    let data = (0..n)
        .map(|_| rng.random_range(0..=regions) as f64)
        .collect();
    let grid = Volume3D::new(dims, (1.0, 1.0, 1.0), data).unwrap();
    let table = (1..=regions).map(|id| (id, format!("region-{id:02}")));
    LabelMap::new(grid, table).unwrap()
}

/// Sort-based per-region medians (region name → median), background excluded.
pub fn naive_region_medians(s: &SaliencyMap, labels: &LabelMap) -> BTreeMap<String, f64> {
    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, &value) in s.values().iter().enumerate() {
        let id = labels.label_at(i);
        if id != 0 {
            let name = labels.region_name(id).unwrap().to_string();
            buckets.entry(name).or_default().push(value);
        }
    }
    buckets
        .into_iter()
        .map(|(name, mut values)| {
            values.sort_by(f64::total_cmp);
            let n = values.len();
            let median = if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) / 2.0
            };
            (name, median)
        })
        .collect()
}

fn naive_morph(v: &Volume3D, se_size: usize, take_max: bool) -> Volume3D {
    let (nx, ny, nz) = v.dims();
    let r = se_size as isize / 2;
    let mut out = Volume3D::constant(v.dims(), v.spacing(), 0.0);
    for z in 0..nz as isize {
        for y in 0..ny as isize {
            for x in 0..nx as isize {
                let mut acc = if take_max {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                };
                for dz in -r..=r {
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let sx = (x + dx).clamp(0, nx as isize - 1) as usize;
                            let sy = (y + dy).clamp(0, ny as isize - 1) as usize;
                            let sz = (z + dz).clamp(0, nz as isize - 1) as usize;
                            let sample = v.get(sx, sy, sz);
                            acc = if take_max {
                                acc.max(sample)
                            } else {
                                acc.min(sample)
                            };
                        }
                    }
                }
                out.set(x as usize, y as usize, z as usize, acc);
            }
        }
    }
    out
}

/// Triple-loop grey dilation with a full cube and replicate padding.
pub fn naive_dilate(v: &Volume3D, se_size: usize) -> Volume3D {
    naive_morph(v, se_size, true)
}

/// Triple-loop grey erosion with a full cube and replicate padding.
pub fn naive_erode(v: &Volume3D, se_size: usize) -> Volume3D {
    naive_morph(v, se_size, false)
}

/// Full cube structuring element of the given size.
pub fn cube_se(size: usize) -> StructuringElement {
    StructuringElement::cube(size).unwrap()
}

/// O(P·N) Mann–Whitney AUROC: pairs with pos > neg count 1, ties count ½.
pub fn pairwise_auroc(records: &[PredictionRecord]) -> f64 {
    let positives: Vec<f64> = records
        .iter()
        .filter(|r| r.true_label == 1)
        .map(|r| r.score)
        .collect();
    let negatives: Vec<f64> = records
        .iter()
        .filter(|r| r.true_label == 0)
        .map(|r| r.score)
        .collect();
    let mut credit = 0.0;
    for &p in &positives {
        for &n in &negatives {
            if p > n {
                credit += 1.0;
            } else if p == n {
                credit += 0.5;
            }
        }
    }
    credit / (positives.len() as f64 * negatives.len() as f64)
}

/// Threshold-sweep average precision: recount the confusion at every
/// distinct score, then sum precision × recall increments.
pub fn sweep_auprc(records: &[PredictionRecord]) -> f64 {
    let total_pos = records.iter().filter(|r| r.true_label == 1).count() as f64;
    let mut thresholds: Vec<f64> = records.iter().map(|r| r.score).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.reverse();

    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = records
            .iter()
            .filter(|r| r.true_label == 1 && r.score >= t)
            .count() as f64;
        let predicted = records.iter().filter(|r| r.score >= t).count() as f64;
        let precision = tp / predicted;
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Central-difference gradient of a model's score, one voxel at a time.
pub fn central_difference_gradient(model: &dyn ScoreModel, x: &Volume3D, step: f64) -> Volume3D {
    let mut probe = x.clone();
    let mut grad = Volume3D::constant(x.dims(), x.spacing(), 0.0);
    for i in 0..x.len() {
        let original = probe.data()[i];
        probe.data_mut()[i] = original + step;
        let plus = model.score(&probe).unwrap();
        probe.data_mut()[i] = original - step;
        let minus = model.score(&probe).unwrap();
        probe.data_mut()[i] = original;
        grad.data_mut()[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Random prediction records with deliberate score ties.
pub fn random_predictions(rng: &mut ChaCha8Rng, n: usize) -> Vec<PredictionRecord> {
    (0..n)
        .map(|i| {
            let label = rng.random_range(0..2u8);
            // Quantized scores so ties actually occur.
            let score = (rng.random_range(0.0..1.0f64) * 20.0).round() / 20.0;
            PredictionRecord::new(format!("s{i}"), label, score).unwrap()
        })
        .collect()
}

/// Make sure a record set has both classes (flips the first record if not).
pub fn ensure_both_classes(records: &mut [PredictionRecord]) {
    let positives = records.iter().filter(|r| r.true_label == 1).count();
    if positives == 0 {
        records[0].true_label = 1;
    } else if positives == records.len() {
        records[0].true_label = 0;
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
