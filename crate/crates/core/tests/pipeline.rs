//! End-to-end runs over the standard-regions phantom: saliency → region
//! medians → ranking → disease-focus reports.

mod common;

use std::collections::BTreeSet;

use dfocus_core::phantom::{
    make_focused_saliency, make_phantom, standard_regions_c1, standard_regions_spec,
};
use dfocus_core::region::{
    cohort_analysis, reports_to_csv, AggregationMode, CohortMember, CohortOptions, Outcome,
};
use dfocus_core::saliency::SaliencyMap;
use dfocus_core::tables::CategoryTable;

#[test]
fn c1_focused_cohort_scores_two_and_beats_uniform_cohort() {
    let (_, labels) = make_phantom(&standard_regions_spec()).unwrap();
    let cats = CategoryTable::default_table();
    let focus = standard_regions_c1();

    // Four "correctly classified" subjects with saliency concentrated in the
    // C1 regions, four "false positives" with flat maps.
    let mut focused = Vec::new();
    for seed in 0..4 {
        focused.push(make_focused_saliency(&labels, &focus, 0.9, 0.1, 0.05, seed).unwrap());
    }
    let uniform: Vec<SaliencyMap> = (10..14)
        .map(|seed| make_focused_saliency(&labels, &BTreeSet::new(), 0.5, 0.3, 0.0, seed).unwrap())
        .collect();

    let mut members = Vec::new();
    for map in &focused {
        members.push(CohortMember {
            saliency: map,
            outcome: Outcome::Tp,
            labels: &labels,
        });
    }
    for map in &uniform {
        members.push(CohortMember {
            saliency: map,
            outcome: Outcome::Fp,
            labels: &labels,
        });
    }

    for mode in [
        AggregationMode::PooledMedian,
        AggregationMode::PerImageAverage,
    ] {
        let options = CohortOptions {
            mode,
            top_k: 10,
            model_id: "phantom-model".to_string(),
            background_diagnostic: true,
        };
        let analysis = cohort_analysis(&members, &cats, &options).unwrap();
        assert_eq!(analysis.reports.len(), 2, "TP and FP groups");

        let tp = &analysis.reports[0];
        let fp = &analysis.reports[1];
        assert_eq!(tp.group, Outcome::Tp);
        assert_eq!(fp.group, Outcome::Fp);
        assert_eq!(tp.df_score, 2.0, "mode {mode}");
        assert!(tp.regions.iter().all(|r| r.category.score() == 2));

        // Focused maps rank C1 medians near 0.9; the flat cohort sits at 0.3.
        for (t, f) in tp.regions.iter().zip(&fp.regions) {
            assert!(
                t.median_intensity > f.median_intensity,
                "mode {mode}: {} vs {}",
                t.median_intensity,
                f.median_intensity
            );
        }

        // Uniform maps rank by voxel count, which the C3 bulk wins.
        assert!(fp.df_score <= 1.0, "mode {mode}: fp df {}", fp.df_score);

        // Background diagnostic present and low for the focused group.
        let bg = tp.background_median.expect("background voxels exist");
        assert!(bg < 0.2, "background median {bg}");
    }
}

#[test]
fn pooled_and_per_image_modes_are_labeled() {
    let (_, labels) = make_phantom(&standard_regions_spec()).unwrap();
    let cats = CategoryTable::default_table();
    let map = make_focused_saliency(&labels, &standard_regions_c1(), 0.8, 0.2, 0.0, 3).unwrap();
    let members = [CohortMember {
        saliency: &map,
        outcome: Outcome::All,
        labels: &labels,
    }];
    for mode in [
        AggregationMode::PooledMedian,
        AggregationMode::PerImageAverage,
    ] {
        let analysis = cohort_analysis(
            &members,
            &cats,
            &CohortOptions {
                mode,
                ..CohortOptions::default()
            },
        )
        .unwrap();
        assert_eq!(analysis.reports[0].mode, Some(mode));
    }
}

#[test]
fn single_subject_group_medians_hit_configured_levels_exactly() {
    // jitter 0: every pipeline-computed median equals the configured level.
    let (_, labels) = make_phantom(&standard_regions_spec()).unwrap();
    let cats = CategoryTable::default_table();
    let focus = standard_regions_c1();
    let map = make_focused_saliency(&labels, &focus, 0.9, 0.1, 0.0, 0).unwrap();
    let members = [CohortMember {
        saliency: &map,
        outcome: Outcome::Tp,
        labels: &labels,
    }];
    let analysis = cohort_analysis(
        &members,
        &cats,
        &CohortOptions {
            top_k: 12,
            ..CohortOptions::default()
        },
    )
    .unwrap();
    let report = &analysis.reports[0];
    assert_eq!(report.regions.len(), 12);
    for row in &report.regions {
        assert!(focus.contains(&row.region), "{}", row.region);
        assert_eq!(row.median_intensity, 0.9);
    }
}

#[test]
fn report_csv_matches_documented_region_table_shape() {
    let (_, labels) = make_phantom(&standard_regions_spec()).unwrap();
    let cats = CategoryTable::default_table();
    let map = make_focused_saliency(&labels, &standard_regions_c1(), 0.9, 0.1, 0.0, 0).unwrap();
    let members = [CohortMember {
        saliency: &map,
        outcome: Outcome::Tp,
        labels: &labels,
    }];
    let analysis = cohort_analysis(&members, &cats, &CohortOptions::default()).unwrap();
    let csv = reports_to_csv(&analysis.reports);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "group,rank,region,voxel_count,M_r,category,score"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[0], "TP");
        assert_eq!(fields[1], (i + 1).to_string());
        assert_eq!(fields[4], "0.9");
        assert_eq!(fields[5], "C1");
        assert_eq!(fields[6], "2");
    }
}

#[test]
fn nine_c1_one_c2_focus_scores_one_point_nine() {
    // Focus pattern with nine severe-change regions plus one moderate one:
    // the report ranks exactly those ten and averages to 1.9.
    let (_, labels) = make_phantom(&standard_regions_spec()).unwrap();
    let cats = CategoryTable::default_table();
    let mut focus: BTreeSet<String> = standard_regions_c1().into_iter().take(9).collect();
    focus.insert("Left-Pallidum".to_string());

    let map = make_focused_saliency(&labels, &focus, 0.9, 0.1, 0.0, 5).unwrap();
    let members = [CohortMember {
        saliency: &map,
        outcome: Outcome::All,
        labels: &labels,
    }];
    let analysis = cohort_analysis(&members, &cats, &CohortOptions::default()).unwrap();
    let report = &analysis.reports[0];
    assert_eq!(report.df_score, 1.9);
    let ranked: BTreeSet<String> = report.regions.iter().map(|r| r.region.clone()).collect();
    assert_eq!(ranked, focus);
}
