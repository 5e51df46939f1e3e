//! Black-box tests of the `dfocus` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dfocus_core::nifti::{read_volume, write_volume};
use dfocus_core::saliency::{min_max_normalize, SaliencyMap};
use dfocus_core::volume::{ScalarKind, Volume3D};

fn dfocus(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfocus"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn dfocus")
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn json_of(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

/// Linear model fixture: alternating-sign weights over a 4³ grid.
fn write_linear_fixture(dir: &Path) -> (PathBuf, Volume3D) {
    let n = 64;
    let weights: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * ((i % 5) as f64 + 1.0) * 0.125)
        .collect();
    let volume = Volume3D::new((4, 4, 4), (1.0, 1.0, 1.0), weights.clone()).unwrap();
    let model = serde_json::json!({
        "kind": "linear",
        "id": "fixture-linear",
        "dims": [4, 4, 4],
        "spacing": [1.0, 1.0, 1.0],
        "weights": weights,
        "bias": 0.25,
    });
    let path = dir.join("model.json");
    std::fs::write(&path, serde_json::to_string(&model).unwrap()).unwrap();
    (path, volume)
}

#[test]
fn saliency_of_linear_model_is_normalized_weight_magnitude() {
    let dir = tempfile::tempdir().unwrap();
    let (model, weights) = write_linear_fixture(dir.path());
    let image = Volume3D::constant((4, 4, 4), (1.0, 1.0, 1.0), 0.7);
    write_volume(&image, dir.path().join("image.nii"), ScalarKind::F64).unwrap();

    let out = dfocus(
        &[
            "saliency",
            "--model",
            model.to_str().unwrap(),
            "--image",
            "image.nii",
            "--out",
            "sal.nii",
        ],
        dir.path(),
    );
    assert_ok(&out);

    let got = read_volume(dir.path().join("sal.nii")).unwrap();
    let expected = min_max_normalize(SaliencyMap::from_gradient(weights, "oracle", false));
    assert_eq!(got.data(), expected.values());

    // Sidecar manifest written next to the volume.
    assert!(dir.path().join("sal.nii.manifest.json").exists());
}

#[test]
fn imported_gradient_matches_in_process_computation() {
    let dir = tempfile::tempdir().unwrap();
    let (model, weights) = write_linear_fixture(dir.path());
    let image = Volume3D::constant((4, 4, 4), (1.0, 1.0, 1.0), 1.0);
    write_volume(&image, dir.path().join("image.nii"), ScalarKind::F64).unwrap();
    // A linear model's input gradient is its weight field; exporting it
    // simulates a gradient computed by an external toolchain.
    write_volume(&weights, dir.path().join("grad.nii"), ScalarKind::F64).unwrap();

    let from_model = dfocus(
        &[
            "saliency",
            "--model",
            model.to_str().unwrap(),
            "--image",
            "image.nii",
            "--out",
            "sal_model.nii",
        ],
        dir.path(),
    );
    assert_ok(&from_model);
    let from_import = dfocus(
        &[
            "saliency",
            "--import",
            "grad.nii",
            "--out",
            "sal_import.nii",
        ],
        dir.path(),
    );
    assert_ok(&from_import);

    let a = std::fs::read(dir.path().join("sal_model.nii")).unwrap();
    let b = std::fs::read(dir.path().join("sal_import.nii")).unwrap();
    assert_eq!(a, b, "cross-path saliency volumes must be byte-identical");
}

#[test]
fn missing_input_file_fails_with_stderr_message() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _) = write_linear_fixture(dir.path());
    let out = dfocus(
        &[
            "saliency",
            "--model",
            model.to_str().unwrap(),
            "--image",
            "no-such-volume.nii",
            "--out",
            "sal.nii",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(
        stderr_of(&out).contains("no-such-volume.nii"),
        "{}",
        stderr_of(&out)
    );
}

fn generate_phantom_cohort(dir: &Path) {
    let focused = dfocus(
        &[
            "phantom",
            "--standard-regions",
            "--out-dir",
            "ph",
            "--saliency-c1",
            "--jitter",
            "0.05",
            "--saliency-count",
            "2",
            "--seed",
            "21",
        ],
        dir,
    );
    assert_ok(&focused);
    let uniform = dfocus(
        &[
            "phantom",
            "--standard-regions",
            "--out-dir",
            "ph-flat",
            "--saliency-uniform",
            "--background-level",
            "0.3",
            "--saliency-count",
            "2",
            "--seed",
            "22",
        ],
        dir,
    );
    assert_ok(&uniform);
    std::fs::write(
        dir.join("cohort.tsv"),
        "ph/saliency-000.nii.gz\tTP\n\
         ph/saliency-001.nii.gz\tTP\n\
         ph-flat/saliency-000.nii.gz\tFP\n\
         ph-flat/saliency-001.nii.gz\tFP\n",
    )
    .unwrap();
}

#[test]
fn dfscore_on_phantom_cohort_reports_two_for_focused_group() {
    let dir = tempfile::tempdir().unwrap();
    generate_phantom_cohort(dir.path());

    let out = dfocus(
        &[
            "dfscore",
            "--cohort",
            "cohort.tsv",
            "--labels",
            "ph/labels.nii.gz",
            "--regions",
            "ph/regions.tsv",
            "--csv",
            "report.csv",
            "--no-timestamp",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let report = json_of(&out);
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["group"], "TP");
    assert_eq!(reports[0]["df_score"], 2.0);
    assert_eq!(reports[1]["group"], "FP");
    assert!(reports[1]["df_score"].as_f64().unwrap() <= 1.0);

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("group,rank,region,voxel_count,M_r,category,score\n"));

    // Identical run is byte-identical under --no-timestamp.
    let again = dfocus(
        &[
            "dfscore",
            "--cohort",
            "cohort.tsv",
            "--labels",
            "ph/labels.nii.gz",
            "--regions",
            "ph/regions.tsv",
            "--csv",
            "report2.csv",
            "--no-timestamp",
        ],
        dir.path(),
    );
    assert_ok(&again);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn dfscore_rejects_empty_cohort_with_empty_group_message() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cohort.tsv"), "# no subjects\n").unwrap();
    let out = dfocus(&["dfscore", "--cohort", "cohort.tsv"], dir.path());
    assert!(!out.status.success());
    assert!(
        stderr_of(&out).contains("empty group"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn metrics_perfect_predictions_score_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("preds.csv"),
        "subject_id,true_label,score\na,1,0.9\nb,1,0.8\nc,0,0.2\nd,0,0.1\n",
    )
    .unwrap();
    let out = dfocus(
        &["metrics", "--predictions", "preds.csv", "--no-timestamp"],
        dir.path(),
    );
    assert_ok(&out);
    let metrics = &json_of(&out)["metrics"];
    for key in [
        "f1",
        "balanced_accuracy",
        "auroc",
        "auprc",
        "specificity",
        "sensitivity",
    ] {
        assert_eq!(metrics[key], 1.0, "{key}");
    }
}

#[test]
fn metrics_single_class_input_fails_clearly() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("preds.csv"),
        "subject_id,true_label,score\na,1,0.9\nb,1,0.8\n",
    )
    .unwrap();
    let out = dfocus(&["metrics", "--predictions", "preds.csv"], dir.path());
    assert!(!out.status.success());
    assert!(
        stderr_of(&out).contains("single class"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn mi_ranks_table_shaped_features_and_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("Left-Hippocampus_Volume_mm3,Left-Amygdala_NVoxels,label\n");
    for i in 0..40 {
        let label = i % 2;
        csv.push_str(&format!(
            "{},{},{label}\n",
            label * 100 + i,
            label * 50 + i * 2
        ));
    }
    std::fs::write(dir.path().join("features.csv"), csv).unwrap();
    let out = dfocus(
        &[
            "mi",
            "--features",
            "features.csv",
            "--bins",
            "4",
            "--top-k",
            "2",
            "--no-timestamp",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let mi = &json_of(&out)["mi"];
    assert_eq!(mi["df_score"], 2.0);
    assert_eq!(mi["entries"].as_array().unwrap().len(), 2);

    std::fs::write(
        dir.path().join("bad.csv"),
        "A_NVoxels,label\n1.0,0\nnot-a-number,1\n",
    )
    .unwrap();
    let bad = dfocus(&["mi", "--features", "bad.csv"], dir.path());
    assert!(!bad.status.success());
    assert!(stderr_of(&bad).contains("line 3"), "{}", stderr_of(&bad));
}

#[test]
fn augment_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let n = 6;
    let data: Vec<f64> = (0..n * n * n).map(|i| (i % 17) as f64).collect();
    let v = Volume3D::new((n, n, n), (1.0, 1.0, 1.0), data).unwrap();
    write_volume(&v, dir.path().join("in.nii"), ScalarKind::F32).unwrap();

    let args = [
        "augment",
        "--input",
        "in.nii",
        "--erode",
        "--crop",
        "4,4,4",
        "--rotate-max",
        "20",
        "--seed",
        "9",
        "--no-timestamp",
    ];
    let run = |out_name: &str| {
        let mut full = args.to_vec();
        full.extend_from_slice(&["--out", out_name]);
        assert_ok(&dfocus(&full, dir.path()));
        std::fs::read(dir.path().join(out_name)).unwrap()
    };
    let a = run("a.nii");
    let b = run("b.nii");
    assert_eq!(a, b);

    let cropped = read_volume(dir.path().join("a.nii")).unwrap();
    assert_eq!(cropped.dims(), (4, 4, 4));
    assert_eq!(cropped.scalar_kind(), ScalarKind::F32);
}

#[test]
fn phantom_outputs_reload_as_a_valid_label_map() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&dfocus(
        &[
            "phantom",
            "--standard-regions",
            "--out-dir",
            "ph",
            "--dump-spec",
        ],
        dir.path(),
    ));
    let labels = dfocus_core::tables::load_label_map(
        dir.path().join("ph/labels.nii.gz"),
        dir.path().join("ph/regions.tsv"),
    )
    .unwrap();
    assert_eq!(labels.region_count(), 28);

    let spec_text = std::fs::read_to_string(dir.path().join("ph/spec.json")).unwrap();
    let spec: dfocus_core::phantom::PhantomSpec = serde_json::from_str(&spec_text).unwrap();
    assert_eq!(spec, dfocus_core::phantom::standard_regions_spec());
}
