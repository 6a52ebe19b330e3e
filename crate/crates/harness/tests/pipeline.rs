mod common;

use std::collections::HashSet;

use common::{dataset, documents, extractor, labeled, spec, N_FIXED};
use mgtd_core::features::{AssembleOptions, RankMode};
use mgtd_core::sample::write_jsonl;
use mgtd_core::Label;
use mgtd_harness::{
    extract_features, make_validation_split, run_experiment, run_on_features, run_seed, Configuration,
    DetectorKind, EvalReport, ExperimentSpec, VALIDATION_RATIO,
};

#[test]
fn validation_split_holds_out_an_eighth() {
    let items = labeled(400, 400);
    let (train, valid) = make_validation_split(items.clone(), |s| s.label, 3).unwrap();
    assert_eq!((train.len(), valid.len()), (700, 100));
    let machine = valid.iter().filter(|s| s.label == Label::Machine).count();
    assert!(machine.abs_diff(50) <= 1);
    let again = make_validation_split(items, |s| s.label, 3).unwrap();
    assert_eq!(again, (train.clone(), valid.clone()));
    let ids: HashSet<_> = train.iter().map(|s| &s.sample_id).collect();
    assert!(valid.iter().all(|s| !ids.contains(&s.sample_id)));
}

#[test]
fn validation_split_needs_both_classes() {
    let err = make_validation_split(labeled(100, 7), |s| s.label, 0).unwrap_err();
    assert_eq!(err.code(), "too-few-samples");
    assert!(make_validation_split(labeled(8, 8), |s| s.label, 0).is_ok());
}

#[test]
fn overlapping_test_ids_are_rejected() {
    let pool = labeled(20, 20);
    let s = spec("a.jsonl", "b.json");
    let err = run_seed(&s, &pool, Some(&pool[..4]), 0).unwrap_err();
    assert_eq!(err.code(), "id-leakage");
}

#[test]
fn mismatched_test_layout_is_rejected() {
    let pool = labeled(20, 20);
    let mut test = labeled(25, 0).split_off(20);
    for (i, t) in test.iter_mut().enumerate() {
        t.sample_id = format!("t{i}");
    }
    let narrow: Vec<_> = test
        .iter()
        .map(|t| mgtd_core::features::apply_mask(t, &"p,r".parse().unwrap()).unwrap())
        .collect();
    let err = run_seed(&spec("a.jsonl", "b.json"), &pool, Some(&narrow), 0).unwrap_err();
    assert_eq!(err.code(), "feature-mismatch");
}

#[test]
fn missing_dataset_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&spec("absent.jsonl", "absent.json"), dir.path()).unwrap_err();
    // the backend is loaded first
    assert_eq!(err.code(), "io");
    let docs = documents();
    extractor(&docs).save(dir.path().join("m.json")).unwrap();
    let err = run_experiment(&spec("absent.jsonl", "m.json"), dir.path()).unwrap_err();
    assert_eq!(err.code(), "missing-dataset");
}

#[test]
fn in_domain_report_is_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let docs = documents();
    extractor(&docs).save(dir.path().join("m.json")).unwrap();
    write_jsonl(dir.path().join("d.jsonl"), &dataset(&docs, 5)).unwrap();

    let mut s = spec("d.jsonl", "m.json");
    s.seeds = vec![1, 2];
    let report = run_experiment(&s, dir.path()).unwrap();
    assert_eq!(report.runs.len(), 2);
    assert_eq!(report.validation_ratio, VALIDATION_RATIO);
    for run in &report.runs {
        // 80 samples: 64 train, then 56/8; 16 test
        assert_eq!((run.n_train, run.n_valid, run.n_test), (56, 8, 16));
        assert_eq!(run.history.len(), 3);
        assert!((0.0..=100.0).contains(&run.f_valid) && (0.0..=100.0).contains(&run.f_test));
        assert_eq!(run.confusion_test.tp + run.confusion_test.fp + run.confusion_test.tn + run.confusion_test.fn_, 16);
    }
    let mean = report.runs.iter().map(|r| r.f_test).sum::<f64>() / 2.0;
    assert!((report.f_test - mean).abs() < 1e-12);
    assert_eq!(report.spec, s);

    let mut again = run_experiment(&s, dir.path()).unwrap();
    again.wall_clock_secs = report.wall_clock_secs;
    assert_eq!(again.to_toml().unwrap(), report.to_toml().unwrap());
    let path = dir.path().join("r.toml");
    report.save(&path).unwrap();
    assert_eq!(EvalReport::load(&path).unwrap(), report);
}

#[test]
fn gltr_and_out_of_domain_runs() {
    let docs = documents();
    let (a, b) = docs.split_at(docs.len() / 2);
    let relabel = |d: &[mgtd_core::TextSample], p: &str| {
        d.iter()
            .map(|s| {
                let mut s = s.clone();
                s.id = format!("{p}{}", s.id);
                s
            })
            .collect::<Vec<_>>()
    };
    let (a, b) = (relabel(a, "a"), relabel(b, "b"));
    let backend = extractor(&docs);
    let opts = AssembleOptions::new(N_FIXED, RankMode::Log10).unwrap();
    let train = extract_features(&dataset(&a, 1), &backend, &opts).unwrap();
    let test = extract_features(&dataset(&b, 2), &backend, &opts).unwrap();
    assert!(train.rejected.is_empty() && test.rejected.is_empty());

    let mut s = spec("a.jsonl", "m.json");
    s.configuration = Configuration::OutOfDomain;
    s.test_data = Some("b.jsonl".into());
    s.detector = DetectorKind::Gltr;
    let report = run_on_features(&s, &train.features, Some(&test.features), "m", 0).unwrap();
    let run = &report.runs[0];
    assert_eq!((run.n_train, run.n_valid, run.n_test), (70, 10, 80));
    assert!(run.history.is_empty());
}

#[test]
fn spec_survives_toml() {
    let mut s = spec("d.jsonl", "m.json");
    s.feature_mask = "c".parse().unwrap();
    let back = ExperimentSpec::from_toml(&s.to_toml().unwrap()).unwrap();
    assert_eq!(back, s);
}
