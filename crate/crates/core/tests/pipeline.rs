mod common;

use churnkit::pipeline::{run_pipeline, run_seed, Variant, STREAM_SPLIT};
use churnkit::tabular::{preprocess, split_indices, PreprocessConfig, RawTable};

#[test]
fn two_dataset_run_fills_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let a = common::write_toy_csv(dir.path(), "alpha", 240, 1);
    let b = common::write_toy_csv(dir.path(), "beta", 260, 2);
    let out = dir.path().join("out");
    let cfg = common::toy_config(&[a, b], &out);
    let outcome = run_pipeline(&cfg).unwrap();

    // 3 real variants once, 2 synthetic variants per run, 7 classifiers
    assert_eq!(outcome.records.len(), 2 * 7 * (3 + 2 * 2));
    for r in &outcome.records {
        assert!(r.error.is_none(), "{r:?}");
        assert!(r.metrics.accuracy.is_some());
        assert_eq!(r.epsilon.is_some(), r.variant.uses_synthetic());
        if let Some(eps) = r.epsilon {
            assert!(eps <= cfg.gan.epsilon_budget);
            assert!(r.run >= 1);
        } else {
            assert_eq!(r.run, 0);
        }
    }
    assert_eq!(outcome.manifest.runs.len(), 4);
    assert_eq!(outcome.report.summary.len(), 2 * 5 * 7);
    let w = outcome.report.wilcoxon.iter().find(|w| w.metric == "accuracy").expect("two datasets give a verdict");
    assert_eq!(w.pairs.len(), 14);
    assert!(w.result.is_some());

    for name in ["alpha", "beta"] {
        for f in ["client/train.csv", "client/test.csv", "cloud/run-01/synthetic.csv", "cloud/run-02/ledger.json"] {
            assert!(out.join(name).join(f).is_file(), "{name}/{f}");
        }
        assert!(out.join(name).join("cloud/run-01/encoder-gans-awoe.json").is_file());
        assert!(out.join(name).join("cloud/real/encoder-awoe.json").is_file());
    }
    for f in ["runs.csv", "summary.json", "ranks.json", "wilcoxon.json"] {
        assert!(out.join("reports").join(f).is_file(), "{f}");
    }
}

#[test]
fn test_rows_never_reach_the_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let original = common::write_toy_csv(dir.path(), "toy", 200, 5);
    let out_a = dir.path().join("a");
    let mut cfg = common::toy_config(&[original.clone()], &out_a);
    cfg.variants = vec![Variant::Raw, Variant::GansAwoe, Variant::Awoe];
    run_pipeline(&cfg).unwrap();

    let raw = RawTable::from_path(&original).unwrap();
    let data = preprocess(&raw, &PreprocessConfig::new("churn").with_drop_columns(["id"])).unwrap();
    let (_, test_idx) = split_indices(&data, cfg.train_fraction, run_seed(cfg.master_seed, STREAM_SPLIT, 0, 0)).unwrap();
    let mut rows = raw.rows.clone();
    let tenure = raw.column_index("tenure").unwrap();
    for &i in &test_idx {
        rows[i][tenure] = Some("999".into());
    }
    let perturbed_dir = dir.path().join("perturbed");
    std::fs::create_dir_all(&perturbed_dir).unwrap();
    let perturbed = perturbed_dir.join("toy.csv");
    RawTable {
        header: raw.header.clone(),
        rows,
    }
    .write_csv(&perturbed)
    .unwrap();

    let out_b = dir.path().join("b");
    cfg.datasets[0].path = perturbed;
    cfg.output_dir = out_b.clone();
    run_pipeline(&cfg).unwrap();

    assert_eq!(
        common::file_tree(&out_a.join("toy/cloud")),
        common::file_tree(&out_b.join("toy/cloud"))
    );
    assert_eq!(
        std::fs::read(out_a.join("toy/client/train.csv")).unwrap(),
        std::fs::read(out_b.join("toy/client/train.csv")).unwrap()
    );
    assert_ne!(
        std::fs::read(out_a.join("toy/client/test.csv")).unwrap(),
        std::fs::read(out_b.join("toy/client/test.csv")).unwrap()
    );
}
