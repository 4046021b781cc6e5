mod common;

use dbarcode_core::*;

fn data(separation: f64, seed: u64) -> SyntheticData {
    generate(&SyntheticSpec {
        classes: 6,
        per_class: 20,
        test_per_class: 4,
        dim: 16,
        separation,
        seed,
    })
    .unwrap()
}

fn all_two_stage_configs(n: usize) -> Vec<SearchConfig> {
    let mut out = Vec::new();
    for metric in [DistanceMetric::L1, DistanceMetric::L2] {
        for method in [
            BinarizationMethod::MinMax,
            BinarizationMethod::ZeroThreshold,
        ] {
            out.push(
                SearchConfig::new(SearchMode::TwoStage, metric)
                    .with_method(method)
                    .with_candidates(n),
            );
        }
        out.push(
            SearchConfig::new(SearchMode::ReducedBarcode, metric)
                .with_pca(8)
                .with_candidates(n),
        );
    }
    out
}

#[test]
fn final_match_is_a_stage_one_candidate() {
    let d = data(3.0, 1);
    for n in [1, 3, 17] {
        for cfg in all_two_stage_configs(n) {
            for r in run_search(&d.train, &d.test, &cfg).unwrap() {
                let stage1 = r.stage1.as_ref().unwrap();
                assert_eq!(stage1.len(), n);
                assert!(stage1.indices.contains(&r.index), "{cfg:?}");
            }
        }
    }
}

#[test]
fn rerank_distance_non_increasing_in_n() {
    let d = data(2.0, 2);
    for base in all_two_stage_configs(1) {
        let mut last: Option<Vec<f64>> = None;
        for n in [1, 2, 5, 10, 40, 120] {
            let cfg = base.with_candidates(n);
            let dist: Vec<f64> = run_search(&d.train, &d.test, &cfg)
                .unwrap()
                .iter()
                .map(|r| r.distance)
                .collect();
            if let Some(prev) = &last {
                for (now, before) in dist.iter().zip(prev) {
                    assert!(now <= before, "{cfg:?}");
                }
            }
            last = Some(dist);
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let d = data(4.0, 3);
    let cfgs = [
        SearchConfig::new(SearchMode::RealValued, DistanceMetric::L2),
        SearchConfig::new(SearchMode::ReducedReal, DistanceMetric::L1).with_pca(5),
        SearchConfig::new(SearchMode::BarcodeOnly, DistanceMetric::L1),
        SearchConfig::new(SearchMode::TwoStage, DistanceMetric::L1).with_candidates(9),
        SearchConfig::new(SearchMode::ReducedBarcode, DistanceMetric::L1)
            .with_pca(10)
            .with_candidates(9),
    ];
    for cfg in cfgs {
        let a = run_search(&d.train, &d.test, &cfg).unwrap();
        let single_thread = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single_thread.install(|| run_search(&d.train, &d.test, &cfg).unwrap());
        assert_eq!(a, b, "{cfg:?}");
    }
}

#[test]
fn reduced_real_matches_manual_projection() {
    let d = data(4.0, 4);
    let cfg = SearchConfig::new(SearchMode::ReducedReal, DistanceMetric::L2).with_pca(6);
    let results = run_search(&d.train, &d.test, &cfg).unwrap();
    let model = pca_fit(&d.train, 6).unwrap();
    let (tr, te) = (
        pca_transform(&model, &d.train).unwrap(),
        pca_transform(&model, &d.test).unwrap(),
    );
    for (q, r) in results.iter().enumerate() {
        assert_eq!(
            (r.index, r.distance),
            nearest(&tr, None, te.row(q), DistanceMetric::L2).unwrap()
        );
    }
}

#[test]
fn reduced_barcode_reranks_on_full_features() {
    let d = data(4.0, 5);
    let cfg = SearchConfig::new(SearchMode::ReducedBarcode, DistanceMetric::L1)
        .with_pca(8)
        .with_candidates(6);
    for (q, r) in run_search(&d.train, &d.test, &cfg)
        .unwrap()
        .iter()
        .enumerate()
    {
        let stage1 = r.stage1.as_ref().unwrap();
        let want = nearest(
            &d.train,
            Some(&stage1.indices),
            d.test.row(q),
            DistanceMetric::L1,
        )
        .unwrap();
        assert_eq!((r.index, r.distance), want);
    }
}

#[test]
fn pipeline_labels_feed_metrics() {
    let train = FeatureMatrix::from_rows(&[
        [1.0, 2.0, 3.0],
        [3.0, 2.0, 1.0],
        [0.0, 0.0, 1.0],
        [2.0, 2.0, 2.0],
    ])
    .unwrap();
    let test = FeatureMatrix::from_rows(&[[1.0, 2.0, 2.5]]).unwrap();
    let cfg = SearchConfig::new(SearchMode::TwoStage, DistanceMetric::L1).with_candidates(2);
    let results = run_search(&train, &test, &cfg).unwrap();
    let labels = labels_from_results(&results, &LabelVector::new(vec![9, 4, 4, 1])).unwrap();
    assert_eq!(labels.as_slice(), &[9]);
}
