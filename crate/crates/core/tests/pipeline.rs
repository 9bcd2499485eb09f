use proptest::prelude::*;

use tourist_core::dataset::{load_csv, standardize, CsvOptions};
use tourist_core::eval::datagen::{gen_gaussian_pair, gen_lozenge_scene, Separation, BLUE, RED};
use tourist_core::netbuild::build_training_network;
use tourist_core::*;

fn iris() -> LabeledDataset {
    let p = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
    load_csv(p, &CsvOptions::default()).unwrap()
}

fn gaussian_model(seed: u64) -> (HybridModel, LabeledDataset) {
    let ds = gen_gaussian_pair(Separation::Slight, 20, seed).unwrap();
    let train = ds.subset(&(0..15).chain(20..35).collect::<Vec<_>>());
    let test = ds.subset(&(15..20).chain(35..40).collect::<Vec<_>>());
    let model = HybridModel::fit(
        &train,
        &LowLevelSpec::WeightedKnn { k: 3 },
        NetConfig::new(2, 0.3),
        HighLevelConfig::new(0.5, 0.5, 4),
        Topology::Network,
    )
    .unwrap();
    (model, test)
}

#[test]
fn lozenge_flips_to_red_with_high_level_weight() {
    let scene = gen_lozenge_scene(7);
    let mut model = HybridModel::fit(
        &scene.train,
        &LowLevelSpec::WeightedKnn { k: 5 },
        NetConfig::new(2, 0.05),
        HighLevelConfig::new(0.5, 0.5, 5),
        Topology::Network,
    )
    .unwrap();
    let test = scene.test_dataset();
    let low = model.classify_batch(&test, &HybridConfig::new(0.0)).unwrap();
    let high = model.classify_batch(&test, &HybridConfig::new(0.9)).unwrap();
    assert!(low.decisions.iter().all(|d| d.label == BLUE));
    assert!(high.decisions.iter().all(|d| d.label == RED));
}

#[test]
fn edge_list_round_trip_on_iris() {
    let ds = standardize(iris());
    let g = build_training_network(&ds, &NetConfig::new(3, 0.2)).unwrap();
    let back = ClassNetwork::from_edge_list(&g.to_edge_list(), &ds).unwrap();
    assert_eq!(back.to_edge_list(), g.to_edge_list());
    assert_eq!(back.connected_components(), g.connected_components());
}

#[test]
fn classify_batch_discard_leaves_the_model_reusable() {
    let (mut model, test) = gaussian_model(3);
    let edges = model.high().network().edge_count();
    let a = model.classify_batch(&test, &HybridConfig::new(0.4)).unwrap();
    let b = model.classify_batch(&test, &HybridConfig::new(0.4)).unwrap();
    assert_eq!(a, b);
    assert_eq!(model.high().network().edge_count(), edges);
}

#[test]
fn absorb_grows_the_network_one_vertex_per_instance() {
    let (mut model, test) = gaussian_model(4);
    let before = model.high().network().vertex_count();
    model
        .classify_batch(&test, &HybridConfig::new(0.4).absorbing())
        .unwrap();
    assert_eq!(model.high().network().vertex_count(), before + test.len());
}

#[test]
fn iris_holdout_is_accurate() {
    let ds = standardize(iris());
    let test_idx: Vec<usize> = (0..ds.len()).filter(|i| i % 5 == 0).collect();
    let train_idx: Vec<usize> = (0..ds.len()).filter(|i| i % 5 != 0).collect();
    let mut model = HybridModel::fit(
        &ds.subset(&train_idx),
        &LowLevelSpec::WeightedKnn { k: 5 },
        NetConfig::new(3, 0.2),
        HighLevelConfig::new(0.5, 0.5, 10),
        Topology::Network,
    )
    .unwrap();
    let r = model
        .classify_batch(&ds.subset(&test_idx), &HybridConfig::new(0.2))
        .unwrap();
    assert!(r.accuracy.unwrap() >= 0.9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn absorbing_batch_matches_sequential_calls(seed in 0u64..1000, lambda in 0.0f64..=1.0) {
        let (mut batch, test) = gaussian_model(seed);
        let mut seq = batch.clone();
        let cfg = HybridConfig::new(lambda).absorbing();
        let r = batch.classify_batch(&test, &cfg).unwrap();
        for (i, d) in r.decisions.iter().enumerate() {
            prop_assert_eq!(d, &seq.classify_one(test.row(i), &cfg).unwrap());
        }
    }

    #[test]
    fn fused_membership_sums_to_one(seed in 0u64..1000, lambda in 0.0f64..=1.0) {
        let (mut model, test) = gaussian_model(seed);
        for d in model.classify_batch(&test, &HybridConfig::new(lambda)).unwrap().decisions {
            for m in [&d.low, &d.high, &d.fused] {
                prop_assert!((m.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
