use proptest::prelude::*;
use tpca_core::eval::{kappa, overall_accuracy};
use tpca_core::{ConfusionMatrix, NearestNeighbor, PcaModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metrics_invariant_under_relabeling(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 5..80),
        perm in Just([0u16, 1, 2, 3]).prop_shuffle(),
    ) {
        let ids = [3u16, 7, 11, 20];
        let truth: Vec<u16> = pairs.iter().map(|p| ids[p.0]).collect();
        let pred: Vec<u16> = pairs.iter().map(|p| ids[p.1]).collect();
        let cm = ConfusionMatrix::new(&ids, &truth, &pred).unwrap();
        let relabel = |v: &[u16]| -> Vec<u16> {
            v.iter().map(|l| 100 + perm[ids.iter().position(|x| x == l).unwrap()]).collect()
        };
        let mut new_ids: Vec<u16> = (0..4).map(|i| 100 + i).collect();
        new_ids.sort();
        let cm2 = ConfusionMatrix::new(&new_ids, &relabel(&truth), &relabel(&pred)).unwrap();
        prop_assert_eq!(overall_accuracy(&cm).unwrap(), overall_accuracy(&cm2).unwrap());
        match (kappa(&cm), kappa(&cm2)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn kappa_relation_holds() {
    let cm = ConfusionMatrix::from_counts(vec![1, 2, 3], vec![10, 2, 3, 4, 12, 1, 0, 5, 9]).unwrap();
    let oa = overall_accuracy(&cm).unwrap();
    let pe = cm.chance_agreement().unwrap();
    assert!((kappa(&cm).unwrap() - (oa - pe) / (1.0 - pe)).abs() < 1e-15);
}

#[test]
fn full_pca_preserves_nearest_neighbours() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dim = 6;
    let data: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let labels: Vec<u16> = (0..500).map(|_| rng.random_range(1..=4)).collect();
    let (train, test) = data.split_at(100);
    let model = PcaModel::fit(train).unwrap();
    let centre = |v: &Vec<f64>| -> Vec<f64> { v.iter().zip(model.mean()).map(|(a, b)| a - b).collect() };
    let raw_train: Vec<Vec<f64>> = train.iter().map(centre).collect();
    let raw_test: Vec<Vec<f64>> = test.iter().map(centre).collect();
    let pca_train: Vec<Vec<f64>> = train.iter().map(|v| model.transform(v, dim).unwrap().into_vec()).collect();
    let pca_test: Vec<Vec<f64>> = test.iter().map(|v| model.transform(v, dim).unwrap().into_vec()).collect();
    let a = NearestNeighbor::new(&raw_train, &labels[..100]).unwrap().classify_batch(&raw_test).unwrap();
    let b = NearestNeighbor::new(&pca_train, &labels[..100]).unwrap().classify_batch(&pca_test).unwrap();
    assert_eq!(a, b);
}
