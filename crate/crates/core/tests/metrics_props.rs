use kanhar_core::dataset::LabeledDataset;
use kanhar_core::kan::{KanNetwork, NetworkConfig};
use kanhar_core::metrics::{evaluate, parse_metrics_csv, render_report, EvalReport};
use proptest::prelude::*;

fn matrix(c: usize) -> impl Strategy<Value = Vec<Vec<u64>>> {
    proptest::collection::vec(proptest::collection::vec(0u64..30, c), c)
        .prop_filter("needs samples", |m| m.iter().flatten().sum::<u64>() > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn micro_averages_equal_accuracy(m in (2usize..7).prop_flat_map(matrix)) {
        let r = EvalReport::from_confusion(m.clone()).unwrap();
        prop_assert!((r.micro_precision() - r.accuracy).abs() < 1e-15);
        prop_assert!((r.micro_recall() - r.accuracy).abs() < 1e-15);
        let trace: u64 = (0..m.len()).map(|i| m[i][i]).sum();
        prop_assert_eq!(r.accuracy, trace as f64 / r.total() as f64);
        prop_assert_eq!(r.total(), m.iter().flatten().sum::<u64>());
        for v in r.precision.iter().chain(&r.recall).chain(&r.f1) {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn class_permutation_preserves_aggregates(m in matrix(4), rot in 1usize..4) {
        let c = 4;
        let perm: Vec<usize> = (0..c).map(|i| (i + rot) % c).collect();
        let mut pm = vec![vec![0; c]; c];
        for i in 0..c {
            for j in 0..c {
                pm[perm[i]][perm[j]] = m[i][j];
            }
        }
        let a = EvalReport::from_confusion(m).unwrap();
        let b = EvalReport::from_confusion(pm).unwrap();
        prop_assert!((a.accuracy - b.accuracy).abs() < 1e-15);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
        prop_assert!((a.macro_precision - b.macro_precision).abs() < 1e-12);
        prop_assert!((a.weighted_recall - b.weighted_recall).abs() < 1e-12);
        for i in 0..c {
            prop_assert_eq!(a.recall[i], b.recall[perm[i]]);
        }
    }

    #[test]
    fn report_csv_round_trips(m in matrix(5)) {
        let r = EvalReport::from_confusion(m).unwrap();
        let names = ["a", "bb", "ccc", "dddd", "e"];
        let out = render_report(&r, &names).unwrap();
        let (n, back) = parse_metrics_csv(&out.csv).unwrap();
        prop_assert_eq!(n, names);
        prop_assert_eq!(back, r);
    }
}

#[test]
fn shifting_scores_does_not_change_the_report() {
    let net = KanNetwork::new(&NetworkConfig::with_dims(&[3, 4, 3]), 6).unwrap();
    let features: Vec<Vec<f64>> = (0..30)
        .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64).cos(), i as f64 / 15.0 - 1.0])
        .collect();
    let data = LabeledDataset::new(features, (0..30).map(|i| i % 3).collect(), vec![1; 30]).unwrap();
    let a = evaluate(&net, &data).unwrap();
    let mut shifted = net.clone();
    let last = shifted.layers_mut().last_mut().unwrap();
    for b in last.bias_mut() {
        *b += 3.25;
    }
    assert_eq!(evaluate(&shifted, &data).unwrap(), a);
    assert_eq!(a.total(), 30);
    assert!(evaluate(&net, &LabeledDataset::default()).is_err());
}

#[test]
fn perfect_predictor() {
    let m = vec![vec![4, 0, 0], vec![0, 6, 0], vec![0, 0, 2]];
    let r = EvalReport::from_confusion(m).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert!(r.precision.iter().chain(&r.recall).chain(&r.f1).all(|&v| v == 1.0));
    assert_eq!((r.macro_f1, r.weighted_f1), (1.0, 1.0));
}
