use kanhar_core::dataset::{
    generate_synthetic, make_windows, split_by_subject, synthetic_recordings, window_count, Activity, SplitConfig,
    SyntheticConfig,
};
use kanhar_core::features::extract_features;
use proptest::prelude::*;

#[test]
fn well_separated_classes_have_disjoint_rms() {
    // walking vs jogging differ by ~4x in amplitude
    let cfg = SyntheticConfig {
        class_count: 4,
        windows_per_class: 10,
        ..Default::default()
    };
    let windows = generate_synthetic(&cfg).unwrap();
    let rms = |a: Activity| -> Vec<f64> {
        windows
            .iter()
            .filter(|w| w.activity == a)
            .map(|w| extract_features(w).unwrap().values[12 + 5])
            .collect()
    };
    let walking = rms(Activity::Walking);
    let jogging = rms(Activity::Jogging);
    let walk_max = walking.iter().cloned().fold(f64::MIN, f64::max);
    let jog_min = jogging.iter().cloned().fold(f64::MAX, f64::min);
    assert!(walk_max < jog_min, "{walk_max} vs {jog_min}");
}

#[test]
fn noiseless_windows_differ_only_by_phase() {
    let cfg = SyntheticConfig {
        windows_per_class: 3,
        subjects: vec![5],
        noise_std: 0.0,
        subject_variation: 0.0,
        window_len: 250,
        ..Default::default()
    };
    let windows = generate_synthetic(&cfg).unwrap();
    // every window of a class is the same periodic signal: same range per axis
    for a in Activity::ALL.iter().filter(|a| a.index() < 4) {
        let ranges: Vec<f64> = windows
            .iter()
            .filter(|w| w.activity == *a)
            .map(|w| extract_features(w).unwrap().values[7])
            .collect();
        for r in &ranges {
            assert!((r - ranges[0]).abs() < 2e-2 * ranges[0], "{a}: {ranges:?}");
        }
    }
}

#[test]
fn recordings_window_and_split() {
    let cfg = SyntheticConfig {
        subjects: (1..=24).collect(),
        ..Default::default()
    };
    let recs = synthetic_recordings(&cfg, 300).unwrap();
    assert_eq!(recs.len(), 24 * 6);
    let windows = make_windows(&recs, 128, 64).unwrap();
    assert_eq!(windows.len(), 24 * 6 * 3);
    let (train, test) = split_by_subject(&windows, &SplitConfig::default()).unwrap();
    let train_ids: std::collections::BTreeSet<u32> = train.iter().map(|w| w.subject_id).collect();
    let test_ids: std::collections::BTreeSet<u32> = test.iter().map(|w| w.subject_id).collect();
    assert_eq!((train_ids.len(), test_ids.len()), (19, 5));
    assert!(train_ids.is_disjoint(&test_ids));
}

proptest! {
    #[test]
    fn window_conservation(lens in proptest::collection::vec(0usize..400, 1..6), wl in 2usize..150, stride in 1usize..100) {
        let recs: Vec<_> = lens
            .iter()
            .enumerate()
            .map(|(i, &n)| kanhar_core::dataset::Recording {
                subject_id: (i % 24) as u32 + 1,
                activity: Activity::Walking,
                trial_id: 1,
                samples: vec![[0.0; 3]; n],
            })
            .collect();
        let w = make_windows(&recs, wl, stride).unwrap();
        let want: usize = lens.iter().map(|&n| window_count(n, wl, stride)).sum();
        let direct: usize = lens.iter().filter(|&&n| n >= wl).map(|&n| (n - wl) / stride + 1).sum();
        prop_assert_eq!(w.len(), want);
        prop_assert_eq!(want, direct);
    }

    #[test]
    fn splits_are_subject_disjoint(train in proptest::collection::btree_set(1u32..=24, 0..24)) {
        let test: Vec<u32> = (1..=24).filter(|s| !train.contains(s)).take(7).collect();
        let cfg = SplitConfig::new(train.iter().copied(), test).unwrap();
        let windows = generate_synthetic(&SyntheticConfig { windows_per_class: 1, class_count: 2, window_len: 8, ..Default::default() }).unwrap();
        let (a, b) = split_by_subject(&windows, &cfg).unwrap();
        let sa: std::collections::BTreeSet<u32> = a.iter().map(|w| w.subject_id).collect();
        let sb: std::collections::BTreeSet<u32> = b.iter().map(|w| w.subject_id).collect();
        prop_assert!(sa.is_disjoint(&sb));
    }
}
