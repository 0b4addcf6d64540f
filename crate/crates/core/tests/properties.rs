use graph_cpd::detectors::{
    localize, mle_p1, plug_in_statistic, run_to_alarm, Clamp, CusumState, GlrDetector, GlrWindowConfig, P1Mode,
};
use graph_cpd::evaluation::{estimate_arl, simulate_profiles, tradeoff_curve, CurveOptions, DetectorConfig};
use graph_cpd::graph::{
    pair_count, pair_index, pair_table, sample_sequence, ChangePoint, ChangeScenario, ErParams, RandomSource,
};
use graph_cpd::likelihood::{bernoulli_kl, snapshot_llr, window_llr, EdgeCountMatrix, LlrWeights};
use graph_cpd::scan::{
    brute_force_densest, enumerate_candidates, greedy_densest, ScanMode, WeightedPairGraph,
};
use graph_cpd::snapshot_io::{write_sequence, SnapshotReader};
use proptest::prelude::*;

fn er(p: f64) -> ErParams {
    ErParams::new(p).unwrap()
}

fn scenario(n: usize, size: usize, p0: f64, p1: f64, cp: ChangePoint) -> ChangeScenario {
    ChangeScenario::with_leading_community(n, size, p0, p1, cp).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_index_is_a_bijection(n in 2usize..40) {
        let table = pair_table(n);
        prop_assert_eq!(table.len(), pair_count(n));
        for (p, &(i, j)) in table.iter().enumerate() {
            prop_assert!(i < j);
            prop_assert_eq!(pair_index(n, i, j), p);
        }
    }

    #[test]
    fn snapshot_files_round_trip(n in 3usize..12, horizon in 1usize..6, p in 0.05f64..0.6, seed in any::<u64>()) {
        let s = scenario(n, 2, p, 0.9, ChangePoint::At(2));
        let graphs = sample_sequence(&s, horizon, RandomSource::new(seed)).unwrap();
        let mut bytes = Vec::new();
        write_sequence(&mut bytes, &graphs).unwrap();
        let back = SnapshotReader::new(bytes.as_slice()).read_all().unwrap();
        prop_assert_eq!(&back, &graphs);
        let mut again = Vec::new();
        write_sequence(&mut again, &back).unwrap();
        prop_assert_eq!(bytes, again);
    }

    #[test]
    fn window_llr_is_a_sum_of_snapshots(seed in any::<u64>(), k in 1u64..8, len in 1u64..8) {
        let s = scenario(9, 4, 0.3, 0.7, ChangePoint::At(4));
        let graphs = sample_sequence(&s, 16, RandomSource::new(seed)).unwrap();
        let counts = EdgeCountMatrix::from_snapshots(&graphs).unwrap();
        let w = LlrWeights::new(er(0.3), er(0.7)).unwrap();
        let v = [1, 3, 4, 8];
        let t = k + len - 1;
        let direct: f64 = (k..=t).map(|i| snapshot_llr(&graphs[i as usize - 1], &v, &w).unwrap()).sum();
        let got = window_llr(&counts, k, t, &v, &w).unwrap();
        prop_assert!((got - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        if len == 1 {
            prop_assert_eq!(got, snapshot_llr(&graphs[k as usize - 1], &v, &w).unwrap());
        }
    }

    #[test]
    fn greedy_never_beats_exact(seed in any::<u64>(), n in 2usize..5) {
        let g = sample_sequence(&scenario(10, 2, 0.4, 0.5, ChangePoint::Never), 6, RandomSource::new(seed)).unwrap();
        let w = EdgeCountMatrix::from_snapshots(&g).unwrap().window_weights(1, 6).unwrap();
        let exact = brute_force_densest(&w, n, 10_000).unwrap();
        let greedy = greedy_densest(&w, n);
        prop_assert_eq!(greedy.len(), n);
        prop_assert!(w.internal_weight(&greedy) <= w.internal_weight(&exact));
    }

    #[test]
    fn unknown_p1_statistic_is_window_kl(present in 1u64..499, p0 in 0.05f64..0.95) {
        let slots = 500;
        let (u, q) = plug_in_statistic(present, slots, er(p0), Clamp::HalfCount);
        prop_assert_eq!(q, present as f64 / slots as f64);
        let kl = slots as f64 * bernoulli_kl(q, p0).unwrap();
        prop_assert!((u - kl).abs() <= 1e-10 * kl.abs().max(1e-300) || (u - kl).abs() < 1e-12);
    }
}

#[test]
fn stopping_times_are_monotone_in_threshold() {
    let s = scenario(10, 3, 0.25, 0.6, ChangePoint::At(15));
    let cands = enumerate_candidates(10, 3, 1_000).unwrap();
    let w = LlrWeights::new(er(0.25), er(0.6)).unwrap();
    for seed in 0..5 {
        let graphs = sample_sequence(&s, 60, RandomSource::new(seed)).unwrap();
        let mut prev_glr = 0;
        let mut prev_cusum = 0;
        for b in [0.5, 2.0, 4.0, 6.0, 9.0, 12.0] {
            let cfg = GlrWindowConfig::new(1, 12, b, ScanMode::Exhaustive, P1Mode::Known).unwrap();
            let mut glr = GlrDetector::new(&cfg, &cands, er(0.25), Some(er(0.6))).unwrap();
            let t = run_to_alarm(&mut glr, &graphs, b).unwrap().time();
            assert!(t >= prev_glr, "GLR stop {t} < {prev_glr} at b={b}");
            prev_glr = t;
            let mut cusum = CusumState::new(10, &[0, 1, 2], w, b).unwrap();
            let t = run_to_alarm(&mut cusum, &graphs, b).unwrap().time();
            assert!(t >= prev_cusum);
            prev_cusum = t;
        }
    }
}

#[test]
fn tradeoff_points_increase_with_threshold() {
    let s = scenario(10, 3, 0.2, 0.5, ChangePoint::Never);
    let glr = DetectorConfig::Glr {
        window: GlrWindowConfig::new(1, 10, 0.0, ScanMode::Exhaustive, P1Mode::Known).unwrap(),
        candidates: enumerate_candidates(10, 3, 1_000).unwrap(),
    };
    let cusum = DetectorConfig::Cusum { target: vec![0, 1, 2] };
    let options = CurveOptions {
        replications_arl: 60,
        replications_edd: 60,
        horizon_arl: 2_000,
        horizon_edd: 500,
        seed: 5,
    };
    let grid = [6.0, 1.0, 3.0, 4.5];
    let pts = tradeoff_curve(&[cusum, glr], &s, &grid, &options).unwrap();
    assert_eq!(pts.len(), 8);
    for pair in pts.windows(2).filter(|w| w[0].detector == w[1].detector) {
        assert!(pair[0].threshold < pair[1].threshold);
        assert!(pair[1].arl.mean >= pair[0].arl.mean);
        assert!(pair[1].edd.mean >= pair[0].edd.mean);
    }
    let single = tradeoff_curve(&[DetectorConfig::Cusum { target: vec![0, 1, 2] }], &s, &[2.0], &options).unwrap();
    assert_eq!(single.len(), 1);
}

#[test]
fn exhaustive_scan_dominates_greedy_and_oracle() {
    let s = scenario(11, 4, 0.2, 0.55, ChangePoint::At(1));
    let w = LlrWeights::new(er(0.2), er(0.55)).unwrap();
    let cands = enumerate_candidates(11, 4, 10_000).unwrap();
    for seed in 0..20 {
        let graphs = sample_sequence(&s, 8, RandomSource::new(seed)).unwrap();
        let counts = EdgeCountMatrix::from_snapshots(&graphs).unwrap();
        for (k, t) in [(1, 8), (3, 6), (5, 5)] {
            let ex = localize(&counts, k, t, &cands, &w).unwrap().unwrap();
            let gr = localize(&counts, k, t, &cands.clone().into_greedy(), &w).unwrap().unwrap();
            assert!(ex.statistic >= gr.statistic);
            let oracle = window_llr(&counts, k, t, &[0, 1, 2, 3], &w).unwrap();
            assert!(ex.statistic >= oracle);
        }
    }
}

#[test]
fn mle_rate_concentrates() {
    // 50 steps of 10 pairs at p1 = 0.5: p̂ within three standard errors
    let s = scenario(20, 5, 0.2, 0.5, ChangePoint::At(1));
    let mut inside = 0;
    for seed in 0..200 {
        let graphs = sample_sequence(&s, 50, RandomSource::new(seed)).unwrap();
        let counts = EdgeCountMatrix::from_snapshots(&graphs).unwrap();
        let q = mle_p1(&counts, 1, 50, &[0, 1, 2, 3, 4], Clamp::HalfCount).unwrap();
        inside += usize::from((q - 0.5).abs() <= 3.0 * (0.25f64 / 500.0).sqrt());
    }
    assert!(inside >= 195, "{inside}/200");
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let s = scenario(8, 3, 0.2, 0.5, ChangePoint::Never);
    let cfg = DetectorConfig::Glr {
        window: GlrWindowConfig::new(1, 8, 0.0, ScanMode::Greedy, P1Mode::Known).unwrap(),
        candidates: enumerate_candidates(8, 3, 1_000).unwrap(),
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_arl(&cfg, &s, 4.0, 40, 1_000, 9).unwrap())
    };
    assert_eq!(run(1), run(3));
    let a = simulate_profiles(&cfg, &s, 10, 200, 3.0, 1).unwrap();
    let b = simulate_profiles(&cfg, &s, 10, 200, 3.0, 1).unwrap();
    assert_eq!(a.profiles(), b.profiles());
}

#[test]
fn zero_weights_pick_lowest_indices() {
    let w = WeightedPairGraph::new(9);
    assert_eq!(greedy_densest(&w, 4), vec![0, 1, 2, 3]);
    assert_eq!(brute_force_densest(&w, 3, 1_000).unwrap(), vec![0, 1, 2]);
}
