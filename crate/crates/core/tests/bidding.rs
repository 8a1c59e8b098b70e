use flexbid_core::bidding::*;
use flexbid_core::scenarios::SampleSet;
use flexbid_core::CoreError;
use flexbid_solver::{brute_force_reference, solve_milp, Status};
use proptest::prelude::*;

fn params(epsilon: f64, theta: f64) -> RobustnessParams {
    RobustnessParams::new(epsilon, theta)
}

/// Random `B` matrix with `hours` columns, entries in [0, 20] kW.
fn minima(max_hours: usize, max_samples: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_hours, 2..=max_samples)
        .prop_flat_map(|(h, n)| prop::collection::vec(prop::collection::vec(0.0f64..=20.0, h), n))
}

fn eps() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.1, 0.2, 0.3, 0.4, 0.5])
}

fn objective(minima: &[Vec<f64>], p: &RobustnessParams) -> Option<f64> {
    let prices = PriceCurve::flat(minima[0].len(), 1.0);
    match solve_model(&build_from_minima(minima, &prices, p).unwrap()) {
        Ok(s) => Some(s.objective),
        Err(CoreError::Infeasible(_)) => None,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn model_dimensions() {
    let set = SampleSet::from_profiles(vec![vec![5.0; 1440]; 30], (0..30).collect()).unwrap();
    let m = build_drjcc_model(&set, &PriceCurve::default(), &params(0.1, 0.1)).unwrap();
    assert_eq!(m.milp.lp.num_vars(), 85);
    assert_eq!(m.milp.lp.num_rows(), 1 + 720 + 30);
    assert_eq!(m.milp.binaries.len(), 30);

    let m = build_from_minima(&[vec![3.0]], &PriceCurve::flat(1, 1.0), &params(0.5, 0.0)).unwrap();
    assert_eq!(m.milp.lp.num_vars(), 4);
    assert_eq!(m.milp.lp.num_rows(), 3);
}

#[test]
fn merged_model_shrinks_to_distinct_rows() {
    let b = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![1.0, 2.0], vec![1.0, 2.0]];
    let m = build_merged_model(&b, &PriceCurve::flat(2, 1.0), &params(0.5, 0.1)).unwrap();
    assert_eq!(m.milp.binaries.len(), 2);
    assert_eq!(m.group, vec![0, 1, 0, 0]);
    assert_eq!(m.minima, b);
}

/// One hour, B = [10, 8], eps = 0.5, M = 1000, bid_upper = 20.
fn micro(theta: f64) -> DrjccModel {
    let p = RobustnessParams { epsilon: 0.5, theta, big_m: Some(1000.0), bid_lower: 0.0, bid_upper: Some(20.0) };
    build_from_minima(&[vec![10.0], vec![8.0]], &PriceCurve::flat(1, 1.0), &p).unwrap()
}

#[test]
fn micro_instance_radius_zero() {
    // t = s = 0 satisfies the budget row with both samples flagged, so the
    // bid runs to its upper bound
    let m = micro(0.0);
    let bf = brute_force_reference(&m.milp).unwrap();
    assert!((bf.objective - 20.0).abs() < 1e-9);
    let s = solve_model(&m).unwrap();
    assert!((s.bids[0] - 20.0).abs() < 1e-6);
}

#[test]
fn micro_instance_radius_one() {
    // flagging one sample needs 0.5*2*t - t >= 2, impossible; with no flag
    // t >= 2 and p <= 8 - t
    let m = micro(1.0);
    let bf = brute_force_reference(&m.milp).unwrap();
    assert!((bf.objective - 6.0).abs() < 1e-9);
    let s = solve_model(&m).unwrap();
    assert!((s.bids[0] - 6.0).abs() < 1e-6);
    assert_eq!(s.certificate.q, vec![0.0, 0.0]);
}

#[test]
fn identical_samples_closed_form() {
    for theta in [0.1, 0.5] {
        let set = SampleSet::from_profiles(vec![vec![10.0; 1440]; 5], vec![0; 5]).unwrap();
        let s = optimize_bids(&set, &PriceCurve::default(), &params(0.1, theta)).unwrap();
        for &p in &s.bids {
            assert!((p - (10.0 - theta / 0.1)).abs() < 1e-6, "theta {theta}: bid {p}");
        }
        let m = build_drjcc_model(&set, &PriceCurve::default(), &params(0.1, theta)).unwrap();
        let bf = brute_force_reference(&m.milp).unwrap();
        assert!((bf.objective - 24.0 * (10.0 - theta / 0.1)).abs() < 1e-6);
    }
}

#[test]
fn budget_infeasibility_is_diagnosed() {
    let b = vec![vec![4.0, 6.0], vec![5.0, 2.0], vec![3.0, 9.0]];
    let limit = max_feasible_theta(&b, 0.3, 0.0);
    // margins 4, 2, 3: the budget mean_i min(t, g_i) - 0.7 t peaks at t = 2
    assert!((limit - 0.6).abs() < 1e-12);
    assert!(objective(&b, &params(0.3, limit - 1e-6)).is_some());
    let err = solve_model(&build_from_minima(&b, &PriceCurve::flat(2, 1.0), &params(0.3, limit + 1e-3)).unwrap())
        .unwrap_err();
    match err {
        CoreError::Infeasible(Infeasibility::BudgetRow { max_feasible_theta, .. }) => {
            assert!((max_feasible_theta - limit).abs() < 1e-12)
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn without_upper_bound_big_m_caps_the_flagged_bid() {
    // theta = 0 lets every sample be flagged; the bid is then limited only
    // by B + M of the lowest sample
    let p = RobustnessParams { bid_upper: Some(f64::INFINITY), ..params(0.2, 0.0) };
    let m = build_from_minima(&[vec![1.0], vec![2.0]], &PriceCurve::flat(1, 1.0), &p).unwrap();
    let s = solve_model(&m).unwrap();
    assert_eq!(s.params.big_m, 3.0);
    assert!((s.bids[0] - 4.0).abs() < 1e-9);
    assert_eq!(s.certificate.q, vec![1.0, 1.0]);
}

#[test]
fn smallest_feasible_theta_picks_first_feasible() {
    let set = SampleSet::from_profiles(vec![vec![2.0; 1440]; 4], vec![0; 4]).unwrap();
    let prices = PriceCurve::default();
    // identical samples at 2 kW, eps 0.1: feasible iff theta <= 0.2
    match smallest_feasible_theta(&set, &prices, &params(0.1, 0.0), &[0.01]).unwrap() {
        ThetaSelection::Feasible { theta, .. } => assert_eq!(theta, 0.01),
        other => panic!("{other:?}"),
    }
    match smallest_feasible_theta(&set, &prices, &params(0.1, 0.0), &[0.5, 1.0]).unwrap() {
        ThetaSelection::NoneFeasible { tried } => assert_eq!(tried, vec![0.5, 1.0]),
        other => panic!("{other:?}"),
    }
    assert!(smallest_feasible_theta(&set, &prices, &params(0.1, 0.0), &[]).is_err());
    assert!(smallest_feasible_theta(&set, &prices, &params(0.1, 0.0), &[0.2, 0.1]).is_err());
}

#[test]
fn schedule_json_round_trip() {
    let set = SampleSet::from_profiles(vec![vec![3.0; 1440]; 2], vec![1, 2]).unwrap();
    let s = optimize_bids(&set, &PriceCurve::default(), &params(0.1, 0.1)).unwrap();
    let text = serde_json::to_string(&s).unwrap();
    assert!(!text.contains("wall_time"));
    let back: BidSchedule = serde_json::from_str(&text).unwrap();
    assert_eq!(back.bids, s.bids);
    assert_eq!(back.certificate, s.certificate);
}

#[test]
fn invalid_parameters_are_rejected() {
    let b = [vec![1.0]];
    let prices = PriceCurve::flat(1, 1.0);
    for p in [
        params(0.0, 0.1),
        params(1.0, 0.1),
        params(0.1, -1.0),
        RobustnessParams { big_m: Some(0.0), ..params(0.1, 0.1) },
        RobustnessParams { bid_lower: 2.0, bid_upper: Some(1.0), ..params(0.1, 0.1) },
    ] {
        assert!(matches!(build_from_minima(&b, &prices, &p), Err(CoreError::InvalidConfig(_))), "{p:?}");
    }
    assert!(build_from_minima(&[vec![f64::NAN]], &prices, &params(0.1, 0.1)).is_err());
    assert!(build_from_minima(&[vec![1.0, 2.0]], &prices, &params(0.1, 0.1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn branch_and_bound_matches_enumeration(
        b in minima(4, 8),
        epsilon in eps(),
        theta in prop::sample::select(vec![0.0, 0.1, 1.0]),
    ) {
        let m = build_from_minima(&b, &PriceCurve::flat(b[0].len(), 1.0), &params(epsilon, theta)).unwrap();
        let bb = solve_milp(&m.milp).unwrap();
        let bf = brute_force_reference(&m.milp).unwrap();
        prop_assert_eq!(bb.status, bf.status);
        if bb.status == Status::Optimal {
            prop_assert!((bb.objective - bf.objective).abs() <= 1e-6);
        }
    }

    #[test]
    fn merging_duplicates_is_exact(
        b in minima(3, 5),
        picks in prop::collection::vec(0usize..5, 2..12),
        epsilon in eps(),
        theta in prop::sample::select(vec![0.0, 0.1, 0.5]),
    ) {
        let rows: Vec<Vec<f64>> = picks.iter().map(|&k| b[k % b.len()].clone()).collect();
        let prices = PriceCurve::flat(rows[0].len(), 1.0);
        let p = params(epsilon, theta);
        let full = solve_model(&build_from_minima(&rows, &prices, &p).unwrap());
        let merged = solve_model(&build_merged_model(&rows, &prices, &p).unwrap());
        match (full, merged) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a.objective - b.objective).abs() <= 1e-6);
                prop_assert!(certificate_violation(&b, &rows) <= CERTIFICATE_TOL);
            }
            (Err(CoreError::Infeasible(_)), Err(CoreError::Infeasible(_))) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|s| s.objective), b.map(|s| s.objective)),
        }
    }

    #[test]
    fn objective_non_increasing_in_theta(b in minima(3, 6), epsilon in eps()) {
        let mut last = f64::INFINITY;
        for theta in [0.0, 0.05, 0.1, 0.3, 0.6, 1.0, 2.0] {
            let z = objective(&b, &params(epsilon, theta)).unwrap_or(f64::NEG_INFINITY);
            prop_assert!(z <= last + 1e-6, "theta {}: {} after {}", theta, z, last);
            last = z;
        }
    }

    #[test]
    fn objective_non_decreasing_in_epsilon(b in minima(3, 6), theta in prop::sample::select(vec![0.0, 0.1, 0.5])) {
        let mut last = f64::NEG_INFINITY;
        for epsilon in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7] {
            let z = objective(&b, &params(epsilon, theta)).unwrap_or(f64::NEG_INFINITY);
            prop_assert!(z >= last - 1e-6, "epsilon {}: {} after {}", epsilon, z, last);
            last = z;
        }
    }

    #[test]
    fn in_sample_guarantee_and_certificate(
        b in minima(4, 8),
        epsilon in eps(),
        theta in prop::sample::select(vec![0.01, 0.1, 0.5, 1.0]),
    ) {
        let prices = PriceCurve::flat(b[0].len(), 1.0);
        if let Ok(s) = solve_model(&build_merged_model(&b, &prices, &params(epsilon, theta)).unwrap()) {
            let violated = s.violated_samples(&b).len();
            prop_assert!((violated as f64) <= epsilon * b.len() as f64, "{} of {} violated", violated, b.len());
            prop_assert!(certificate_violation(&s, &b) <= CERTIFICATE_TOL);
            let r = s.params;
            prop_assert!(s.bids.iter().all(|&p| p >= r.bid_lower && p <= r.bid_upper));
        }
    }

    #[test]
    fn minute_rows_match_hourly_minima(
        profiles in prop::collection::vec(prop::collection::vec(0.0f64..=20.0, 120), 1..=3),
        epsilon in eps(),
        theta in prop::sample::select(vec![0.0, 0.1, 0.5]),
    ) {
        let prices = PriceCurve::flat(2, 1.0);
        let hourly: Vec<Vec<f64>> = profiles
            .iter()
            .map(|p| p.chunks(60).map(|h| h.iter().copied().fold(f64::INFINITY, f64::min)).collect())
            .collect();
        let a = solve_model(&build_minute_model(&profiles, &prices, &params(epsilon, theta)).unwrap());
        let b = solve_model(&build_from_minima(&hourly, &prices, &params(epsilon, theta)).unwrap());
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a.objective - b.objective).abs() <= 1e-9),
            (Err(CoreError::Infeasible(_)), Err(CoreError::Infeasible(_))) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|s| s.objective), b.map(|s| s.objective)),
        }
    }
}
