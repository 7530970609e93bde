use proptest::prelude::*;

use wsobolev::harness::{
    classify_trend, r0_scaling_probe, run_estimate_check, EstimateId, EstimateSpec, SuiteReport, Trend,
};

fn coarse(id: EstimateId) -> EstimateSpec {
    EstimateSpec::new(id).with_ladder(vec![0.1, 0.05, 0.025])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scaling_the_solution_leaves_the_constant_alone(c in 0.05f64..20.0, id in 0usize..2) {
        let id = [EstimateId::W2pGlobal, EstimateId::Apriori][id];
        let base = run_estimate_check(&coarse(id), 3).unwrap();
        prop_assert_eq!(base.params.get("tau0").copied().unwrap_or(0.0), 0.0);
        let scaled = run_estimate_check(&coarse(id).with_param("scale", c), 3).unwrap();
        for (a, b) in base.n_emp_series.iter().zip(&scaled.n_emp_series) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn value_coefficient_follows_minus_two_p(p in 2.5f64..8.0) {
        let probe = r0_scaling_probe(2, p, &[1.0, 0.5, 0.25], 0.05).unwrap();
        prop_assert!(probe.matches(0.15), "slope {} for p = {p}", probe.value_slope);
        prop_assert!(probe.f_slope.abs() < 0.15 * 2.0 * p, "F slope {}", probe.f_slope);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trend_ignores_positive_rescaling(s in prop::collection::vec(0.01f64..100.0, 3..8), c in 0.001f64..1000.0) {
        let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
        let (a, b) = (classify_trend(&s), classify_trend(&scaled));
        // rescaling can only move a series across a threshold by rounding
        let max = s.iter().copied().fold(0.0, f64::max);
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        let near = (max / min - 1.25).abs() < 1e-9 || (s[s.len() - 1] / s[0] - 2.0).abs() < 1e-9;
        prop_assert!(a == b || near);
    }

    #[test]
    fn bounded_exactly_when_spread_is_small(s in prop::collection::vec(0.01f64..100.0, 3..8)) {
        let max = s.iter().copied().fold(0.0, f64::max);
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(classify_trend(&s) == Trend::Bounded, max / min < 1.25);
    }

    #[test]
    fn diverging_series_grow_monotonically(s in prop::collection::vec(0.01f64..100.0, 3..8)) {
        if classify_trend(&s) == Trend::Diverging {
            prop_assert!(s.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(s[s.len() - 1] / s[0] > 2.0);
        }
    }
}

fn sample_report() -> SuiteReport {
    let entries = vec![
        run_estimate_check(&EstimateSpec::new(EstimateId::MaxWeak), 5).unwrap(),
        run_estimate_check(&coarse(EstimateId::W2pGlobal), 5).unwrap(),
    ];
    SuiteReport::new("sample", 5, entries)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn report_json_round_trips(values in prop::collection::vec(prop_oneof![
        any::<f64>(),
        Just(f64::INFINITY),
        Just(f64::NEG_INFINITY),
        Just(f64::NAN),
        -1e300f64..1e300,
    ], 4)) {
        let mut r = sample_report();
        r.entries[0].n_emp = values[0];
        r.entries[0].lhs = values[1];
        r.entries[1].n_emp_series[0] = values[2];
        r.entries[1].params.insert("extra".into(), values[3]);
        let json = r.to_json().unwrap();
        let back = SuiteReport::from_json(&json).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), json);
        prop_assert_eq!(back.to_csv().unwrap(), r.to_csv().unwrap());
    }
}

#[test]
fn csv_has_one_row_per_entry_and_spacing() {
    let r = sample_report();
    let csv = r.to_csv().unwrap();
    let runs: usize = r.entries.iter().map(|e| e.runs.len()).sum();
    assert_eq!(csv.lines().count(), runs + 1);
    assert!(csv.starts_with("id,name,ladder_kind,value"));
}

#[test]
fn newer_schema_is_rejected() {
    let r = sample_report();
    let json = r.to_json().unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(SuiteReport::from_json(&json).is_err());
    assert!(SuiteReport::from_json("{ not json").is_err());
}
