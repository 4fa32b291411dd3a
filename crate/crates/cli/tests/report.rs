use fedclus_cli::report::{delta_pairs, ExperimentReport};
use fedclus_cli::{parse_config_str, Summary};
use fedclus_core::Algorithm;
use proptest::prelude::*;

proptest! {
    #[test]
    fn summary_is_ordered(values in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        let s = Summary::of(&values).unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.max);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(s.min, sorted[0]);
        prop_assert_eq!(s.max, *sorted.last().unwrap());
    }

    #[test]
    fn summary_ignores_input_order(mut values in prop::collection::vec(-10.0f64..10.0, 1..30)) {
        let a = Summary::of(&values).unwrap();
        values.reverse();
        prop_assert_eq!(a, Summary::of(&values).unwrap());
    }
}

#[test]
fn odd_length_median_is_middle_value() {
    let s = Summary::of(&[5.0, 1.0, 9.0, 3.0, 7.0]).unwrap();
    assert_eq!((s.q1, s.median), (3.0, 5.0));
}

#[test]
fn config_echo_round_trips() {
    let c = parse_config_str(
        r#"{"algorithms": ["fedavg", "fedclusavg_plus"], "seeds": [1, 2], "topology": {"q": 5},
            "model": {"mlp": {"hidden": 6}}, "weight_mode": "literal"}"#,
        &[],
    )
    .unwrap();
    let report = ExperimentReport::new(0, c.clone(), Vec::new());
    let back = ExperimentReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back.config, c);
    assert_eq!(back, report);
}

#[test]
fn every_listed_algorithm_gets_a_delta_partner() {
    let pairs = delta_pairs(&Algorithm::ALL);
    assert_eq!(pairs.len(), 3);
}
