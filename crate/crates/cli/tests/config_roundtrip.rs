use orthospline_cli::config::{parse_config, resolve, RawConfig};
use proptest::prelude::*;

fn partition() -> impl Strategy<Value = String> {
    prop_oneof![
        (1usize..200).prop_map(|n| format!("uniform:{n}")),
        (0u32..8).prop_map(|l| format!("dyadic:{}", 1usize << l)),
        (0.25f64..8.0, 1usize..60).prop_map(|(q, n)| format!("geometric:{q}:{n}")),
        (1usize..200, 0u64..1_000_000).prop_map(|(n, s)| format!("random:{n}:{s}")),
        (1usize..50).prop_map(|n| format!("random:{n}")),
    ]
}

fn function() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("sin".to_string()),
        Just("runge".to_string()),
        (0.05f64..0.95).prop_map(|c| format!("step:{c}")),
        (0.0f64..1.0, -0.9f64..2.0).prop_map(|(c, a)| format!("abspow:{c}:{a}")),
        (0u32..5).prop_map(|p| format!("pow:{p}")),
    ]
}

prop_compose! {
    fn raw_config()(
        k in 1usize..=4,
        partition in partition(),
        function in function(),
        levels in proptest::option::of(1usize..6),
        seed in proptest::option::of(0u64..(i64::MAX as u64)),
        eval_grid in proptest::option::of(1usize..5000),
        tol in proptest::option::of(1e-14f64..1e-3),
        thresholds in proptest::option::of(proptest::collection::vec(1e-3f64..10.0, 0..4)),
        points in proptest::option::of(proptest::collection::vec(0.0f64..=1.0, 0..5)),
    ) -> RawConfig {
        RawConfig {
            k: Some(k),
            partition: Some(partition),
            function: Some(function),
            levels,
            seed,
            eval_grid,
            tol,
            thresholds,
            points,
            ..Default::default()
        }
    }
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(raw in raw_config()) {
        let Ok(cfg) = resolve(raw) else {
            // e.g. a step function whose jump sits on a default probe
            return Ok(());
        };
        let text = cfg.to_toml();
        let again = parse_config(&text).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_toml(), text);
    }
}
