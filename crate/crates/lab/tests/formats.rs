use csb_core::{CsbInstance, Mode};
use csb_lab::experiment::confidence_interval;
use csb_lab::instance::{parse_instance, InstanceSpec};
use csb_lab::kv::KeyValues;
use proptest::prelude::*;

fn spec() -> impl Strategy<Value = InstanceSpec> {
    (1usize..12)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.0f64..=1.0, k),
                prop::collection::vec(0.01f64..=1.0, k),
                1.0f64..5.0,
                any::<bool>(),
                prop::option::of(0.001f64..0.5),
            )
        })
        .prop_map(|(mu, theta, q, reward, gamma)| {
            let mode = if reward { Mode::Reward } else { Mode::Loss };
            InstanceSpec {
                label: "generated".into(),
                instance: CsbInstance::new(mu, theta, q, mode).unwrap(),
                gamma,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn instance_files_round_trip(spec in spec()) {
        let text = spec.render();
        let back = parse_instance(&text, "generated").unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(back.hash(), spec.hash());
    }

    #[test]
    fn interval_shrinks_with_more_identical_batches(samples in prop::collection::vec(-100.0f64..100.0, 2..40)) {
        let (mean, half) = confidence_interval(&samples).unwrap();
        let doubled: Vec<f64> = samples.iter().chain(&samples).copied().collect();
        let (mean2, half2) = confidence_interval(&doubled).unwrap();
        prop_assert!((mean - mean2).abs() <= 1e-9 * (1.0 + mean.abs()));
        prop_assert!(half2 <= half + 1e-12);
        prop_assert!(half >= 0.0);
    }

    #[test]
    fn unknown_keys_are_always_named(key in "[a-z]{3,10}") {
        prop_assume!(key != "horizon");
        let mut kv = KeyValues::parse(&format!("horizon = 5\n{key} = 1\n")).unwrap();
        kv.take("horizon");
        let err = kv.finish().unwrap_err().to_string();
        prop_assert!(err.contains(&key), "{}", err);
    }
}
