use feddw_core::data::DatasetSpec;
use feddw_core::feddw::{RegMode, RegularizerConfig};
use feddw_core::fl::{RunConfig, Strategy as FlStrategy};
use feddw_core::nn::ModelSpec;
use feddw_harness::{config_from_str, emit_config, parse_config, HarnessError, Overrides, Preset};
use proptest::prelude::*;

fn key_of(err: HarnessError) -> String {
    match err {
        HarnessError::Config { key, .. } => key,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn empty_file_with_practical_preset() {
    let cfg = parse_config(Some(Preset::Practical), Some(""), &Overrides::default()).unwrap();
    assert_eq!(cfg.beta, 0.5);
    assert_eq!(cfg.participation_rate, 1.0);
    assert_eq!(cfg.learning_rate, 0.001);
    assert_eq!(cfg.batch_size, 128);
    assert_eq!(cfg.strategy.mu(), 0.1);
}

#[test]
fn pathological_preset() {
    let cfg = parse_config(Some(Preset::Pathological), None, &Overrides::default()).unwrap();
    assert_eq!(cfg.beta, 0.1);
    assert_eq!(cfg.participation_rate, 0.5);
}

#[test]
fn every_preset_resolves() {
    for p in feddw_harness::preset::ALL {
        let cfg = parse_config(Some(p), None, &Overrides::default()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(p.name().parse::<Preset>().unwrap(), p);
    }
    assert!("nope".parse::<Preset>().is_err());
}

#[test]
fn negative_mu_is_a_config_error() {
    let err = config_from_str("[strategy]\nkind = \"feddw\"\nmu = -1.0\n").unwrap_err();
    assert_eq!(key_of(err), "strategy.mu");
    let flags = Overrides {
        mu: Some(-1.0),
        ..Overrides::default()
    };
    assert_eq!(key_of(parse_config(None, None, &flags).unwrap_err()), "strategy.mu");
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let err = config_from_str("roundz = 3\n").unwrap_err();
    assert!(err.to_string().contains("roundz"), "{err}");
    let err = config_from_str("[model]\nwidth = 3\n").unwrap_err();
    assert!(err.to_string().contains("width"), "{err}");
    let err = config_from_str("[strategy]\nkind = \"fedavg\"\nmu = 1.0\n").unwrap_err();
    assert!(err.to_string().contains("mu"), "{err}");
}

#[test]
fn type_mismatch_names_key_and_type() {
    let err = config_from_str("clients = \"ten\"\n").unwrap_err();
    let text = err.to_string();
    assert_eq!(key_of(err), "clients");
    assert!(text.contains("usize") || text.contains("integer"), "{text}");
}

#[test]
fn missing_required_key_is_named() {
    let err = config_from_str("[dataset]\nkind = \"mnist\"\nimages = \"a\"\ntest_fraction = 0.2\n").unwrap_err();
    assert!(err.to_string().contains("labels"), "{err}");
}

#[test]
fn flags_override_file_and_preset() {
    let flags = Overrides {
        strategy: Some("fedprox".into()),
        mu: Some(0.01),
        beta: Some(0.3),
        clients: Some(7),
        rounds: Some(2),
        seed: Some(99),
    };
    let cfg = parse_config(Some(Preset::Pathological), Some("beta = 0.9\nclients = 3\n"), &flags).unwrap();
    assert_eq!(cfg.strategy, FlStrategy::FedProx { prox_mu: 0.01 });
    assert_eq!((cfg.beta, cfg.clients, cfg.rounds, cfg.seed), (0.3, 7, 2, 99));
    assert_eq!(cfg.participation_rate, 0.5);
    assert!(cfg.model.classifier_bias);
}

#[test]
fn classifier_bias_follows_strategy() {
    let dw = config_from_str("").unwrap();
    assert!(!dw.model.classifier_bias);
    let avg = config_from_str("[strategy]\nkind = \"fedavg\"\n").unwrap();
    assert!(avg.model.classifier_bias);
    let err = config_from_str("[model]\nclassifier_bias = true\n").unwrap_err();
    assert_eq!(key_of(err), "model.classifier_bias");
}

#[test]
fn changing_dataset_kind_drops_old_keys() {
    let text = "[dataset]\nkind = \"mnist\"\nimages = \"i\"\nlabels = \"l\"\ntest_fraction = 0.2\nsubset = 100\n";
    let cfg = config_from_str(text).unwrap();
    assert!(matches!(cfg.dataset, DatasetSpec::Mnist { subset: Some(100), .. }));
}

#[test]
fn shipped_config_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/mnist-pathological.toml");
    let cfg = config_from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!((cfg.clients, cfg.rounds, cfg.local_epochs), (10, 20, 5));
    assert_eq!((cfg.beta, cfg.participation_rate), (0.1, 0.5));
}

fn arb_strategy() -> impl Strategy<Value = FlStrategy> {
    prop_oneof![
        Just(FlStrategy::FedAvg),
        Just(FlStrategy::LocalOnly),
        (0.0..100.0f64).prop_map(|prox_mu| FlStrategy::FedProx { prox_mu }),
        (0.0..100.0f64, any::<bool>(), 1usize..500).prop_map(|(mu, lin, refresh)| {
            let mut reg = RegularizerConfig::exact(mu);
            reg.mode = if lin { RegMode::Linearized } else { RegMode::Exact };
            reg.linearization_refresh = refresh;
            FlStrategy::FedDw(reg)
        }),
    ]
}

fn arb_dataset() -> impl Strategy<Value = DatasetSpec> {
    prop_oneof![
        (2usize..20, 1usize..500, 1usize..64, 0.01..5.0f64, 1usize..100).prop_map(
            |(classes, per_class, dim, spread, test_per_class)| DatasetSpec::Blobs {
                classes,
                per_class,
                dim,
                spread,
                test_per_class,
            }
        ),
        (proptest::option::of(1usize..60000), 0.01..0.99f64, any::<bool>()).prop_map(|(subset, f, explicit)| {
            DatasetSpec::Mnist {
                images: "imgs".into(),
                labels: "lbls".into(),
                test_images: explicit.then(|| "ti".into()),
                test_labels: explicit.then(|| "tl".into()),
                subset,
                test_fraction: f,
            }
        }),
    ]
}

prop_compose! {
    fn arb_config()(
        strategy in arb_strategy(),
        clients in 1usize..200,
        rounds in 0usize..500,
        local_epochs in 1usize..20,
        batch_size in 1usize..1024,
        participation_rate in 0.001..=1.0f64,
        beta in 0.001..1e6f64,
        learning_rate in 1e-6..1.0f64,
        seed in 0u64..(i64::MAX as u64),
        dataset in arb_dataset(),
        hidden in proptest::collection::vec(1usize..512, 0..3),
        mapping_width in 1usize..512,
        bias in any::<bool>(),
        workers in 0usize..16,
        record_timing in any::<bool>(),
    ) -> RunConfig {
        let classifier_bias = bias && !strategy.is_feddw();
        RunConfig {
            strategy, clients, rounds, local_epochs, batch_size, participation_rate, beta,
            learning_rate, seed, dataset,
            model: ModelSpec { feature_hidden: hidden, mapping_width, classifier_bias },
            workers, record_timing,
        }
    }
}

proptest! {
    #[test]
    fn emit_then_parse_is_identity(cfg in arb_config()) {
        let text = emit_config(&cfg).unwrap();
        let back = config_from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
