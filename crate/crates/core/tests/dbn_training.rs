use vlc_demod::channel::ChannelConfig;
use vlc_demod::dataset::{build_train_test, GenerationConfig, LabeledDataset, NormalizationMode};
use vlc_demod::dbn::{DbnConfig, DbnDemodulator, DbnLayerSizes, DbnParams};
use vlc_demod::{seed, CarrierConfig, Demodulator, ModulationScheme};

fn split(scheme: ModulationScheme, n: usize, channel: ChannelConfig) -> (LabeledDataset, LabeledDataset) {
    let gen = GenerationConfig {
        scheme,
        n,
        carrier: CarrierConfig::default(),
        channel,
        seed: 12,
    };
    build_train_test(&gen, 500, 200, NormalizationMode::TrainFrozen).unwrap()
}

#[test]
fn noiseless_ook_is_learned_exactly() {
    let (train, test) = split(ModulationScheme::Ook, 10, ChannelConfig::identity());
    let cfg = DbnConfig {
        sizes: Some(DbnLayerSizes(10, 10, 20)),
        ..DbnConfig::with_seed(1)
    };
    let (model, pre, fine) = DbnDemodulator::train(&train, &cfg).unwrap();
    assert_eq!(pre.reconstruction.len(), 3);
    assert_eq!(fine.epoch_loss.len(), cfg.finetune.epochs);
    assert_eq!(model.accuracy(&test).unwrap(), 1.0);
}

#[test]
fn zero_output_layer_gives_chance_accuracy() {
    for scheme in [ModulationScheme::Ook, ModulationScheme::Qpsk] {
        let (_, test) = split(scheme, 20, ChannelConfig::identity());
        let mut params = DbnParams::random(20, DbnLayerSizes(20, 20, 40), scheme.alphabet_size(), &mut seed::rng(2));
        params.output.weights.fill(0.0);
        params.output.bias.fill(0.0);
        let model = DbnDemodulator::new(scheme, params).unwrap();
        let chance = 1.0 / scheme.alphabet_size() as f64;
        let acc = model.accuracy(&test).unwrap();
        assert!((acc - chance).abs() <= 0.05, "{scheme}: {acc}");
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let (train, _) = split(ModulationScheme::Qpsk, 20, ChannelConfig::identity());
    let mut cfg = DbnConfig::with_seed(3);
    cfg.pretrain.epochs = 3;
    cfg.finetune.epochs = 3;
    let (a, pa, fa) = DbnDemodulator::train(&train, &cfg).unwrap();
    let (b, pb, fb) = DbnDemodulator::train(&train, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(pa, pb);
    assert_eq!(fa, fb);
    let (c, _, _) = DbnDemodulator::train(&train, &DbnConfig { pretrain: DbnConfig::with_seed(4).pretrain, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn first_layer_reconstruction_improves_during_pretraining() {
    let (train, _) = split(ModulationScheme::Ppm4, 20, ChannelConfig::identity());
    let mut cfg = DbnConfig::with_seed(5);
    cfg.pretrain.epochs = 20;
    cfg.finetune.epochs = 0;
    let (_, pre, _) = DbnDemodulator::train(&train, &cfg).unwrap();
    let first = &pre.reconstruction[0];
    assert_eq!(first.len(), 20);
    assert!(first[19] < first[0], "{first:?}");
}

#[test]
fn finetune_rejects_other_scheme() {
    let (train, _) = split(ModulationScheme::Ook, 10, ChannelConfig::identity());
    let mut params = DbnParams::random(10, DbnLayerSizes(10, 10, 20), 4, &mut seed::rng(6));
    params.output.weights.fill(0.0);
    let mut model = DbnDemodulator::new(ModulationScheme::Qpsk, params).unwrap();
    assert!(model.finetune(&train, &DbnConfig::with_seed(0).finetune).is_err());
}
