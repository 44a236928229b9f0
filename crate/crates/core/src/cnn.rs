//! CNN demodulator: waveform image → Conv(6@5×5) → Pool → Conv(12@3×3) →
//! Pool → fully connected sigmoid output, one unit per label.

use crate::dataset::LabeledDataset;
use crate::model::{push_network, read_network, ModelBlob, ModelKind};
use crate::modulation::ModulationScheme;
use crate::neural::{Activation, ConvLayer, DenseLayer, Layer, Network, SgdConfig, TrainingLog};
use crate::rasterizer::{visualize, BinaryImage, IMAGE_SIDE};
use crate::{argmax_first, seed, Decision, Demodulator, Error, Result};

pub const CONV1_MAPS: usize = 6;
pub const CONV1_KERNEL: usize = 5;
pub const CONV2_MAPS: usize = 12;
pub const CONV2_KERNEL: usize = 3;
/// Flattened Pool-2 output: 12 maps of 5×5.
pub const FC_INPUTS: usize = CONV2_MAPS * 5 * 5;

/// Trainable parameters of the network for `classes` outputs.
pub fn parameter_count(classes: usize) -> usize {
    CONV1_MAPS * (CONV1_KERNEL * CONV1_KERNEL + 1)
        + CONV2_MAPS * (CONV1_MAPS * CONV2_KERNEL * CONV2_KERNEL + 1)
        + FC_INPUTS * classes
        + classes
}

/// Default training schedule: batches of 100 for 150 epochs.
pub fn default_sgd(seed: u64) -> SgdConfig {
    SgdConfig {
        learning_rate: 1.0,
        batch_size: 100,
        epochs: 150,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnDemodulator {
    scheme: ModulationScheme,
    n: usize,
    net: Network,
}

fn build_network(layers: [Layer; 5]) -> Network {
    Network::new((1, IMAGE_SIDE, IMAGE_SIDE), layers.into()).expect("fixed CNN topology is consistent")
}

impl CnnDemodulator {
    /// Network with every kernel, weight and bias at zero.
    pub fn zeros(scheme: ModulationScheme, n: usize) -> Self {
        let m = scheme.alphabet_size();
        let net = build_network([
            Layer::Conv(ConvLayer::zeros(1, CONV1_MAPS, CONV1_KERNEL)),
            Layer::MaxPool2,
            Layer::Conv(ConvLayer::zeros(CONV1_MAPS, CONV2_MAPS, CONV2_KERNEL)),
            Layer::MaxPool2,
            Layer::Dense(DenseLayer::zeros(FC_INPUTS, m, Activation::Sigmoid)),
        ]);
        CnnDemodulator { scheme, n, net }
    }

    /// Seeded random initialization.
    pub fn random(scheme: ModulationScheme, n: usize, init_seed: u64) -> Self {
        let m = scheme.alphabet_size();
        let mut rng = seed::rng(init_seed);
        let net = build_network([
            Layer::Conv(ConvLayer::random(1, CONV1_MAPS, CONV1_KERNEL, &mut rng)),
            Layer::MaxPool2,
            Layer::Conv(ConvLayer::random(CONV1_MAPS, CONV2_MAPS, CONV2_KERNEL, &mut rng)),
            Layer::MaxPool2,
            Layer::Dense(DenseLayer::random(FC_INPUTS, m, Activation::Sigmoid, &mut rng)),
        ]);
        CnnDemodulator { scheme, n, net }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// Frame length the model was trained for.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Output scores `y_3`, one per label.
    pub fn forward(&self, image: &BinaryImage) -> Vec<f64> {
        self.net
            .forward(&image.to_f64())
            .expect("image size matches the network input")
    }

    pub fn classify_image(&self, image: &BinaryImage) -> Decision {
        Decision::from_label(argmax_first(&self.forward(image)) as u16 + 1)
    }

    /// Train from a seeded random initialization on `train_set`.
    pub fn train(train_set: &LabeledDataset, sgd: &SgdConfig) -> Result<(Self, TrainingLog)> {
        if train_set.len() < sgd.batch_size {
            return Err(Error::InvalidArgument(format!(
                "training set of {} frames is smaller than the batch size {}",
                train_set.len(),
                sgd.batch_size
            )));
        }
        let mut model = Self::random(
            train_set.scheme(),
            train_set.n(),
            seed::derive_str(sgd.seed, "cnn-init"),
        );
        let log = model.fit(train_set, sgd)?;
        Ok((model, log))
    }

    /// Continue training this model on `train_set`.
    pub fn fit(&mut self, train_set: &LabeledDataset, sgd: &SgdConfig) -> Result<TrainingLog> {
        if train_set.scheme() != self.scheme {
            return Err(Error::SchemeMismatch {
                expected: self.scheme.name(),
                actual: train_set.scheme().name(),
            });
        }
        let m = self.scheme.alphabet_size();
        let mut images = Vec::with_capacity(train_set.len() * IMAGE_SIDE * IMAGE_SIDE);
        let mut targets = vec![0.0; train_set.len() * m];
        for (i, (frame, label)) in train_set.iter().enumerate() {
            images.extend(visualize(frame).to_f64());
            targets[i * m + usize::from(label) - 1] = 1.0;
        }
        self.net.train(&images, &targets, sgd)
    }

    pub fn to_blob(&self) -> ModelBlob {
        let mut blob = ModelBlob::new(ModelKind::Cnn, self.scheme, self.n);
        push_network(&mut blob, "cnn", &self.net);
        blob
    }

    pub fn from_blob(blob: &ModelBlob) -> Result<Self> {
        let net = read_network(blob, "cnn")?;
        let m = blob.scheme.alphabet_size();
        let expected = Self::zeros(blob.scheme, usize::from(blob.n));
        if net.shapes() != expected.net.shapes() || net.param_count() != parameter_count(m) {
            return Err(Error::Parse {
                offset: 0,
                message: "stored network does not have the CNN demodulator topology".into(),
            });
        }
        Ok(CnnDemodulator {
            scheme: blob.scheme,
            n: usize::from(blob.n),
            net,
        })
    }
}

impl Demodulator for CnnDemodulator {
    fn scheme(&self) -> ModulationScheme {
        self.scheme
    }

    fn classify(&self, frame: &[f64]) -> Result<Decision> {
        if frame.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: frame.len(),
            });
        }
        Ok(self.classify_image(&visualize(frame)))
    }
}
