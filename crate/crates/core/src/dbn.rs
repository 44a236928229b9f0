//! Deep-belief-network demodulator: three stacked RBMs pretrained greedily
//! with one-step contrastive divergence, topped by a sigmoid output layer,
//! then fine-tuned end to end with backpropagation.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::LabeledDataset;
use crate::model::{ModelBlob, ModelKind};
use crate::modulation::ModulationScheme;
use crate::neural::{sigmoid, Activation, DenseLayer, Layer, Network, SgdConfig, TrainingLog};
use crate::{argmax_first, seed, Decision, Demodulator, Error, Result};

/// Restricted Boltzmann machine with energy
/// `E(v, h) = −aᵀv − bᵀh − hᵀWv`, `W` stored `hidden × visible`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rbm {
    pub visible: usize,
    pub hidden: usize,
    pub w: Vec<f64>,
    /// Visible bias.
    pub a: Vec<f64>,
    /// Hidden bias.
    pub b: Vec<f64>,
}

/// One contrastive-divergence estimate of `∂ ln p(v) / ∂θ`, averaged over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub dw: Vec<f64>,
    pub da: Vec<f64>,
    pub db: Vec<f64>,
}

impl Rbm {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        Rbm {
            visible,
            hidden,
            w: vec![0.0; visible * hidden],
            a: vec![0.0; visible],
            b: vec![0.0; hidden],
        }
    }

    /// Weights uniform in `[-0.5, 0.5] / sqrt(visible)`, zero biases.
    pub fn random(visible: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / (visible as f64).sqrt();
        let mut r = Self::zeros(visible, hidden);
        for w in &mut r.w {
            *w = (rng.random::<f64>() - 0.5) * scale;
        }
        r
    }

    /// `p(h_j = 1 | v) = sigmoid(b_j + Σ_i w_ji v_i)`.
    pub fn hidden_conditional(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.visible {
            return Err(Error::DimensionMismatch {
                expected: self.visible,
                actual: v.len(),
            });
        }
        Ok(self.hidden_probs(v))
    }

    /// `p(v_i = 1 | h) = sigmoid(a_i + Σ_j h_j w_ji)`.
    pub fn visible_conditional(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.hidden {
            return Err(Error::DimensionMismatch {
                expected: self.hidden,
                actual: h.len(),
            });
        }
        Ok(self.visible_probs(h))
    }

    fn hidden_probs(&self, v: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let row = &self.w[j * self.visible..(j + 1) * self.visible];
                sigmoid(self.b[j] + row.iter().zip(v).map(|(w, x)| w * x).sum::<f64>())
            })
            .collect()
    }

    fn visible_probs(&self, h: &[f64]) -> Vec<f64> {
        let mut acc = self.a.clone();
        for (j, &hj) in h.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            let row = &self.w[j * self.visible..(j + 1) * self.visible];
            for (t, &w) in acc.iter_mut().zip(row) {
                *t += hj * w;
            }
        }
        acc.into_iter().map(sigmoid).collect()
    }

    /// CD-1 gradient estimate over `batch` (row-major, `visible` per row).
    ///
    /// Per sample the generator is consumed as: `hidden` uniforms to draw
    /// `ĥ ~ p(h | v)` (unit on iff `u < p`), then, when `sample_visible`,
    /// `visible` uniforms to draw `v̂ ~ p(v | ĥ)`; otherwise `v̂ = p(v | ĥ)`.
    pub fn cd1_gradient(&self, batch: &[f64], sample_visible: bool, rng: &mut impl Rng) -> Result<RbmGradient> {
        if batch.len() % self.visible != 0 {
            return Err(Error::DimensionMismatch {
                expected: batch.len() / self.visible * self.visible + self.visible,
                actual: batch.len(),
            });
        }
        let count = batch.len() / self.visible;
        let mut g = RbmGradient {
            dw: vec![0.0; self.w.len()],
            da: vec![0.0; self.visible],
            db: vec![0.0; self.hidden],
        };
        if count == 0 {
            return Ok(g);
        }
        for v in batch.chunks_exact(self.visible) {
            let ph = self.hidden_probs(v);
            let h_sample: Vec<f64> = ph
                .iter()
                .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                .collect();
            let pv = self.visible_probs(&h_sample);
            let v_hat: Vec<f64> = if sample_visible {
                pv.iter()
                    .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                    .collect()
            } else {
                pv
            };
            let ph_hat = self.hidden_probs(&v_hat);
            for j in 0..self.hidden {
                let row = &mut g.dw[j * self.visible..(j + 1) * self.visible];
                for i in 0..self.visible {
                    row[i] += ph[j] * v[i] - ph_hat[j] * v_hat[i];
                }
                g.db[j] += ph[j] - ph_hat[j];
            }
            for i in 0..self.visible {
                g.da[i] += v[i] - v_hat[i];
            }
        }
        let inv = 1.0 / count as f64;
        for x in g.dw.iter_mut().chain(&mut g.da).chain(&mut g.db) {
            *x *= inv;
        }
        Ok(g)
    }

    /// Gradient ascent step `θ ← θ + ε Δθ`.
    pub fn apply(&mut self, g: &RbmGradient, epsilon: f64) {
        for (p, d) in self.w.iter_mut().zip(&g.dw) {
            *p += epsilon * d;
        }
        for (p, d) in self.a.iter_mut().zip(&g.da) {
            *p += epsilon * d;
        }
        for (p, d) in self.b.iter_mut().zip(&g.db) {
            *p += epsilon * d;
        }
    }

    /// One CD-1 update on `batch`.
    pub fn cd1_update(&mut self, batch: &[f64], epsilon: f64, sample_visible: bool, rng: &mut impl Rng) -> Result<()> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate {epsilon} must be >= 0")));
        }
        let g = self.cd1_gradient(batch, sample_visible, rng)?;
        self.apply(&g, epsilon);
        Ok(())
    }

    /// Mean squared error of the deterministic reconstruction
    /// `p(v | p(h | v))` over the rows of `data`.
    pub fn reconstruction_error(&self, data: &[f64]) -> f64 {
        let rows = data.len() / self.visible;
        if rows == 0 {
            return 0.0;
        }
        let total: f64 = data
            .chunks_exact(self.visible)
            .map(|v| {
                let r = self.visible_probs(&self.hidden_probs(v));
                r.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum();
        total / (rows * self.visible) as f64
    }

    fn as_dense(&self) -> DenseLayer {
        DenseLayer {
            inputs: self.visible,
            outputs: self.hidden,
            weights: self.w.clone(),
            bias: self.b.clone(),
            activation: Activation::Sigmoid,
        }
    }
}

/// Hidden layer sizes `(h1, h2, h3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbnLayerSizes(pub usize, pub usize, pub usize);

impl DbnLayerSizes {
    /// Per-scheme defaults: (10, 10, 20) scaled by N/10 for the low-order
    /// schemes, (100, 100, 400) for 16- to 128-QAM and (500, 500, 2000) for
    /// 256-QAM.
    pub fn default_for(scheme: ModulationScheme, n: usize) -> Self {
        match scheme {
            ModulationScheme::Ook | ModulationScheme::Qpsk | ModulationScheme::Ppm4 => {
                let f = (n / 10).clamp(1, 25);
                DbnLayerSizes(10 * f, 10 * f, 20 * f)
            }
            ModulationScheme::Qam256 => DbnLayerSizes(500, 500, 2000),
            _ => DbnLayerSizes(100, 100, 400),
        }
    }

    pub fn as_array(self) -> [usize; 3] {
        [self.0, self.1, self.2]
    }
}

/// Pretraining schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Draw binary reconstructions `v̂` rather than using probabilities.
    pub sample_visible: bool,
    /// Feed sampled binary hidden states upward instead of probabilities.
    pub sample_up_pass: bool,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 100,
            learning_rate: 0.1,
            batch_size: 100,
            seed: 0,
            sample_visible: false,
            sample_up_pass: false,
        }
    }
}

/// Complete DBN training recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbnConfig {
    pub sizes: Option<DbnLayerSizes>,
    pub pretrain: PretrainConfig,
    pub finetune: SgdConfig,
}

impl DbnConfig {
    pub fn with_seed(seed: u64) -> Self {
        DbnConfig {
            sizes: None,
            pretrain: PretrainConfig {
                seed: seed::derive_str(seed, "dbn-pretrain"),
                ..PretrainConfig::default()
            },
            finetune: SgdConfig {
                learning_rate: 1.0,
                batch_size: 100,
                epochs: 200,
                seed: seed::derive_str(seed, "dbn-finetune"),
            },
        }
    }
}

/// Reconstruction error of each RBM after every pretraining epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PretrainLog {
    pub reconstruction: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbnParams {
    pub rbms: Vec<Rbm>,
    pub output: DenseLayer,
}

impl DbnParams {
    /// Random RBMs and a random output layer.
    pub fn random(visible: usize, sizes: DbnLayerSizes, classes: usize, rng: &mut impl Rng) -> Self {
        let s = sizes.as_array();
        let rbms = vec![
            Rbm::random(visible, s[0], rng),
            Rbm::random(s[0], s[1], rng),
            Rbm::random(s[1], s[2], rng),
        ];
        let output = DenseLayer::random(s[2], classes, Activation::Sigmoid, rng);
        DbnParams { rbms, output }
    }

    pub fn visible(&self) -> usize {
        self.rbms[0].visible
    }

    /// Mean-field up-pass followed by the output layer.
    pub fn forward(&self, v: &[f64]) -> Vec<f64> {
        let mut x = v.to_vec();
        for r in &self.rbms {
            x = r.hidden_probs(&x);
        }
        self.output.forward(&x)
    }

    pub fn to_network(&self) -> Network {
        let mut layers: Vec<Layer> = self.rbms.iter().map(|r| Layer::Dense(r.as_dense())).collect();
        layers.push(Layer::Dense(self.output.clone()));
        Network::new((self.visible(), 1, 1), layers).expect("stacked RBM sizes are consistent")
    }

    /// Copy fine-tuned weights and hidden biases back; visible biases keep
    /// their pretrained values.
    fn absorb(&mut self, net: &Network) {
        for (i, layer) in net.layers().iter().enumerate() {
            let Layer::Dense(d) = layer else { continue };
            if i < self.rbms.len() {
                self.rbms[i].w.copy_from_slice(&d.weights);
                self.rbms[i].b.copy_from_slice(&d.bias);
            } else {
                self.output = d.clone();
            }
        }
    }

    /// Greedy layer-wise CD-1: train each RBM on the previous layer's
    /// activations.
    pub fn pretrain(&mut self, data: &[f64], cfg: &PretrainConfig) -> Result<PretrainLog> {
        if cfg.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        let mut log = PretrainLog::default();
        let mut rng = seed::rng(cfg.seed);
        let mut layer_input = data.to_vec();
        for (li, rbm) in self.rbms.iter_mut().enumerate() {
            if layer_input.len() % rbm.visible != 0 {
                return Err(Error::DimensionMismatch {
                    expected: rbm.visible,
                    actual: layer_input.len() % rbm.visible,
                });
            }
            let rows = layer_input.len() / rbm.visible;
            let mut order: Vec<usize> = (0..rows).collect();
            let mut errors = Vec::with_capacity(cfg.epochs);
            let mut batch = Vec::with_capacity(cfg.batch_size * rbm.visible);
            for _ in 0..cfg.epochs {
                order.shuffle(&mut rng);
                for chunk in order.chunks(cfg.batch_size) {
                    batch.clear();
                    for &r in chunk {
                        batch.extend_from_slice(&layer_input[r * rbm.visible..(r + 1) * rbm.visible]);
                    }
                    rbm.cd1_update(&batch, cfg.learning_rate, cfg.sample_visible, &mut rng)?;
                }
                errors.push(rbm.reconstruction_error(&layer_input));
            }
            log.reconstruction.push(errors);
            if li + 1 < 3 {
                let mut next = Vec::with_capacity(rows * rbm.hidden);
                for v in layer_input.chunks_exact(rbm.visible) {
                    let p = rbm.hidden_probs(v);
                    if cfg.sample_up_pass {
                        next.extend(p.iter().map(|&x| if rng.random::<f64>() < x { 1.0 } else { 0.0 }));
                    } else {
                        next.extend(p);
                    }
                }
                layer_input = next;
            }
        }
        Ok(log)
    }

    /// Supervised backpropagation through all layers on squared error
    /// against one-hot targets.
    pub fn finetune(&mut self, inputs: &[f64], targets: &[f64], sgd: &SgdConfig) -> Result<TrainingLog> {
        let mut net = self.to_network();
        let log = net.train(inputs, targets, sgd)?;
        self.absorb(&net);
        Ok(log)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbnDemodulator {
    scheme: ModulationScheme,
    params: DbnParams,
}

impl DbnDemodulator {
    pub fn new(scheme: ModulationScheme, params: DbnParams) -> Result<Self> {
        if params.output.outputs != scheme.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: scheme.alphabet_size(),
                actual: params.output.outputs,
            });
        }
        Ok(DbnDemodulator { scheme, params })
    }

    pub fn params(&self) -> &DbnParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut DbnParams {
        &mut self.params
    }

    /// Initialize, pretrain and fine-tune on `train_set`.
    pub fn train(train_set: &LabeledDataset, cfg: &DbnConfig) -> Result<(Self, PretrainLog, TrainingLog)> {
        let scheme = train_set.scheme();
        let n = train_set.n();
        let sizes = cfg.sizes.unwrap_or_else(|| DbnLayerSizes::default_for(scheme, n));
        let mut rng = seed::rng(seed::derive_str(cfg.pretrain.seed, "dbn-init"));
        let params = DbnParams::random(n, sizes, scheme.alphabet_size(), &mut rng);
        let mut model = DbnDemodulator { scheme, params };
        let pre = model.params.pretrain(train_set.samples(), &cfg.pretrain)?;
        let fine = model.finetune(train_set, &cfg.finetune)?;
        Ok((model, pre, fine))
    }

    pub fn finetune(&mut self, train_set: &LabeledDataset, sgd: &SgdConfig) -> Result<TrainingLog> {
        if train_set.scheme() != self.scheme {
            return Err(Error::SchemeMismatch {
                expected: self.scheme.name(),
                actual: train_set.scheme().name(),
            });
        }
        if train_set.n() != self.params.visible() {
            return Err(Error::DimensionMismatch {
                expected: self.params.visible(),
                actual: train_set.n(),
            });
        }
        let m = self.scheme.alphabet_size();
        let mut targets = vec![0.0; train_set.len() * m];
        for (i, &l) in train_set.labels().iter().enumerate() {
            targets[i * m + usize::from(l) - 1] = 1.0;
        }
        self.params.finetune(train_set.samples(), &targets, sgd)
    }

    pub fn scores(&self, frame: &[f64]) -> Vec<f64> {
        self.params.forward(frame)
    }

    pub fn to_blob(&self) -> ModelBlob {
        let mut blob = ModelBlob::new(ModelKind::Dbn, self.scheme, self.params.visible());
        for (i, r) in self.params.rbms.iter().enumerate() {
            blob.push_f64(&format!("rbm{i}.w"), &[r.hidden, r.visible], r.w.clone());
            blob.push_f64(&format!("rbm{i}.a"), &[r.visible], r.a.clone());
            blob.push_f64(&format!("rbm{i}.b"), &[r.hidden], r.b.clone());
        }
        let o = &self.params.output;
        blob.push_f64("out.w", &[o.outputs, o.inputs], o.weights.clone());
        blob.push_f64("out.b", &[o.outputs], o.bias.clone());
        blob
    }

    pub fn from_blob(blob: &ModelBlob) -> Result<Self> {
        let bad = |m: String| Error::Parse { offset: 0, message: m };
        let mut rbms = Vec::new();
        let mut expected_visible = usize::from(blob.n);
        for i in 0..3 {
            let (dims, w) = blob.f64(&format!("rbm{i}.w"))?;
            let [hidden, visible] = dims[..] else {
                return Err(bad(format!("rbm{i}.w must be 2-D")));
            };
            if visible != expected_visible {
                return Err(bad(format!("rbm{i} has {visible} visible units, expected {expected_visible}")));
            }
            let (_, a) = blob.f64(&format!("rbm{i}.a"))?;
            let (_, b) = blob.f64(&format!("rbm{i}.b"))?;
            if a.len() != visible || b.len() != hidden {
                return Err(bad(format!("rbm{i} bias sizes inconsistent")));
            }
            rbms.push(Rbm {
                visible,
                hidden,
                w: w.to_vec(),
                a: a.to_vec(),
                b: b.to_vec(),
            });
            expected_visible = hidden;
        }
        let (dims, w) = blob.f64("out.w")?;
        let (_, b) = blob.f64("out.b")?;
        let [outputs, inputs] = dims[..] else {
            return Err(bad("out.w must be 2-D".into()));
        };
        if inputs != expected_visible || b.len() != outputs {
            return Err(bad("output layer sizes inconsistent".into()));
        }
        let output = DenseLayer {
            inputs,
            outputs,
            weights: w.to_vec(),
            bias: b.to_vec(),
            activation: Activation::Sigmoid,
        };
        DbnDemodulator::new(blob.scheme, DbnParams { rbms, output })
    }
}

impl Demodulator for DbnDemodulator {
    fn scheme(&self) -> ModulationScheme {
        self.scheme
    }

    fn classify(&self, frame: &[f64]) -> Result<Decision> {
        if frame.len() != self.params.visible() {
            return Err(Error::DimensionMismatch {
                expected: self.params.visible(),
                actual: frame.len(),
            });
        }
        Ok(Decision::from_label(argmax_first(&self.scores(frame)) as u16 + 1))
    }
}
