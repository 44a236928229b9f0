use rand::seq::SliceRandom;

use super::layers::{Layer, Shape3};
use super::Differentiable;
use crate::{seed, Error, Result};

/// Mini-batch stochastic gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.1,
            batch_size: 100,
            epochs: 100,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean per-sample training loss of every epoch, measured on each batch
/// before its update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epoch_loss: Vec<f64>,
}

/// Feed-forward stack of layers trained on the squared error
/// `½ Σ_k (y_k − t_k)²` against one-hot (or arbitrary) targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Shape3,
    layers: Vec<Layer>,
    shapes: Vec<Shape3>,
}

/// Per-sample activations kept for the backward pass.
struct Trace {
    acts: Vec<Vec<f64>>,
    argmax: Vec<Vec<usize>>,
    deltas: Vec<Vec<f64>>,
}

impl Network {
    pub fn new(input_shape: Shape3, layers: Vec<Layer>) -> Result<Self> {
        let mut shapes = vec![input_shape];
        for l in &layers {
            let next = l.output_shape(*shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(Network {
            input_shape,
            layers,
            shapes,
        })
    }

    pub fn input_shape(&self) -> Shape3 {
        self.input_shape
    }

    pub fn input_len(&self) -> usize {
        let (a, b, c) = self.input_shape;
        a * b * c
    }

    pub fn output_len(&self) -> usize {
        let (a, b, c) = *self.shapes.last().unwrap();
        a * b * c
    }

    /// Input shape followed by every layer's output shape.
    pub fn shapes(&self) -> &[Shape3] {
        &self.shapes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_len).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            for part in l.param_parts() {
                out.extend_from_slice(part);
            }
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: p.len(),
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            for part in l.param_parts_mut() {
                part.copy_from_slice(&p[at..at + part.len()]);
                at += part.len();
            }
        }
        Ok(())
    }

    fn new_trace(&self) -> Trace {
        let size = |s: &Shape3| s.0 * s.1 * s.2;
        Trace {
            acts: self.shapes.iter().map(|s| vec![0.0; size(s)]).collect(),
            argmax: self.shapes[1..]
                .iter()
                .zip(&self.layers)
                .map(|(s, l)| match l {
                    Layer::MaxPool2 => vec![0; size(s)],
                    _ => Vec::new(),
                })
                .collect(),
            deltas: self.shapes.iter().map(|s| vec![0.0; size(s)]).collect(),
        }
    }

    fn forward_trace(&self, input: &[f64], tr: &mut Trace) {
        tr.acts[0].copy_from_slice(input);
        for (i, layer) in self.layers.iter().enumerate() {
            let (before, after) = tr.acts.split_at_mut(i + 1);
            layer.forward(&before[i], self.shapes[i], &mut after[0], &mut tr.argmax[i]);
        }
    }

    /// Loss for one sample, accumulating its gradient into `grad`.
    fn backprop(&self, target: &[f64], tr: &mut Trace, grad: &mut [f64]) -> f64 {
        let last = self.layers.len();
        let mut loss = 0.0;
        for ((d, &y), &t) in tr.deltas[last].iter_mut().zip(&tr.acts[last]).zip(target) {
            *d = y - t;
            loss += 0.5 * (y - t) * (y - t);
        }
        let mut offset = self.param_count();
        for i in (0..last).rev() {
            let layer = &self.layers[i];
            offset -= layer.param_len();
            let (d_lo, d_hi) = tr.deltas.split_at_mut(i + 1);
            let d_input = (i > 0).then(|| d_lo[i].as_mut_slice());
            layer.backward(
                &tr.acts[i],
                self.shapes[i],
                &tr.acts[i + 1],
                &tr.argmax[i],
                &d_hi[0],
                &mut grad[offset..offset + layer.param_len()],
                d_input,
            );
        }
        loss
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                actual: input.len(),
            });
        }
        let mut tr = self.new_trace();
        self.forward_trace(input, &mut tr);
        Ok(tr.acts.pop().unwrap())
    }

    /// Forward pass returning every intermediate activation (input first).
    pub fn activations(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        if input.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                actual: input.len(),
            });
        }
        let mut tr = self.new_trace();
        self.forward_trace(input, &mut tr);
        Ok(tr.acts)
    }

    /// Mini-batch SGD over `inputs` (row-major, `input_len` per sample) and
    /// `targets` (`output_len` per sample). Samples are reshuffled every
    /// epoch from `cfg.seed`; the last batch of an epoch may be short.
    pub fn train(
        &mut self,
        inputs: &[f64],
        targets: &[f64],
        cfg: &SgdConfig,
    ) -> Result<TrainingLog> {
        cfg.validate()?;
        let (il, ol) = (self.input_len(), self.output_len());
        if inputs.len() % il != 0
            || targets.len() % ol != 0
            || inputs.len() / il != targets.len() / ol
        {
            return Err(Error::DimensionMismatch {
                expected: inputs.len() / il * ol,
                actual: targets.len(),
            });
        }
        let count = inputs.len() / il;
        let mut log = TrainingLog::default();
        if count == 0 {
            return Ok(log);
        }
        let mut rng = seed::rng(cfg.seed);
        let mut order: Vec<usize> = (0..count).collect();
        let mut tr = self.new_trace();
        let mut grad = vec![0.0; self.param_count()];
        let mut params = self.params();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                grad.fill(0.0);
                for &s in batch {
                    self.forward_trace(&inputs[s * il..(s + 1) * il], &mut tr);
                    epoch_loss += self.backprop(&targets[s * ol..(s + 1) * ol], &mut tr, &mut grad);
                }
                let step = cfg.learning_rate / batch.len() as f64;
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= step * g;
                }
                self.set_params(&params)?;
            }
            log.epoch_loss.push(epoch_loss / count as f64);
        }
        Ok(log)
    }
}

impl Differentiable for Network {
    fn param_vector(&self) -> Vec<f64> {
        self.params()
    }

    fn set_param_vector(&mut self, p: &[f64]) {
        self.set_params(p).expect("parameter vector length");
    }

    fn loss_and_gradient(&self, input: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        let mut tr = self.new_trace();
        let mut grad = vec![0.0; self.param_count()];
        self.forward_trace(input, &mut tr);
        let loss = self.backprop(target, &mut tr, &mut grad);
        (loss, grad)
    }
}
