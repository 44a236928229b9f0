use rand::Rng;

use super::{correlate_valid_acc, maxpool2_raw, sigmoid};
use crate::{Error, Result};

/// `(maps, rows, cols)`; dense activations use `(len, 1, 1)`.
pub type Shape3 = (usize, usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

fn uniform_init(rng: &mut impl Rng, len: usize, fan_in: usize) -> Vec<f64> {
    let scale = 1.0 / (fan_in as f64).sqrt();
    (0..len)
        .map(|_| (rng.random::<f64>() - 0.5) * scale)
        .collect()
}

/// Multi-map convolution with sigmoid activation. Every output map sums
/// the correlations of all input maps with its own kernels, plus one bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_maps: usize,
    pub out_maps: usize,
    pub kernel: usize,
    /// `out_maps × in_maps × kernel × kernel`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_maps: usize, out_maps: usize, kernel: usize) -> Self {
        ConvLayer {
            in_maps,
            out_maps,
            kernel,
            weights: vec![0.0; out_maps * in_maps * kernel * kernel],
            bias: vec![0.0; out_maps],
        }
    }

    /// Weights uniform in `[-0.5, 0.5] / sqrt(fan_in)`, zero biases.
    pub fn random(in_maps: usize, out_maps: usize, kernel: usize, rng: &mut impl Rng) -> Self {
        let mut l = Self::zeros(in_maps, out_maps, kernel);
        l.weights = uniform_init(rng, l.weights.len(), in_maps * kernel * kernel);
        l
    }

    fn kernel_slice(&self, o: usize, i: usize) -> &[f64] {
        let kk = self.kernel * self.kernel;
        let start = (o * self.in_maps + i) * kk;
        &self.weights[start..start + kk]
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` stored `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn random(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let mut l = Self::zeros(inputs, outputs, activation);
        l.weights = uniform_init(rng, l.weights.len(), inputs);
        l
    }

    pub fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        for (o, out) in y.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z: f64 = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *out = self.activation.apply(z);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.outputs];
        self.forward_into(x, &mut y);
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(ConvLayer),
    MaxPool2,
    Dense(DenseLayer),
}

impl Layer {
    pub fn output_shape(&self, input: Shape3) -> Result<Shape3> {
        let (maps, rows, cols) = input;
        match self {
            Layer::Conv(c) => {
                if maps != c.in_maps {
                    return Err(Error::Shape(format!(
                        "conv expects {} input maps, got {maps}",
                        c.in_maps
                    )));
                }
                if c.kernel > rows || c.kernel > cols {
                    return Err(Error::Shape(format!(
                        "kernel {} larger than {rows}x{cols} input",
                        c.kernel
                    )));
                }
                Ok((c.out_maps, rows - c.kernel + 1, cols - c.kernel + 1))
            }
            Layer::MaxPool2 => {
                if rows % 2 != 0 || cols % 2 != 0 {
                    return Err(Error::Shape(format!(
                        "pooling needs even dims, got {rows}x{cols}"
                    )));
                }
                Ok((maps, rows / 2, cols / 2))
            }
            Layer::Dense(d) => {
                let len = maps * rows * cols;
                if len != d.inputs {
                    return Err(Error::Shape(format!(
                        "dense layer expects {} inputs, got {len}",
                        d.inputs
                    )));
                }
                Ok((d.outputs, 1, 1))
            }
        }
    }

    pub fn param_len(&self) -> usize {
        match self {
            Layer::Conv(c) => c.weights.len() + c.bias.len(),
            Layer::MaxPool2 => 0,
            Layer::Dense(d) => d.weights.len() + d.bias.len(),
        }
    }

    /// Weights then biases.
    pub(crate) fn param_parts(&self) -> [&[f64]; 2] {
        match self {
            Layer::Conv(c) => [&c.weights, &c.bias],
            Layer::MaxPool2 => [&[], &[]],
            Layer::Dense(d) => [&d.weights, &d.bias],
        }
    }

    pub(crate) fn param_parts_mut(&mut self) -> [&mut [f64]; 2] {
        match self {
            Layer::Conv(c) => [&mut c.weights, &mut c.bias],
            Layer::MaxPool2 => [&mut [], &mut []],
            Layer::Dense(d) => [&mut d.weights, &mut d.bias],
        }
    }

    pub(crate) fn forward(
        &self,
        input: &[f64],
        in_shape: Shape3,
        out: &mut [f64],
        argmax: &mut [usize],
    ) {
        let (maps, rows, cols) = in_shape;
        match self {
            Layer::Conv(c) => {
                let (orows, ocols) = (rows - c.kernel + 1, cols - c.kernel + 1);
                let osize = orows * ocols;
                let isize = rows * cols;
                for o in 0..c.out_maps {
                    let dst = &mut out[o * osize..(o + 1) * osize];
                    dst.fill(c.bias[o]);
                    for i in 0..c.in_maps {
                        correlate_valid_acc(
                            &input[i * isize..(i + 1) * isize],
                            (rows, cols),
                            c.kernel_slice(o, i),
                            c.kernel,
                            dst,
                        );
                    }
                    for v in dst.iter_mut() {
                        *v = sigmoid(*v);
                    }
                }
            }
            Layer::MaxPool2 => {
                let isize = rows * cols;
                let osize = isize / 4;
                for m in 0..maps {
                    maxpool2_raw(
                        &input[m * isize..(m + 1) * isize],
                        (rows, cols),
                        &mut out[m * osize..(m + 1) * osize],
                        &mut argmax[m * osize..(m + 1) * osize],
                    );
                }
            }
            Layer::Dense(d) => d.forward_into(input, out),
        }
    }

    /// Accumulate this layer's parameter gradient into `grad` and, when
    /// `d_input` is given, overwrite it with the loss gradient w.r.t. the input.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        input: &[f64],
        in_shape: Shape3,
        output: &[f64],
        argmax: &[usize],
        d_output: &[f64],
        grad: &mut [f64],
        d_input: Option<&mut [f64]>,
    ) {
        let (maps, rows, cols) = in_shape;
        match self {
            Layer::Conv(c) => {
                let k = c.kernel;
                let (orows, ocols) = (rows - k + 1, cols - k + 1);
                let osize = orows * ocols;
                let isize = rows * cols;
                let d_pre: Vec<f64> = d_output
                    .iter()
                    .zip(output)
                    .map(|(d, y)| d * y * (1.0 - y))
                    .collect();
                let (gw, gb) = grad.split_at_mut(c.weights.len());
                let mut d_input = d_input;
                if let Some(di) = d_input.as_deref_mut() {
                    di.fill(0.0);
                }
                for o in 0..c.out_maps {
                    let dp = &d_pre[o * osize..(o + 1) * osize];
                    gb[o] += dp.iter().sum::<f64>();
                    for i in 0..c.in_maps {
                        let x = &input[i * isize..(i + 1) * isize];
                        let kk = k * k;
                        let gk = &mut gw[(o * c.in_maps + i) * kk..(o * c.in_maps + i + 1) * kk];
                        // dK[u][v] = Σ_{p,q} dP[p][q] · X[p+u][q+v]
                        for u in 0..k {
                            for v in 0..k {
                                let mut acc = 0.0;
                                for p in 0..orows {
                                    let xr = &x[(p + u) * cols + v..(p + u) * cols + v + ocols];
                                    let dr = &dp[p * ocols..(p + 1) * ocols];
                                    acc += xr.iter().zip(dr).map(|(a, b)| a * b).sum::<f64>();
                                }
                                gk[u * k + v] += acc;
                            }
                        }
                        if let Some(di) = d_input.as_deref_mut() {
                            let kern = c.kernel_slice(o, i);
                            let dx = &mut di[i * isize..(i + 1) * isize];
                            for p in 0..orows {
                                let dr = &dp[p * ocols..(p + 1) * ocols];
                                for u in 0..k {
                                    for v in 0..k {
                                        let w = kern[u * k + v];
                                        let row =
                                            &mut dx[(p + u) * cols + v..(p + u) * cols + v + ocols];
                                        for (t, &d) in row.iter_mut().zip(dr) {
                                            *t += w * d;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Layer::MaxPool2 => {
                if let Some(di) = d_input {
                    di.fill(0.0);
                    let isize = rows * cols;
                    let osize = isize / 4;
                    for m in 0..maps {
                        for j in 0..osize {
                            di[m * isize + argmax[m * osize + j]] += d_output[m * osize + j];
                        }
                    }
                }
            }
            Layer::Dense(d) => {
                let d_pre: Vec<f64> = d_output
                    .iter()
                    .zip(output)
                    .map(|(g, &y)| g * d.activation.derivative_from_output(y))
                    .collect();
                let (gw, gb) = grad.split_at_mut(d.weights.len());
                for (o, &dp) in d_pre.iter().enumerate() {
                    gb[o] += dp;
                    if dp == 0.0 {
                        continue;
                    }
                    for (g, &x) in gw[o * d.inputs..(o + 1) * d.inputs].iter_mut().zip(input) {
                        *g += dp * x;
                    }
                }
                if let Some(di) = d_input {
                    di.fill(0.0);
                    for (o, &dp) in d_pre.iter().enumerate() {
                        let row = &d.weights[o * d.inputs..(o + 1) * d.inputs];
                        for (t, &w) in di.iter_mut().zip(row) {
                            *t += w * dp;
                        }
                    }
                }
            }
        }
    }
}
