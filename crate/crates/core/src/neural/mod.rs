//! Small dense neural-network substrate shared by the CNN and DBN
//! demodulators: tensors, sigmoid, valid cross-correlation, 2×2 max pooling,
//! fully connected layers, squared-error loss, mini-batch SGD and a
//! finite-difference gradient checker.

mod gradcheck;
mod layers;
mod network;

pub use gradcheck::{backprop_check, Differentiable};
pub use layers::{Activation, ConvLayer, DenseLayer, Layer};
pub use network::{Network, SgdConfig, TrainingLog};

use crate::{Error, Result};

/// Row-major real tensor of rank 1 to 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let want: usize = shape.iter().product();
        if data.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                actual: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(rows, cols)` of a rank-2 tensor.
    fn dims2(&self) -> Result<(usize, usize)> {
        match *self.shape.as_slice() {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Shape(format!(
                "expected a 2-D tensor, got {:?}",
                self.shape
            ))),
        }
    }
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `out[p][q] += Σ_{u,v} input[p+u][q+v] · kernel[u][v]` over the valid region.
pub(crate) fn correlate_valid_acc(
    input: &[f64],
    (rows, cols): (usize, usize),
    kernel: &[f64],
    k: usize,
    out: &mut [f64],
) {
    let (orows, ocols) = (rows - k + 1, cols - k + 1);
    for p in 0..orows {
        let orow = &mut out[p * ocols..(p + 1) * ocols];
        for u in 0..k {
            let irow = &input[(p + u) * cols..(p + u + 1) * cols];
            let krow = &kernel[u * k..(u + 1) * k];
            for (v, &w) in krow.iter().enumerate() {
                let src = &irow[v..v + ocols];
                for (o, &x) in orow.iter_mut().zip(src) {
                    *o += w * x;
                }
            }
        }
    }
}

/// One feature map: `sigmoid(bias + input ⋆ kernel)` where `⋆` is valid-mode
/// cross-correlation (the kernel is not flipped).
pub fn conv2d_valid(input: &Tensor, kernel: &Tensor, bias: f64) -> Result<Tensor> {
    let (rows, cols) = input.dims2()?;
    let (kr, kc) = kernel.dims2()?;
    if kr != kc {
        return Err(Error::Shape(format!(
            "kernel must be square, got {kr}x{kc}"
        )));
    }
    if kr > rows || kc > cols {
        return Err(Error::Shape(format!(
            "kernel {kr}x{kc} larger than input {rows}x{cols}"
        )));
    }
    let (orows, ocols) = (rows - kr + 1, cols - kc + 1);
    let mut out = vec![bias; orows * ocols];
    correlate_valid_acc(input.data(), (rows, cols), kernel.data(), kr, &mut out);
    for v in &mut out {
        *v = sigmoid(*v);
    }
    Tensor::from_vec(&[orows, ocols], out)
}

/// Max over non-overlapping 2×2 blocks of one `rows × cols` map. Writes the
/// pooled values and the flat source index of each maximum; ties go to the
/// first element in row-major order.
pub(crate) fn maxpool2_raw(
    input: &[f64],
    (rows, cols): (usize, usize),
    out: &mut [f64],
    argmax: &mut [usize],
) {
    let ocols = cols / 2;
    for p in 0..rows / 2 {
        for q in 0..ocols {
            let mut best = (2 * p) * cols + 2 * q;
            for idx in [
                (2 * p) * cols + 2 * q + 1,
                (2 * p + 1) * cols + 2 * q,
                (2 * p + 1) * cols + 2 * q + 1,
            ] {
                if input[idx] > input[best] {
                    best = idx;
                }
            }
            out[p * ocols + q] = input[best];
            argmax[p * ocols + q] = best;
        }
    }
}

/// 2×2 max pooling with stride 2; returns the pooled map and, for every
/// output cell, the flat index of the input element that produced it.
pub fn maxpool2(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (rows, cols) = input.dims2()?;
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::Shape(format!(
            "max pooling needs even dims, got {rows}x{cols}"
        )));
    }
    let n = (rows / 2) * (cols / 2);
    let mut out = vec![0.0; n];
    let mut arg = vec![0; n];
    maxpool2_raw(input.data(), (rows, cols), &mut out, &mut arg);
    Ok((Tensor::from_vec(&[rows / 2, cols / 2], out)?, arg))
}
