//! Versioned binary model files.
//!
//! Layout (little-endian): magic `OWM1`, kind `u8`, scheme id `u8`, frame
//! length `u16`, tensor count `u32`, then per tensor: name length `u8`,
//! UTF-8 name, dtype `u8` (0 = f64, 1 = u32), rank `u8`, `rank × u32` dims
//! and the row-major payload.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::adaboost::AdaBoostEnsemble;
use crate::cnn::CnnDemodulator;
use crate::dataset::LabeledDataset;
use crate::dbn::DbnDemodulator;
use crate::mld::MldParams;
use crate::modulation::ModulationScheme;
use crate::neural::{Activation, ConvLayer, DenseLayer, Layer, Network};
use crate::{Decision, Demodulator, Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"OWM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Cnn,
    Dbn,
    AdaBoost,
    Mld,
}

impl ModelKind {
    fn code(self) -> u8 {
        match self {
            ModelKind::Cnn => 1,
            ModelKind::Dbn => 2,
            ModelKind::AdaBoost => 3,
            ModelKind::Mld => 4,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(ModelKind::Cnn),
            2 => Some(ModelKind::Dbn),
            3 => Some(ModelKind::AdaBoost),
            4 => Some(ModelKind::Mld),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Dbn => "dbn",
            ModelKind::AdaBoost => "adaboost",
            ModelKind::Mld => "mld",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F64(Vec<f64>),
    U32(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: TensorData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBlob {
    pub kind: ModelKind,
    pub scheme: ModulationScheme,
    pub n: u16,
    pub tensors: Vec<NamedTensor>,
}

impl ModelBlob {
    pub fn new(kind: ModelKind, scheme: ModulationScheme, n: usize) -> Self {
        ModelBlob {
            kind,
            scheme,
            n: n as u16,
            tensors: Vec::new(),
        }
    }

    pub fn push_f64(&mut self, name: &str, dims: &[usize], data: Vec<f64>) {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        self.tensors.push(NamedTensor {
            name: name.to_string(),
            dims: dims.iter().map(|&d| d as u32).collect(),
            data: TensorData::F64(data),
        });
    }

    pub fn push_u32(&mut self, name: &str, dims: &[usize], data: Vec<u32>) {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        self.tensors.push(NamedTensor {
            name: name.to_string(),
            dims: dims.iter().map(|&d| d as u32).collect(),
            data: TensorData::U32(data),
        });
    }

    fn find(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Parse {
                offset: 0,
                message: format!("model has no tensor {name:?}"),
            })
    }

    pub fn f64(&self, name: &str) -> Result<(Vec<usize>, &[f64])> {
        let t = self.find(name)?;
        match &t.data {
            TensorData::F64(v) => Ok((t.dims.iter().map(|&d| d as usize).collect(), v)),
            TensorData::U32(_) => Err(Error::Parse {
                offset: 0,
                message: format!("tensor {name:?} is not f64"),
            }),
        }
    }

    pub fn u32(&self, name: &str) -> Result<(Vec<usize>, &[u32])> {
        let t = self.find(name)?;
        match &t.data {
            TensorData::U32(v) => Ok((t.dims.iter().map(|&d| d as usize).collect(), v)),
            TensorData::F64(_) => Err(Error::Parse {
                offset: 0,
                message: format!("tensor {name:?} is not u32"),
            }),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.push(self.kind.code());
        out.push(self.scheme.id());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.push(t.name.len() as u8);
            out.extend_from_slice(t.name.as_bytes());
            out.push(match t.data {
                TensorData::F64(_) => 0,
                TensorData::U32(_) => 1,
            });
            out.push(t.dims.len() as u8);
            for d in &t.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            match &t.data {
                TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                TensorData::U32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |len: usize, what: &str| -> Result<(usize, &[u8])> {
            if bytes.len() - pos < len {
                return Err(Error::Parse {
                    offset: pos as u64,
                    message: format!("truncated while reading {what}"),
                });
            }
            let at = pos;
            pos += len;
            Ok((at, &bytes[at..at + len]))
        };
        let (_, magic) = take(4, "magic")?;
        if &magic[..3] != b"OWM" {
            return Err(Error::Parse {
                offset: 0,
                message: "not a model file".into(),
            });
        }
        if magic[3] != b'1' {
            return Err(Error::VersionMismatch {
                expected: "OWM1".into(),
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let (at, k) = take(1, "kind")?;
        let kind = ModelKind::from_code(k[0]).ok_or_else(|| Error::Parse {
            offset: at as u64,
            message: format!("unknown model kind {}", k[0]),
        })?;
        let (at, s) = take(1, "scheme")?;
        let scheme = ModulationScheme::from_id(s[0]).ok_or_else(|| Error::Parse {
            offset: at as u64,
            message: format!("unknown scheme id {}", s[0]),
        })?;
        let n = u16::from_le_bytes(take(2, "frame length")?.1.try_into().unwrap());
        let count = u32::from_le_bytes(take(4, "tensor count")?.1.try_into().unwrap());
        let mut tensors = Vec::new();
        for _ in 0..count {
            let name_len = usize::from(take(1, "name length")?.1[0]);
            let (at, name) = take(name_len, "tensor name")?;
            let name = std::str::from_utf8(name)
                .map_err(|_| Error::Parse {
                    offset: at as u64,
                    message: "tensor name is not UTF-8".into(),
                })?
                .to_string();
            let (at, dtype) = take(1, "dtype")?;
            let dtype = dtype[0];
            let rank = usize::from(take(1, "rank")?.1[0]);
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(u32::from_le_bytes(take(4, "dims")?.1.try_into().unwrap()));
            }
            let len: usize = dims.iter().map(|&d| d as usize).product();
            let data = match dtype {
                0 => {
                    let (_, raw) = take(len * 8, &format!("payload of {name}"))?;
                    TensorData::F64(
                        raw.chunks_exact(8)
                            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                            .collect(),
                    )
                }
                1 => {
                    let (_, raw) = take(len * 4, &format!("payload of {name}"))?;
                    TensorData::U32(
                        raw.chunks_exact(4)
                            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                            .collect(),
                    )
                }
                other => {
                    return Err(Error::Parse {
                        offset: at as u64,
                        message: format!("unknown dtype {other}"),
                    })
                }
            };
            tensors.push(NamedTensor { name, dims, data });
        }
        if pos != bytes.len() {
            return Err(Error::Parse {
                offset: pos as u64,
                message: "trailing bytes after last tensor".into(),
            });
        }
        Ok(ModelBlob {
            kind,
            scheme,
            n,
            tensors,
        })
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }
}

/// Store a network under `prefix`: a `layout` tensor followed by per-layer
/// weights and biases.
pub fn push_network(blob: &mut ModelBlob, prefix: &str, net: &Network) {
    let (m, r, c) = net.input_shape();
    let mut layout = vec![m as u32, r as u32, c as u32];
    for (i, layer) in net.layers().iter().enumerate() {
        match layer {
            Layer::Conv(l) => {
                layout.extend([1, l.in_maps as u32, l.out_maps as u32, l.kernel as u32]);
                blob.push_f64(
                    &format!("{prefix}.{i}.w"),
                    &[l.out_maps, l.in_maps, l.kernel, l.kernel],
                    l.weights.clone(),
                );
                blob.push_f64(&format!("{prefix}.{i}.b"), &[l.out_maps], l.bias.clone());
            }
            Layer::MaxPool2 => layout.extend([2, 0, 0, 0]),
            Layer::Dense(l) => {
                let act = match l.activation {
                    Activation::Sigmoid => 0,
                    Activation::Identity => 1,
                };
                layout.extend([3, l.inputs as u32, l.outputs as u32, act]);
                blob.push_f64(&format!("{prefix}.{i}.w"), &[l.outputs, l.inputs], l.weights.clone());
                blob.push_f64(&format!("{prefix}.{i}.b"), &[l.outputs], l.bias.clone());
            }
        }
    }
    let len = layout.len();
    blob.push_u32(&format!("{prefix}.layout"), &[len], layout);
}

pub fn read_network(blob: &ModelBlob, prefix: &str) -> Result<Network> {
    let bad = |m: String| Error::Parse { offset: 0, message: m };
    let (_, layout) = blob.u32(&format!("{prefix}.layout"))?;
    if layout.len() < 3 || (layout.len() - 3) % 4 != 0 {
        return Err(bad(format!("malformed layout for {prefix}")));
    }
    let input = (layout[0] as usize, layout[1] as usize, layout[2] as usize);
    let mut layers = Vec::new();
    for (i, spec) in layout[3..].chunks_exact(4).enumerate() {
        let (a, b, c) = (spec[1] as usize, spec[2] as usize, spec[3] as usize);
        let weights = |shape_len: usize| -> Result<Vec<f64>> {
            let (_, w) = blob.f64(&format!("{prefix}.{i}.w"))?;
            if w.len() != shape_len {
                return Err(bad(format!("{prefix}.{i}.w has {} values, expected {shape_len}", w.len())));
            }
            Ok(w.to_vec())
        };
        let bias = |len: usize| -> Result<Vec<f64>> {
            let (_, v) = blob.f64(&format!("{prefix}.{i}.b"))?;
            if v.len() != len {
                return Err(bad(format!("{prefix}.{i}.b has {} values, expected {len}", v.len())));
            }
            Ok(v.to_vec())
        };
        let layer = match spec[0] {
            1 => Layer::Conv(ConvLayer {
                in_maps: a,
                out_maps: b,
                kernel: c,
                weights: weights(a * b * c * c)?,
                bias: bias(b)?,
            }),
            2 => Layer::MaxPool2,
            3 => Layer::Dense(DenseLayer {
                inputs: a,
                outputs: b,
                weights: weights(a * b)?,
                bias: bias(b)?,
                activation: if c == 0 {
                    Activation::Sigmoid
                } else {
                    Activation::Identity
                },
            }),
            other => return Err(bad(format!("unknown layer code {other}"))),
        };
        layers.push(layer);
    }
    Network::new(input, layers)
}

/// Any trained demodulator.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Cnn(CnnDemodulator),
    Dbn(DbnDemodulator),
    AdaBoost(AdaBoostEnsemble),
    Mld(MldParams),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Cnn(_) => ModelKind::Cnn,
            TrainedModel::Dbn(_) => ModelKind::Dbn,
            TrainedModel::AdaBoost(_) => ModelKind::AdaBoost,
            TrainedModel::Mld(_) => ModelKind::Mld,
        }
    }

    pub fn to_blob(&self) -> ModelBlob {
        match self {
            TrainedModel::Cnn(m) => m.to_blob(),
            TrainedModel::Dbn(m) => m.to_blob(),
            TrainedModel::AdaBoost(m) => m.to_blob(),
            TrainedModel::Mld(m) => m.to_blob(),
        }
    }

    /// Rebuild a model. AdaBoost ensembles reference their training set by
    /// index, so it must be supplied (and match the stored digest).
    pub fn from_blob(blob: &ModelBlob, training_set: Option<&LabeledDataset>) -> Result<Self> {
        Ok(match blob.kind {
            ModelKind::Cnn => TrainedModel::Cnn(CnnDemodulator::from_blob(blob)?),
            ModelKind::Dbn => TrainedModel::Dbn(DbnDemodulator::from_blob(blob)?),
            ModelKind::Mld => TrainedModel::Mld(MldParams::from_blob(blob)?),
            ModelKind::AdaBoost => {
                let train = training_set.ok_or_else(|| {
                    Error::InvalidArgument("an AdaBoost model needs its training dataset to load".into())
                })?;
                TrainedModel::AdaBoost(AdaBoostEnsemble::from_blob(blob, train)?)
            }
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_blob().to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path, training_set: Option<&LabeledDataset>) -> Result<Self> {
        let blob = ModelBlob::from_bytes(&fs::read(path)?)?;
        Self::from_blob(&blob, training_set)
    }

    fn inner(&self) -> &dyn Demodulator {
        match self {
            TrainedModel::Cnn(m) => m,
            TrainedModel::Dbn(m) => m,
            TrainedModel::AdaBoost(m) => m,
            TrainedModel::Mld(m) => m,
        }
    }
}

impl Demodulator for TrainedModel {
    fn scheme(&self) -> ModulationScheme {
        self.inner().scheme()
    }

    fn classify(&self, frame: &[f64]) -> Result<Decision> {
        self.inner().classify(frame)
    }

    fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        self.inner().accuracy(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn network_round_trip() {
        let mut rng = seed::rng(1);
        let net = Network::new(
            (1, 8, 8),
            vec![
                Layer::Conv(ConvLayer::random(1, 2, 3, &mut rng)),
                Layer::MaxPool2,
                Layer::Dense(DenseLayer::random(18, 4, Activation::Sigmoid, &mut rng)),
                Layer::Dense(DenseLayer::random(4, 2, Activation::Identity, &mut rng)),
            ],
        )
        .unwrap();
        let mut blob = ModelBlob::new(ModelKind::Cnn, ModulationScheme::Qpsk, 40);
        push_network(&mut blob, "net", &net);
        let back = ModelBlob::from_bytes(&blob.to_bytes()).unwrap();
        assert_eq!(back, blob);
        assert_eq!(read_network(&back, "net").unwrap(), net);
    }

    #[test]
    fn malformed_files() {
        let blob = ModelBlob::new(ModelKind::Mld, ModulationScheme::Ook, 10);
        let mut bytes = blob.to_bytes();
        bytes[3] = b'9';
        assert!(matches!(ModelBlob::from_bytes(&bytes), Err(Error::VersionMismatch { .. })));
        let mut blob = ModelBlob::new(ModelKind::Mld, ModulationScheme::Ook, 10);
        blob.push_f64("x", &[3], vec![1.0, 2.0, 3.0]);
        let bytes = blob.to_bytes();
        match ModelBlob::from_bytes(&bytes[..bytes.len() - 1]) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 12),
            other => panic!("{other:?}"),
        }
    }
}
