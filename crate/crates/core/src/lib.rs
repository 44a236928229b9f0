//! Demodulation toolkit for intensity-modulated / direct-detection optical links.
//!
//! The pipeline is: [`modulation`] synthesizes one waveform frame per symbol,
//! [`channel`] applies gain and additive Gaussian noise, [`dataset`] pools,
//! normalizes and persists labelled frames, and the demodulators
//! ([`cnn`], [`dbn`], [`adaboost`], plus the Gaussian [`mld`] baseline)
//! recover the symbol label from each frame. [`bench`] runs parameter sweeps
//! and writes CSV result tables.

pub mod adaboost;
pub mod bench;
pub mod channel;
pub mod cnn;
pub mod dataset;
pub mod dbn;
mod error;
pub mod mld;
pub mod model;
pub mod modulation;
pub mod neural;
pub mod rasterizer;
pub mod seed;

pub use error::{Error, Result};
pub use modulation::{CarrierConfig, ModulationScheme, WaveformFrame};

/// A demodulation decision: the 1-based class label and the symbol value it
/// stands for (`label - 1`, whose binary expansion is the bit group).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub label: u16,
    pub symbol: u32,
}

impl Decision {
    pub fn from_label(label: u16) -> Self {
        Decision {
            label,
            symbol: u32::from(label) - 1,
        }
    }
}

/// Index of the largest score, ties going to the smallest index.
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Common interface of every trained demodulator.
pub trait Demodulator {
    fn scheme(&self) -> ModulationScheme;

    /// Classify one normalized frame.
    fn classify(&self, frame: &[f64]) -> Result<Decision>;

    /// Fraction of frames in `ds` whose label is recovered.
    fn accuracy(&self, ds: &dataset::LabeledDataset) -> Result<f64> {
        if ds.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0usize;
        for (frame, label) in ds.iter() {
            if self.classify(frame)?.label == label {
                correct += 1;
            }
        }
        Ok(correct as f64 / ds.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_to_first() {
        assert_eq!(argmax_first(&[0.1, 0.9]), 1);
        assert_eq!(argmax_first(&[0.5, 0.5]), 0);
        assert_eq!(argmax_first(&[0.2, 0.7, 0.7]), 1);
    }
}
