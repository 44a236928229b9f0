//! Synthetic link: `y = g·x + n` with receiver-referred white Gaussian noise.
//!
//! The gain is either unity with the noise set from a target SNR, or derived
//! from a line-of-sight power law `g = g0 · (d0 / d)^γ` with a fixed noise
//! standard deviation.

use rand_distr::{Distribution, StandardNormal};

use crate::modulation::WaveformFrame;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainModel {
    /// Unit gain; the noise std is chosen so that `signal_power / σ² = 10^(snr_db/10)`.
    DirectSnr { snr_db: f64, signal_power: f64 },
    Distance {
        distance_cm: f64,
        ref_distance_cm: f64,
        path_exponent: f64,
        ref_gain: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub gain_model: GainModel,
    /// Noise std in distance mode; ignored in direct-SNR mode.
    pub noise_sigma: f64,
    /// Replace negative received samples with zero.
    pub clip_negative: bool,
    pub seed: u64,
}

impl ChannelConfig {
    pub const DEFAULT_REF_DISTANCE_CM: f64 = 10.0;
    pub const DEFAULT_PATH_EXPONENT: f64 = 2.0;

    pub fn identity() -> Self {
        ChannelConfig {
            gain_model: GainModel::Distance {
                distance_cm: 1.0,
                ref_distance_cm: 1.0,
                path_exponent: 0.0,
                ref_gain: 1.0,
            },
            noise_sigma: 0.0,
            clip_negative: false,
            seed: 0,
        }
    }

    pub fn direct_snr(snr_db: f64, signal_power: f64, seed: u64) -> Self {
        ChannelConfig {
            gain_model: GainModel::DirectSnr {
                snr_db,
                signal_power,
            },
            noise_sigma: 0.0,
            clip_negative: false,
            seed,
        }
    }

    /// Power-law channel with the default reference distance and exponent.
    pub fn distance(distance_cm: f64, noise_sigma: f64, seed: u64) -> Self {
        ChannelConfig {
            gain_model: GainModel::Distance {
                distance_cm,
                ref_distance_cm: Self::DEFAULT_REF_DISTANCE_CM,
                path_exponent: Self::DEFAULT_PATH_EXPONENT,
                ref_gain: 1.0,
            },
            noise_sigma,
            clip_negative: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidChannel(m));
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad(format!("noise sigma {} must be finite and >= 0", self.noise_sigma));
        }
        match self.gain_model {
            GainModel::DirectSnr {
                snr_db,
                signal_power,
            } => {
                if snr_db.is_nan() {
                    return bad("snr_db is NaN".into());
                }
                if !(signal_power > 0.0) || !signal_power.is_finite() {
                    return bad(format!("signal power {signal_power} must be positive"));
                }
            }
            GainModel::Distance {
                distance_cm,
                ref_distance_cm,
                path_exponent,
                ref_gain,
            } => {
                if !(distance_cm > 0.0) {
                    return bad(format!("distance {distance_cm} cm must be positive"));
                }
                if !(ref_distance_cm > 0.0) {
                    return bad(format!("reference distance {ref_distance_cm} cm must be positive"));
                }
                if !(path_exponent >= 0.0) {
                    return bad(format!("path exponent {path_exponent} must be >= 0"));
                }
                if !(ref_gain > 0.0) {
                    return bad(format!("reference gain {ref_gain} must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn gain(&self) -> f64 {
        match self.gain_model {
            GainModel::DirectSnr { .. } => 1.0,
            GainModel::Distance {
                distance_cm,
                ref_distance_cm,
                path_exponent,
                ref_gain,
            } => ref_gain * (ref_distance_cm / distance_cm).powf(path_exponent),
        }
    }

    /// Noise standard deviation actually applied.
    pub fn sigma(&self) -> f64 {
        match self.gain_model {
            GainModel::DirectSnr {
                snr_db,
                signal_power,
            } => {
                if snr_db == f64::INFINITY {
                    0.0
                } else {
                    (signal_power / 10f64.powf(snr_db / 10.0)).sqrt()
                }
            }
            GainModel::Distance { .. } => self.noise_sigma,
        }
    }

    /// `key=value` pairs describing this configuration (dataset headers, CSV).
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match self.gain_model {
            GainModel::DirectSnr {
                snr_db,
                signal_power,
            } => {
                out.push(("channel.mode", "direct_snr".to_string()));
                out.push(("channel.snr_db", snr_db.to_string()));
                out.push(("channel.signal_power", signal_power.to_string()));
            }
            GainModel::Distance {
                distance_cm,
                ref_distance_cm,
                path_exponent,
                ref_gain,
            } => {
                out.push(("channel.mode", "distance".to_string()));
                out.push(("channel.distance_cm", distance_cm.to_string()));
                out.push(("channel.ref_distance_cm", ref_distance_cm.to_string()));
                out.push(("channel.path_exponent", path_exponent.to_string()));
                out.push(("channel.ref_gain", ref_gain.to_string()));
                out.push(("channel.noise_sigma", self.noise_sigma.to_string()));
            }
        }
        out.push(("channel.clip_negative", self.clip_negative.to_string()));
        out.push(("channel.seed", self.seed.to_string()));
        out
    }

    /// Inverse of [`ChannelConfig::describe`]; `get` looks a key up.
    pub fn from_description(get: impl Fn(&str) -> Option<String>) -> Result<Option<Self>> {
        let Some(mode) = get("channel.mode") else {
            return Ok(None);
        };
        let num = |key: &str| -> Result<f64> {
            get(key)
                .ok_or_else(|| Error::InvalidChannel(format!("missing {key}")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidChannel(format!("{key}: {e}")))
        };
        let gain_model = match mode.as_str() {
            "direct_snr" => GainModel::DirectSnr {
                snr_db: num("channel.snr_db")?,
                signal_power: num("channel.signal_power")?,
            },
            "distance" => GainModel::Distance {
                distance_cm: num("channel.distance_cm")?,
                ref_distance_cm: num("channel.ref_distance_cm")?,
                path_exponent: num("channel.path_exponent")?,
                ref_gain: num("channel.ref_gain")?,
            },
            other => return Err(Error::InvalidChannel(format!("unknown mode {other:?}"))),
        };
        let noise_sigma = match gain_model {
            GainModel::Distance { .. } => num("channel.noise_sigma")?,
            GainModel::DirectSnr { .. } => 0.0,
        };
        let clip_negative = get("channel.clip_negative").is_some_and(|v| v == "true");
        let seed = get("channel.seed")
            .map(|s| s.parse::<u64>())
            .transpose()
            .map_err(|e| Error::InvalidChannel(format!("channel.seed: {e}")))?
            .unwrap_or(0);
        Ok(Some(ChannelConfig {
            gain_model,
            noise_sigma,
            clip_negative,
            seed,
        }))
    }
}

/// Pass one frame through the channel using noise sub-stream 0.
pub fn apply_channel(frame: &WaveformFrame, cfg: &ChannelConfig) -> Result<WaveformFrame> {
    apply_channel_at(frame, cfg, 0)
}

/// Pass a frame through the channel using the noise sub-stream `index`, so
/// frames of a stream can be processed independently and in any order.
pub fn apply_channel_at(
    frame: &WaveformFrame,
    cfg: &ChannelConfig,
    index: u64,
) -> Result<WaveformFrame> {
    cfg.validate()?;
    let g = cfg.gain();
    let sigma = cfg.sigma();
    let mut rng = seed::stream_rng(cfg.seed, index);
    let samples = frame
        .samples
        .iter()
        .map(|&x| {
            let mut y = g * x;
            if sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                y += sigma * z;
            }
            if cfg.clip_negative {
                y = y.max(0.0);
            }
            y
        })
        .collect();
    Ok(WaveformFrame {
        samples,
        label: frame.label,
    })
}

/// Frame `i` uses noise sub-stream `i`.
pub fn apply_channel_stream(
    frames: &[WaveformFrame],
    cfg: &ChannelConfig,
) -> Result<Vec<WaveformFrame>> {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| apply_channel_at(f, cfg, i as u64))
        .collect()
}

/// Received SNR in dB for a transmitted signal of power `reference_power`.
/// A noiseless channel reports `f64::INFINITY`.
pub fn snr_for_config(cfg: &ChannelConfig, reference_power: f64) -> f64 {
    let sigma = cfg.sigma();
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    let g = cfg.gain();
    10.0 * (g * g * reference_power / (sigma * sigma)).log10()
}
