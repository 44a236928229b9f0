//! Transmit-side waveform synthesis.
//!
//! One symbol period is represented by `N` uniform samples taken at
//! `t = (n - 1) T / N`, `n = 1..=N`. Carrier schemes (QPSK and M-QAM) emit
//! `bias + Re[s · e^{j2π c t/T}]` with a rectangular pulse and `c` carrier
//! cycles per period; OOK and 4-PPM are unipolar baseband schemes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModulationScheme {
    Ook,
    Qpsk,
    Ppm4,
    Qam16,
    Qam32,
    Qam64,
    Qam128,
    Qam256,
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 8] = [
        ModulationScheme::Ook,
        ModulationScheme::Qpsk,
        ModulationScheme::Ppm4,
        ModulationScheme::Qam16,
        ModulationScheme::Qam32,
        ModulationScheme::Qam64,
        ModulationScheme::Qam128,
        ModulationScheme::Qam256,
    ];

    /// Alphabet size M; the label set is `1..=M`.
    pub fn alphabet_size(self) -> usize {
        match self {
            ModulationScheme::Ook => 2,
            ModulationScheme::Qpsk | ModulationScheme::Ppm4 => 4,
            ModulationScheme::Qam16 => 16,
            ModulationScheme::Qam32 => 32,
            ModulationScheme::Qam64 => 64,
            ModulationScheme::Qam128 => 128,
            ModulationScheme::Qam256 => 256,
        }
    }

    pub fn bits_per_symbol(self) -> f64 {
        (self.alphabet_size() as f64).log2()
    }

    /// Stable identifier used by the binary file formats.
    pub fn id(self) -> u8 {
        match self {
            ModulationScheme::Ook => 0,
            ModulationScheme::Qpsk => 1,
            ModulationScheme::Ppm4 => 2,
            ModulationScheme::Qam16 => 3,
            ModulationScheme::Qam32 => 4,
            ModulationScheme::Qam64 => 5,
            ModulationScheme::Qam128 => 6,
            ModulationScheme::Qam256 => 7,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationScheme::Ook => "ook",
            ModulationScheme::Qpsk => "qpsk",
            ModulationScheme::Ppm4 => "4ppm",
            ModulationScheme::Qam16 => "16qam",
            ModulationScheme::Qam32 => "32qam",
            ModulationScheme::Qam64 => "64qam",
            ModulationScheme::Qam128 => "128qam",
            ModulationScheme::Qam256 => "256qam",
        }
    }

    /// True for schemes that ride on a carrier (QPSK and M-QAM).
    pub fn uses_carrier(self) -> bool {
        !matches!(self, ModulationScheme::Ook | ModulationScheme::Ppm4)
    }

    /// The per-period sample counts recorded in the reference measurement
    /// campaign for this scheme.
    pub fn standard_sample_counts(self) -> [usize; 4] {
        match self {
            ModulationScheme::Ppm4 => [8, 16, 32, 64],
            _ => [10, 20, 40, 80],
        }
    }

    /// Reference (train, test) period counts per scheme.
    pub fn reference_split_sizes(self) -> (usize, usize) {
        match self {
            ModulationScheme::Ook | ModulationScheme::Qpsk | ModulationScheme::Qam16 => {
                (12_000, 6_000)
            }
            ModulationScheme::Ppm4 => (7_500, 3_750),
            ModulationScheme::Qam32 => (24_000, 12_000),
            ModulationScheme::Qam64 | ModulationScheme::Qam128 | ModulationScheme::Qam256 => {
                (48_000, 24_000)
            }
        }
    }

    /// Check that `n` samples per period can carry this scheme.
    pub fn validate_sample_count(self, n: usize, carrier: &CarrierConfig) -> Result<()> {
        let err = |reason| Error::InvalidSampleCount {
            scheme: self.name(),
            n,
            reason,
        };
        if n == 0 {
            return Err(err("must be positive"));
        }
        if n > usize::from(u16::MAX) {
            return Err(err("exceeds 65535"));
        }
        match self {
            ModulationScheme::Ook => Ok(()),
            ModulationScheme::Ppm4 if n % 4 != 0 => Err(err("4-PPM needs a multiple of 4")),
            ModulationScheme::Ppm4 => Ok(()),
            _ if n < 4 * carrier.cycles_per_period => {
                Err(err("fewer than 4 samples per carrier cycle"))
            }
            _ => Ok(()),
        }
    }

    /// Constellation points `(I, Q)` indexed by `label - 1`, scaled so the
    /// largest magnitude is 1. Empty for baseband schemes.
    pub fn constellation(self) -> Vec<(f64, f64)> {
        let raw = match self {
            ModulationScheme::Ook | ModulationScheme::Ppm4 => return Vec::new(),
            ModulationScheme::Qpsk => square_gray(2),
            ModulationScheme::Qam16 => square_gray(4),
            ModulationScheme::Qam64 => square_gray(8),
            ModulationScheme::Qam256 => square_gray(16),
            ModulationScheme::Qam32 => cross(6, 3),
            ModulationScheme::Qam128 => cross(12, 7),
        };
        let peak = raw
            .iter()
            .map(|&(i, q)| (i * i + q * q).sqrt())
            .fold(0.0, f64::max);
        raw.into_iter().map(|(i, q)| (i / peak, q / peak)).collect()
    }

    /// Bias that makes every emitted sample non-negative.
    pub fn auto_bias(self) -> f64 {
        if self.uses_carrier() {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        let scheme = match key.as_str() {
            "ook" => ModulationScheme::Ook,
            "qpsk" => ModulationScheme::Qpsk,
            "4ppm" | "ppm4" | "ppm" => ModulationScheme::Ppm4,
            "16qam" | "qam16" => ModulationScheme::Qam16,
            "32qam" | "qam32" => ModulationScheme::Qam32,
            "64qam" | "qam64" => ModulationScheme::Qam64,
            "128qam" | "qam128" => ModulationScheme::Qam128,
            "256qam" | "qam256" => ModulationScheme::Qam256,
            _ => return Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        };
        Ok(scheme)
    }
}

/// Square grid with `side` levels per axis; Gray-coded per axis, the high
/// half of the label bits selecting the in-phase level.
fn square_gray(side: usize) -> Vec<(f64, f64)> {
    let axis_bits = side.trailing_zeros();
    let half = (side - 1) as f64;
    (0..side * side)
        .map(|s| {
            let i_level = gray_decode(s >> axis_bits);
            let q_level = gray_decode(s & (side - 1));
            (2.0 * i_level as f64 - half, 2.0 * q_level as f64 - half)
        })
        .collect()
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Cross constellation: a `side`×`side` odd-integer grid with the corners
/// where both |I| and |Q| exceed `limit` removed. Labelled row-major from the
/// top-left (largest Q, smallest I).
fn cross(side: usize, limit: i32) -> Vec<(f64, f64)> {
    let levels: Vec<i32> = (0..side as i32).map(|k| 2 * k - (side as i32 - 1)).collect();
    let mut pts = Vec::new();
    for &q in levels.iter().rev() {
        for &i in &levels {
            if i.abs() > limit && q.abs() > limit {
                continue;
            }
            pts.push((f64::from(i), f64::from(q)));
        }
    }
    pts
}

/// Carrier and bias settings shared by all frames of a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierConfig {
    /// Carrier cycles within one symbol period.
    pub cycles_per_period: usize,
    /// DC bias added to every sample; `None` selects the scheme's auto-bias.
    pub dc_bias: Option<f64>,
}

impl Default for CarrierConfig {
    fn default() -> Self {
        CarrierConfig {
            cycles_per_period: 2,
            dc_bias: None,
        }
    }
}

impl CarrierConfig {
    pub fn bias_for(&self, scheme: ModulationScheme) -> f64 {
        self.dc_bias.unwrap_or_else(|| scheme.auto_bias())
    }

    fn validate(&self, scheme: ModulationScheme) -> Result<()> {
        if self.cycles_per_period == 0 {
            return Err(Error::InvalidCarrier("cycles_per_period must be >= 1".into()));
        }
        if let Some(b) = self.dc_bias {
            if !b.is_finite() || b < scheme.auto_bias() {
                return Err(Error::InvalidCarrier(format!(
                    "dc_bias {b} would emit negative intensity for {scheme} (minimum {})",
                    scheme.auto_bias()
                )));
            }
        }
        Ok(())
    }
}

/// One symbol period: `N` samples and the transmitted label.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformFrame {
    pub samples: Vec<f64>,
    pub label: u16,
}

impl WaveformFrame {
    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

/// Sampled transmit waveform of `symbol` (1-based).
pub fn symbol_to_frame(
    scheme: ModulationScheme,
    symbol: usize,
    n: usize,
    carrier: &CarrierConfig,
) -> Result<WaveformFrame> {
    let m = scheme.alphabet_size();
    if symbol == 0 || symbol > m {
        return Err(Error::SymbolOutOfRange {
            symbol,
            alphabet: m,
        });
    }
    carrier.validate(scheme)?;
    scheme.validate_sample_count(n, carrier)?;
    let bias = carrier.bias_for(scheme);
    let samples = match scheme {
        ModulationScheme::Ook => {
            let level = if symbol == 2 { 1.0 } else { 0.0 };
            vec![bias + level; n]
        }
        ModulationScheme::Ppm4 => {
            let chip = n / 4;
            let active = symbol - 1;
            (0..n)
                .map(|k| if k / chip == active { bias + 1.0 } else { bias })
                .collect()
        }
        _ => {
            let (i, q) = scheme.constellation()[symbol - 1];
            carrier_samples(i, q, n, carrier.cycles_per_period, bias)
        }
    };
    Ok(WaveformFrame {
        samples,
        label: symbol as u16,
    })
}

fn carrier_samples(i: f64, q: f64, n: usize, cycles: usize, bias: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            // Reduce the phase index modulo N before scaling so equal phases
            // produce bit-identical samples.
            let phase = 2.0 * PI * ((cycles * k) % n) as f64 / n as f64;
            bias + i * phase.cos() - q * phase.sin()
        })
        .collect()
}

/// `count` i.i.d. uniform symbols from the label set.
pub fn random_symbol_stream(scheme: ModulationScheme, count: usize, seed: u64) -> Vec<u16> {
    let m = scheme.alphabet_size() as u16;
    let mut rng = seed::rng(seed);
    (0..count).map(|_| rng.random_range(1..=m)).collect()
}

pub fn modulate_stream(
    scheme: ModulationScheme,
    symbols: &[u16],
    n: usize,
    carrier: &CarrierConfig,
) -> Result<Vec<WaveformFrame>> {
    symbols
        .iter()
        .map(|&s| symbol_to_frame(scheme, usize::from(s), n, carrier))
        .collect()
}

/// Average information-bearing power of the scheme: the variance of the
/// emitted samples over a uniformly drawn symbol, with the DC level removed.
/// This is the reference power used to set a target SNR.
pub fn signal_power(scheme: ModulationScheme, n: usize, carrier: &CarrierConfig) -> Result<f64> {
    let frames: Vec<WaveformFrame> = (1..=scheme.alphabet_size())
        .map(|s| symbol_to_frame(scheme, s, n, carrier))
        .collect::<Result<_>>()?;
    let count = (frames.len() * n) as f64;
    let mean = frames.iter().flat_map(|f| &f.samples).sum::<f64>() / count;
    Ok(frames
        .iter()
        .flat_map(|f| &f.samples)
        .map(|x| (x - mean).powi(2))
        .sum::<f64>()
        / count)
}
