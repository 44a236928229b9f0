//! Labelled, normalized frame datasets and their on-disk formats.
//!
//! Two interchange formats are supported:
//!
//! * text: `# key=value` header lines followed by one `label,s1,...,sN` row
//!   per frame;
//! * binary: magic `OWD1`, a little-endian header
//!   `(scheme u8, N u16, K u32, y_min f64, y_max f64)` and `K` records of
//!   `(label u16, N × f32)`.
//!
//! Normalized samples are rounded to the nearest `f32` when a dataset is
//! built, so both formats reproduce them bit-exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::channel::{apply_channel_at, ChannelConfig};
use crate::modulation::{symbol_to_frame, CarrierConfig, ModulationScheme};
use crate::{seed, Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"OWD1";
const TEXT_VERSION: &str = "1";

/// Output of [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub samples: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
}

/// Affine map of the pooled samples onto `[0, 1]`.
pub fn normalize(raw: &[f64]) -> Result<Normalized> {
    let (y_min, y_max) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if raw.is_empty() || !(y_max > y_min) || !(y_max - y_min).is_finite() {
        return Err(Error::Degenerate(format!(
            "normalization needs at least two distinct finite values (min {y_min}, max {y_max})"
        )));
    }
    Ok(Normalized {
        samples: apply_normalization(raw, y_min, y_max, false),
        y_min,
        y_max,
    })
}

/// Apply frozen statistics; `clamp` limits the result to `[0, 1]` for data
/// that was not part of the pool the statistics came from.
pub fn apply_normalization(raw: &[f64], y_min: f64, y_max: f64, clamp: bool) -> Vec<f64> {
    let range = y_max - y_min;
    raw.iter()
        .map(|&v| {
            let t = (v - y_min) / range;
            if clamp {
                t.clamp(0.0, 1.0)
            } else {
                t
            }
        })
        .collect()
}

/// How test data is normalized relative to training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationMode {
    /// Statistics from the training pool, frozen and reused (clamped) on test data.
    #[default]
    TrainFrozen,
    /// One set of statistics over the union of training and test pools.
    Joint,
}

/// A set of `K` normalized frames of a single scheme and length.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    scheme: ModulationScheme,
    n: usize,
    samples: Vec<f64>,
    labels: Vec<u16>,
    pub y_min: f64,
    pub y_max: f64,
    /// Generation seed, when known.
    pub seed: Option<u64>,
    /// Channel used to produce the frames, when known.
    pub channel: Option<ChannelConfig>,
}

impl LabeledDataset {
    /// Assemble a dataset from already-normalized samples (`labels.len() × n`).
    pub fn from_parts(
        scheme: ModulationScheme,
        n: usize,
        samples: Vec<f64>,
        labels: Vec<u16>,
        y_min: f64,
        y_max: f64,
    ) -> Result<Self> {
        if n == 0 || n > usize::from(u16::MAX) {
            return Err(Error::InvalidArgument(format!("frame length {n} out of range")));
        }
        if samples.len() != labels.len() * n {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n,
                actual: samples.len(),
            });
        }
        let m = scheme.alphabet_size() as u16;
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > m) {
            return Err(Error::SymbolOutOfRange {
                symbol: usize::from(bad),
                alphabet: usize::from(m),
            });
        }
        if !(y_max > y_min) {
            return Err(Error::Degenerate(format!("y_max {y_max} <= y_min {y_min}")));
        }
        if let Some(v) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("sample {v} outside [0, 1]")));
        }
        Ok(LabeledDataset {
            scheme,
            n,
            samples,
            labels,
            y_min,
            y_max,
            seed: None,
            channel: None,
        })
    }

    pub fn scheme(&self) -> ModulationScheme {
        self.scheme
    }

    /// Samples per frame.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.samples[i * self.n..(i + 1) * self.n]
    }

    pub fn label(&self, i: usize) -> u16 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// All samples, frame-major.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], u16)> + '_ {
        self.samples.chunks_exact(self.n).zip(self.labels.iter().copied())
    }

    /// Number of frames per label, indexed by `label - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.scheme.alphabet_size()];
        for &l in &self.labels {
            counts[usize::from(l) - 1] += 1;
        }
        counts
    }

    /// Subset by frame indices, keeping the normalization statistics.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        let mut samples = Vec::with_capacity(indices.len() * self.n);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            samples.extend_from_slice(self.frame(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset {
            samples,
            labels,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> LabeledDataset {
        LabeledDataset {
            scheme: self.scheme,
            n: self.n,
            samples: Vec::new(),
            labels: Vec::new(),
            y_min: self.y_min,
            y_max: self.y_max,
            seed: self.seed,
            channel: self.channel,
        }
    }

    /// SHA-256 of the binary serialization.
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_binary()).into()
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(27 + self.len() * (2 + 4 * self.n));
        out.extend_from_slice(BINARY_MAGIC);
        out.push(self.scheme.id());
        out.extend_from_slice(&(self.n as u16).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.y_min.to_le_bytes());
        out.extend_from_slice(&self.y_max.to_le_bytes());
        for (frame, label) in self.iter() {
            out.extend_from_slice(&label.to_le_bytes());
            for &s in frame {
                out.extend_from_slice(&(s as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if &magic[..3] != b"OWD" {
            return Err(Error::Parse {
                offset: 0,
                message: format!("bad magic {magic:?}"),
            });
        }
        if magic[3] != b'1' {
            return Err(Error::VersionMismatch {
                expected: "OWD1".into(),
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let scheme_at = r.pos;
        let id = r.take(1, "scheme id")?[0];
        let scheme = ModulationScheme::from_id(id).ok_or_else(|| Error::Parse {
            offset: scheme_at as u64,
            message: format!("unknown scheme id {id}"),
        })?;
        let n = usize::from(r.u16("N")?);
        let k = r.u32("K")? as usize;
        let y_min = r.f64("y_min")?;
        let y_max = r.f64("y_max")?;
        if n == 0 {
            return Err(Error::Parse {
                offset: 5,
                message: "N is zero".into(),
            });
        }
        let mut samples = Vec::with_capacity(k.min(1 << 20) * n);
        let mut labels = Vec::with_capacity(k.min(1 << 20));
        for i in 0..k {
            let at = r.pos;
            let label = r.u16(&format!("label of record {i}"))?;
            if label == 0 || usize::from(label) > scheme.alphabet_size() {
                return Err(Error::Parse {
                    offset: at as u64,
                    message: format!("label {label} outside 1..={}", scheme.alphabet_size()),
                });
            }
            labels.push(label);
            for j in 0..n {
                let v = r.f32(&format!("sample {j} of record {i}"))?;
                samples.push(f64::from(v));
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Parse {
                offset: r.pos as u64,
                message: format!("{} trailing bytes", bytes.len() - r.pos),
            });
        }
        LabeledDataset::from_parts(scheme, n, samples, labels, y_min, y_max)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut header = vec![
            ("format", "owd-text".to_string()),
            ("version", TEXT_VERSION.to_string()),
            ("scheme", self.scheme.name().to_string()),
            ("n", self.n.to_string()),
            ("k", self.len().to_string()),
        ];
        if let Some(s) = self.seed {
            header.push(("seed", s.to_string()));
        }
        header.push(("y_min", format!("{:?}", self.y_min)));
        header.push(("y_max", format!("{:?}", self.y_max)));
        if let Some(c) = &self.channel {
            header.extend(c.describe());
        }
        for (k, v) in header {
            out.push_str(&format!("# {k}={v}\n"));
        }
        for (frame, label) in self.iter() {
            out.push_str(&label.to_string());
            for &s in frame {
                // Samples sit on the f32 grid; the shortest f32 representation
                // has at most 9 significant digits and reads back exactly.
                out.push(',');
                out.push_str(&format!("{:?}", s as f32));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        let mut n: Option<usize> = None;
        let mut offset = 0u64;
        for line in text.split_inclusive('\n') {
            let at = offset;
            offset += line.len() as u64;
            let line = line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest.trim().split_once('=').ok_or_else(|| Error::Parse {
                    offset: at,
                    message: format!("header line without '=': {line:?}"),
                })?;
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            if n.is_none() {
                if let Some(v) = header.get("version") {
                    if v != TEXT_VERSION {
                        return Err(Error::VersionMismatch {
                            expected: TEXT_VERSION.into(),
                            found: v.clone(),
                        });
                    }
                }
                let declared = header.get("n").ok_or_else(|| Error::Parse {
                    offset: at,
                    message: "missing 'n' header before data".into(),
                })?;
                n = Some(declared.parse().map_err(|e| Error::Parse {
                    offset: at,
                    message: format!("n: {e}"),
                })?);
            }
            let n = n.unwrap_or_default();
            let mut fields = line.split(',');
            let label_field = fields.next().unwrap_or_default().trim();
            let label: u16 = label_field.parse().map_err(|e| Error::Parse {
                offset: at,
                message: format!("label {label_field:?}: {e}"),
            })?;
            let before = samples.len();
            for f in fields {
                let v: f32 = f.trim().parse().map_err(|e| Error::Parse {
                    offset: at,
                    message: format!("sample {f:?}: {e}"),
                })?;
                samples.push(f64::from(v));
            }
            if samples.len() - before != n {
                return Err(Error::Parse {
                    offset: at,
                    message: format!("row has {} samples, expected {n}", samples.len() - before),
                });
            }
            labels.push(label);
        }
        if let Some(v) = header.get("version") {
            if v != TEXT_VERSION {
                return Err(Error::VersionMismatch {
                    expected: TEXT_VERSION.into(),
                    found: v.clone(),
                });
            }
        }
        let field = |key: &str| -> Result<&String> {
            header.get(key).ok_or_else(|| Error::Parse {
                offset,
                message: format!("missing header {key:?}"),
            })
        };
        let parse_err = |key: &str, e: String| Error::Parse {
            offset: 0,
            message: format!("header {key}: {e}"),
        };
        let scheme: ModulationScheme = field("scheme")?.parse()?;
        let n: usize = field("n")?.parse().map_err(|e| parse_err("n", format!("{e}")))?;
        let k: usize = field("k")?.parse().map_err(|e| parse_err("k", format!("{e}")))?;
        let y_min: f64 = field("y_min")?.parse().map_err(|e| parse_err("y_min", format!("{e}")))?;
        let y_max: f64 = field("y_max")?.parse().map_err(|e| parse_err("y_max", format!("{e}")))?;
        if labels.len() != k {
            return Err(Error::Parse {
                offset,
                message: format!("header declares {k} frames, found {}", labels.len()),
            });
        }
        let mut ds = LabeledDataset::from_parts(scheme, n, samples, labels, y_min, y_max)?;
        ds.seed = header
            .get("seed")
            .map(|s| s.parse::<u64>())
            .transpose()
            .map_err(|e| parse_err("seed", format!("{e}")))?;
        ds.channel = ChannelConfig::from_description(|k| header.get(k).cloned())?;
        Ok(ds)
    }

    /// Write in the format implied by the extension: `.txt`/`.csv`/`.owdt`
    /// select text, anything else binary.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        if is_text_path(path) {
            f.write_all(self.to_text().as_bytes())?;
        } else {
            f.write_all(&self.to_binary())?;
        }
        Ok(())
    }

    /// Read either format, detected from the leading bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(b"OWD") {
            Self::from_binary(&bytes)
        } else {
            let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
                offset: e.utf8_error().valid_up_to() as u64,
                message: "not valid UTF-8".into(),
            })?;
            Self::from_text(&text)
        }
    }
}

fn is_text_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("txt" | "csv" | "owdt")
    )
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < len {
            return Err(Error::Parse {
                offset: self.pos as u64,
                message: format!(
                    "truncated while reading {what}: need {len} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Everything needed to synthesize a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    pub scheme: ModulationScheme,
    pub n: usize,
    pub carrier: CarrierConfig,
    pub channel: ChannelConfig,
    pub seed: u64,
}

/// `k` labels with every class within one of `k / M`, in seeded random order.
pub fn balanced_labels(scheme: ModulationScheme, k: usize, seed: u64) -> Vec<u16> {
    let m = scheme.alphabet_size();
    let mut labels: Vec<u16> = (0..k).map(|i| (i % m + 1) as u16).collect();
    labels.shuffle(&mut seed::rng(seed));
    labels
}

/// Received, un-normalized samples for the given labels; frame `i` uses
/// channel noise sub-stream `first_stream + i`.
fn received_samples(cfg: &GenerationConfig, labels: &[u16], first_stream: u64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(labels.len() * cfg.n);
    let templates: Vec<_> = (1..=cfg.scheme.alphabet_size())
        .map(|s| symbol_to_frame(cfg.scheme, s, cfg.n, &cfg.carrier))
        .collect::<Result<_>>()?;
    for (i, &l) in labels.iter().enumerate() {
        let rx = apply_channel_at(
            &templates[usize::from(l) - 1],
            &cfg.channel,
            first_stream + i as u64,
        )?;
        out.extend(rx.samples);
    }
    Ok(out)
}

fn to_f32_grid(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| f64::from(x as f32)).collect()
}

fn finish(cfg: &GenerationConfig, samples: Vec<f64>, labels: Vec<u16>, y_min: f64, y_max: f64) -> Result<LabeledDataset> {
    let mut ds = LabeledDataset::from_parts(cfg.scheme, cfg.n, to_f32_grid(samples), labels, y_min, y_max)?;
    ds.seed = Some(cfg.seed);
    ds.channel = Some(cfg.channel);
    Ok(ds)
}

/// Modulate `k` balanced symbols, pass them through the channel and
/// normalize the pooled samples.
pub fn build_dataset(cfg: &GenerationConfig, k: usize) -> Result<LabeledDataset> {
    let m = cfg.scheme.alphabet_size();
    if k < m {
        return Err(Error::InvalidArgument(format!(
            "K = {k} is smaller than the alphabet size {m}"
        )));
    }
    let labels = balanced_labels(cfg.scheme, k, seed::derive_str(cfg.seed, "labels"));
    let raw = received_samples(cfg, &labels, 0)?;
    let norm = normalize(&raw)?;
    finish(cfg, norm.samples, labels, norm.y_min, norm.y_max)
}

/// Independent balanced training and test sets from one noise stream.
pub fn build_train_test(
    cfg: &GenerationConfig,
    k_train: usize,
    k_test: usize,
    mode: NormalizationMode,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let m = cfg.scheme.alphabet_size();
    if k_train < m || k_test == 0 {
        return Err(Error::InvalidArgument(format!(
            "need K_train >= {m} and K_test >= 1 (got {k_train}, {k_test})"
        )));
    }
    let train_labels = balanced_labels(cfg.scheme, k_train, seed::derive_str(cfg.seed, "train-labels"));
    let test_labels = balanced_labels(cfg.scheme, k_test, seed::derive_str(cfg.seed, "test-labels"));
    let train_raw = received_samples(cfg, &train_labels, 0)?;
    let test_raw = received_samples(cfg, &test_labels, k_train as u64)?;
    let (y_min, y_max) = match mode {
        NormalizationMode::TrainFrozen => {
            let s = normalize(&train_raw)?;
            (s.y_min, s.y_max)
        }
        NormalizationMode::Joint => {
            let mut pooled = train_raw.clone();
            pooled.extend_from_slice(&test_raw);
            let s = normalize(&pooled)?;
            (s.y_min, s.y_max)
        }
    };
    let train = apply_normalization(&train_raw, y_min, y_max, false);
    let test = apply_normalization(&test_raw, y_min, y_max, mode == NormalizationMode::TrainFrozen);
    Ok((
        finish(cfg, train, train_labels, y_min, y_max)?,
        finish(cfg, test, test_labels, y_min, y_max)?,
    ))
}

/// Label-stratified split: within every class the first
/// `round(count · train_fraction)` frames (in dataset order) go to training.
pub fn split(ds: &LabeledDataset, train_fraction: f64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let quota: Vec<usize> = ds
        .class_counts()
        .iter()
        .map(|&c| (c as f64 * train_fraction).round() as usize)
        .collect();
    let mut taken = vec![0usize; quota.len()];
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, &l) in ds.labels().iter().enumerate() {
        let c = usize::from(l) - 1;
        if taken[c] < quota[c] {
            taken[c] += 1;
            train.push(i);
        } else {
            test.push(i);
        }
    }
    Ok((ds.select(&train), ds.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelConfig;

    fn cfg(scheme: ModulationScheme, snr_db: f64) -> GenerationConfig {
        let carrier = CarrierConfig::default();
        let p = crate::modulation::signal_power(scheme, 40, &carrier).unwrap();
        GenerationConfig {
            scheme,
            n: 40,
            carrier,
            channel: ChannelConfig::direct_snr(snr_db, p, 5),
            seed: 17,
        }
    }

    #[test]
    fn normalize_examples() {
        let r = normalize(&[0.2, 0.6, 1.0]).unwrap();
        assert_eq!(r.samples[0], 0.0);
        assert!((r.samples[1] - 0.5).abs() < 1e-15);
        assert_eq!(r.samples[2], 1.0);
        assert_eq!((r.y_min, r.y_max), (0.2, 1.0));
        assert!(matches!(normalize(&[5.0, 5.0, 5.0]), Err(Error::Degenerate(_))));
        assert!(normalize(&[]).is_err());
    }

    #[test]
    fn build_sizes_balance_and_bounds() {
        let ds = build_dataset(&cfg(ModulationScheme::Qpsk, 20.0), 103).unwrap();
        assert_eq!(ds.len(), 103);
        let counts = ds.class_counts();
        assert!(counts.iter().all(|&c| c == 25 || c == 26), "{counts:?}");
        let min = ds.samples().iter().cloned().fold(f64::MAX, f64::min);
        let max = ds.samples().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!((min, max), (0.0, 1.0));
    }

    #[test]
    fn one_frame_per_class_at_k_equals_m() {
        let mut c = cfg(ModulationScheme::Qam16, 0.0);
        c.channel = ChannelConfig::identity();
        let ds = build_dataset(&c, 16).unwrap();
        assert_eq!(ds.class_counts(), vec![1; 16]);
        assert!(build_dataset(&c, 15).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let c = cfg(ModulationScheme::Qam16, 10.0);
        assert_eq!(build_dataset(&c, 64).unwrap(), build_dataset(&c, 64).unwrap());
    }

    #[test]
    fn ook_reference_sizes_and_split() {
        let (k_train, k_test) = ModulationScheme::Ook.reference_split_sizes();
        assert_eq!((k_train, k_test), (12_000, 6_000));
        let ds = build_dataset(&cfg(ModulationScheme::Ook, 30.0), k_train + k_test).unwrap();
        let (train, test) = split(&ds, 2.0 / 3.0).unwrap();
        assert_eq!((train.len(), test.len()), (12_000, 6_000));
        assert_eq!(train.class_counts(), vec![6_000, 6_000]);
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let ds = build_dataset(&cfg(ModulationScheme::Qam16, 5.0), 333).unwrap();
        let (a, b) = split(&ds, 0.3).unwrap();
        assert_eq!(a.len() + b.len(), ds.len());
        for (c, (&ca, &total)) in a.class_counts().iter().zip(&ds.class_counts()).enumerate() {
            let want = total as f64 * 0.3;
            assert!((ca as f64 - want).abs() <= 1.0, "class {c}");
        }
        assert!(split(&ds, 1.0).is_err());
        assert!(split(&ds, 0.0).is_err());
    }

    #[test]
    fn frozen_statistics_are_reused_on_test_data() {
        let c = cfg(ModulationScheme::Qpsk, 5.0);
        let (train, test) = build_train_test(&c, 400, 200, NormalizationMode::TrainFrozen).unwrap();
        assert_eq!((train.y_min, train.y_max), (test.y_min, test.y_max));
        assert!(test.samples().iter().all(|v| (0.0..=1.0).contains(v)));
        let (jt, je) = build_train_test(&c, 400, 200, NormalizationMode::Joint).unwrap();
        let lo = jt.samples().iter().chain(je.samples()).cloned().fold(f64::MAX, f64::min);
        let hi = jt.samples().iter().chain(je.samples()).cloned().fold(f64::MIN, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn text_and_binary_round_trip() {
        let ds = build_dataset(&cfg(ModulationScheme::Qam32, 12.0), 70).unwrap();
        let bin = LabeledDataset::from_binary(&ds.to_binary()).unwrap();
        assert_eq!(bin.samples(), ds.samples());
        assert_eq!(bin.labels(), ds.labels());
        assert_eq!((bin.y_min, bin.y_max), (ds.y_min, ds.y_max));
        let txt = LabeledDataset::from_text(&ds.to_text()).unwrap();
        assert_eq!(txt, ds);
    }

    #[test]
    fn truncated_binary_reports_offset() {
        let ds = build_dataset(&cfg(ModulationScheme::Ook, 12.0), 4).unwrap();
        let bytes = ds.to_binary();
        let cut = &bytes[..bytes.len() - 3];
        match LabeledDataset::from_binary(cut) {
            Err(Error::Parse { offset, message }) => {
                // Header 27 bytes, records of 2 + 40·4 bytes; the last sample starts 4 bytes from the end.
                assert_eq!(offset, (bytes.len() - 4) as u64);
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut wrong = bytes.clone();
        wrong[3] = b'2';
        assert!(matches!(LabeledDataset::from_binary(&wrong), Err(Error::VersionMismatch { .. })));
        assert!(matches!(LabeledDataset::from_binary(b"XYZ"), Err(Error::Parse { .. })));
    }

    #[test]
    fn text_errors() {
        let ds = build_dataset(&cfg(ModulationScheme::Ook, 12.0), 4).unwrap();
        let text = ds.to_text().replace("# version=1", "# version=7");
        assert!(matches!(LabeledDataset::from_text(&text), Err(Error::VersionMismatch { .. })));
        let good = ds.to_text();
        let truncated = &good[..good.len() - 60];
        let r = LabeledDataset::from_text(truncated);
        assert!(matches!(r, Err(Error::Parse { .. })), "{r:?}");
    }

    #[test]
    fn file_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let ds = build_dataset(&cfg(ModulationScheme::Ppm4, 8.0), 40).unwrap();
        for name in ["d.owd", "d.txt"] {
            let p = dir.path().join(name);
            ds.save(&p).unwrap();
            let back = LabeledDataset::load(&p).unwrap();
            assert_eq!(back.samples(), ds.samples());
            assert_eq!(back.labels(), ds.labels());
        }
    }
}
