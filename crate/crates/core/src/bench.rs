//! Parameter sweeps: generate train/test sets per axis point, train the
//! selected demodulators, record test accuracy and write CSV tables.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use crate::adaboost::{AdaBoostConfig, AdaBoostEnsemble, DEFAULT_LEARNERS};
use crate::channel::{snr_for_config, ChannelConfig};
use crate::cnn::{self, CnnDemodulator};
use crate::dataset::{build_train_test, GenerationConfig, LabeledDataset, NormalizationMode};
use crate::dbn::{DbnConfig, DbnDemodulator};
use crate::mld::MldParams;
use crate::model::TrainedModel;
use crate::modulation::{signal_power, CarrierConfig, ModulationScheme};
use crate::{seed, Demodulator, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemodKind {
    Cnn,
    Dbn,
    AdaBoost,
    Mld,
}

impl DemodKind {
    pub const ALL: [DemodKind; 4] = [DemodKind::Cnn, DemodKind::Dbn, DemodKind::AdaBoost, DemodKind::Mld];

    pub fn name(self) -> &'static str {
        match self {
            DemodKind::Cnn => "cnn",
            DemodKind::Dbn => "dbn",
            DemodKind::AdaBoost => "adaboost",
            DemodKind::Mld => "mld",
        }
    }
}

impl fmt::Display for DemodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DemodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DemodKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown demodulator {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Direct-SNR channel, values in dB.
    Snr,
    /// Power-law channel, values in cm.
    Distance,
    /// Samples per period.
    N,
    /// Training-set size.
    TrainSize,
    /// Training epochs of the neural demodulators.
    Epochs,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr_db",
            SweepAxis::Distance => "distance_cm",
            SweepAxis::N => "n",
            SweepAxis::TrainSize => "k_train",
            SweepAxis::Epochs => "epochs",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "snr" | "snr_db" => SweepAxis::Snr,
            "distance" | "distance_cm" => SweepAxis::Distance,
            "n" => SweepAxis::N,
            "k" | "k_train" | "train_size" => SweepAxis::TrainSize,
            "epochs" => SweepAxis::Epochs,
            other => return Err(Error::InvalidArgument(format!("unknown sweep axis {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub demods: Vec<DemodKind>,
    pub schemes: Vec<ModulationScheme>,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Samples per period when the axis is not `N`.
    pub n: usize,
    /// Channel SNR when the axis is neither `Snr` nor `Distance`.
    pub snr_db: f64,
    /// Noise std of the distance channel.
    pub noise_sigma: f64,
    /// Fraction of the reference train/test sizes to generate.
    pub size_factor: f64,
    /// Explicit sizes overriding the scaled reference sizes.
    pub k_train: Option<usize>,
    pub k_test: Option<usize>,
    /// Epochs of CNN training and of DBN pretraining and fine-tuning.
    pub epochs: Option<usize>,
    pub learners: usize,
    pub normalization: NormalizationMode,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            demods: DemodKind::ALL.to_vec(),
            schemes: vec![ModulationScheme::Ook],
            axis: SweepAxis::Snr,
            values: vec![30.0],
            trials: 1,
            seed: 0,
            n: 40,
            snr_db: 30.0,
            noise_sigma: 0.01,
            size_factor: 1.0 / 6.0,
            k_train: None,
            k_test: None,
            epochs: None,
            learners: DEFAULT_LEARNERS,
            normalization: NormalizationMode::TrainFrozen,
        }
    }
}

fn parse_list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("{key}: {s:?}: {e}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(v: &str, key: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("{key}: {v:?}: {e}")))
}

impl SweepSpec {
    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "demods" | "demod" => self.demods = parse_list(value, key)?,
            "schemes" | "scheme" => self.schemes = parse_list(value, key)?,
            "axis" => self.axis = value.parse()?,
            "values" => self.values = parse_list(value, key)?,
            "trials" => self.trials = parse_one(value, key)?,
            "seed" => self.seed = parse_one(value, key)?,
            "n" => self.n = parse_one(value, key)?,
            "snr_db" => self.snr_db = parse_one(value, key)?,
            "noise_sigma" => self.noise_sigma = parse_one(value, key)?,
            "size_factor" => self.size_factor = parse_one(value, key)?,
            "k_train" => self.k_train = Some(parse_one(value, key)?),
            "k_test" => self.k_test = Some(parse_one(value, key)?),
            "epochs" => self.epochs = Some(parse_one(value, key)?),
            "q" | "learners" => self.learners = parse_one(value, key)?,
            "normalization" => {
                self.normalization = match value.trim() {
                    "train" | "train_frozen" => NormalizationMode::TrainFrozen,
                    "joint" => NormalizationMode::Joint,
                    other => return Err(Error::InvalidArgument(format!("normalization: {other:?}"))),
                }
            }
            other => return Err(Error::InvalidArgument(format!("unknown sweep key {other:?}"))),
        }
        Ok(())
    }

    /// Parse a config of `key = value` lines; `#` starts a comment.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut spec = SweepSpec::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                offset: no as u64 + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            spec.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.demods.is_empty() || self.schemes.is_empty() || self.values.is_empty() {
            return bad("a sweep needs at least one demodulator, scheme and axis value".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return bad("axis values must be finite".into());
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return bad("axis values must be strictly monotone".into());
        }
        if !(self.size_factor > 0.0) {
            return bad(format!("size factor {} must be positive", self.size_factor));
        }
        if self.learners == 0 {
            return bad("learners must be >= 1".into());
        }
        if matches!(self.axis, SweepAxis::N | SweepAxis::TrainSize | SweepAxis::Epochs)
            && self.values.iter().any(|&v| v < 0.0 || v.fract() != 0.0)
        {
            return bad(format!("{} values must be non-negative integers", self.axis.name()));
        }
        Ok(())
    }
}

/// One (demodulator, scheme, axis point, trial) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub demod: DemodKind,
    pub scheme: ModulationScheme,
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub trial: usize,
    pub n: usize,
    pub k_train: usize,
    pub k_test: usize,
    pub snr_db: f64,
    pub distance_cm: Option<f64>,
    pub accuracy: f64,
    pub accurate_bit_rate: f64,
    pub seed: u64,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Scaled reference sizes, at least one frame per class for training.
pub fn scaled_sizes(scheme: ModulationScheme, factor: f64) -> (usize, usize) {
    let (tr, te) = scheme.reference_split_sizes();
    let m = scheme.alphabet_size();
    (
        ((tr as f64 * factor).round() as usize).max(2 * m),
        ((te as f64 * factor).round() as usize).max(1),
    )
}

struct Point {
    n: usize,
    k_train: usize,
    k_test: usize,
    epochs: Option<usize>,
    channel: ChannelConfig,
    snr_db: f64,
    distance_cm: Option<f64>,
}

fn point_settings(spec: &SweepSpec, scheme: ModulationScheme, value: f64, data_seed: u64) -> Result<Point> {
    let (mut k_train, mut k_test) = scaled_sizes(scheme, spec.size_factor);
    k_train = spec.k_train.unwrap_or(k_train);
    k_test = spec.k_test.unwrap_or(k_test);
    let mut n = spec.n;
    let mut epochs = spec.epochs;
    match spec.axis {
        SweepAxis::N => n = value as usize,
        SweepAxis::TrainSize => k_train = value as usize,
        SweepAxis::Epochs => epochs = Some(value as usize),
        SweepAxis::Snr | SweepAxis::Distance => {}
    }
    let carrier = CarrierConfig::default();
    scheme.validate_sample_count(n, &carrier)?;
    let power = signal_power(scheme, n, &carrier)?;
    let channel_seed = seed::derive_str(data_seed, "channel");
    let (channel, distance_cm) = match spec.axis {
        SweepAxis::Distance => (ChannelConfig::distance(value, spec.noise_sigma, channel_seed), Some(value)),
        SweepAxis::Snr => (ChannelConfig::direct_snr(value, power, channel_seed), None),
        _ => (ChannelConfig::direct_snr(spec.snr_db, power, channel_seed), None),
    };
    channel.validate()?;
    Ok(Point {
        n,
        k_train,
        k_test,
        epochs,
        snr_db: snr_for_config(&channel, power),
        channel,
        distance_cm,
    })
}

/// Train `kind` on `train` with the sweep's schedule.
pub fn train_demodulator(
    kind: DemodKind,
    train: &Arc<LabeledDataset>,
    epochs: Option<usize>,
    learners: usize,
    seed: u64,
) -> Result<TrainedModel> {
    Ok(match kind {
        DemodKind::Cnn => {
            let mut sgd = cnn::default_sgd(seed);
            if let Some(e) = epochs {
                sgd.epochs = e;
            }
            sgd.batch_size = sgd.batch_size.min(train.len());
            TrainedModel::Cnn(CnnDemodulator::train(train, &sgd)?.0)
        }
        DemodKind::Dbn => {
            let mut cfg = DbnConfig::with_seed(seed);
            if let Some(e) = epochs {
                cfg.pretrain.epochs = e;
                cfg.finetune.epochs = e;
            }
            TrainedModel::Dbn(DbnDemodulator::train(train, &cfg)?.0)
        }
        DemodKind::AdaBoost => {
            TrainedModel::AdaBoost(AdaBoostEnsemble::train(train.clone(), &AdaBoostConfig::new(learners, seed))?)
        }
        DemodKind::Mld => TrainedModel::Mld(MldParams::fit(train)?),
    })
}

/// Seed of the datasets for one (scheme, axis point, trial).
pub fn point_seed(master: u64, scheme: ModulationScheme, point: usize, trial: usize) -> u64 {
    let s = seed::derive(master, u64::from(scheme.id()));
    seed::derive(seed::derive(s, point as u64), trial as u64)
}

/// Run every (scheme, axis point, trial, demodulator) combination.
/// Failures of a single demodulator are recorded in its row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    run_sweep_with(spec, |_| {})
}

/// As [`run_sweep`], calling `progress` after every row.
pub fn run_sweep_with(spec: &SweepSpec, mut progress: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &scheme in &spec.schemes {
        for (pi, &value) in spec.values.iter().enumerate() {
            for trial in 0..spec.trials {
                let data_seed = point_seed(spec.seed, scheme, pi, trial);
                let point = point_settings(spec, scheme, value, data_seed)?;
                let gen = GenerationConfig {
                    scheme,
                    n: point.n,
                    carrier: CarrierConfig::default(),
                    channel: point.channel,
                    seed: data_seed,
                };
                let data = build_train_test(&gen, point.k_train, point.k_test, spec.normalization);
                for &demod in &spec.demods {
                    let demod_seed = seed::derive_str(data_seed, demod.name());
                    let start = Instant::now();
                    let outcome = match &data {
                        Ok((train, test)) => {
                            let train = Arc::new(train.clone());
                            train_demodulator(demod, &train, point.epochs, spec.learners, demod_seed)
                                .and_then(|model| model.accuracy(test))
                                .map_err(|e| format!("{}: {e}", e.kind()))
                        }
                        Err(e) => Err(format!("{}: {e}", e.kind())),
                    };
                    let (accuracy, error) = match outcome {
                        Ok(a) => (a, None),
                        Err(msg) => (0.0, Some(msg)),
                    };
                    let row = ResultRow {
                        demod,
                        scheme,
                        axis: spec.axis,
                        axis_value: value,
                        trial,
                        n: point.n,
                        k_train: point.k_train,
                        k_test: point.k_test,
                        snr_db: point.snr_db,
                        distance_cm: point.distance_cm,
                        accuracy,
                        accurate_bit_rate: accuracy * scheme.bits_per_symbol(),
                        seed: demod_seed,
                        wall_time_s: start.elapsed().as_secs_f64(),
                        error,
                    };
                    progress(&row);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: [&str; 14] = [
    "demod",
    "scheme",
    "axis",
    "axis_value",
    "trial",
    "n",
    "k_train",
    "k_test",
    "snr_db",
    "distance_cm",
    "accuracy",
    "accurate_bit_rate",
    "seed",
    "error",
];

/// Rust float formatting is locale independent and round-trips exactly.
fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

/// Write `rows` as CSV. Wall time is left out so that identical sweeps
/// produce identical files.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.demod.name().to_string(),
            r.scheme.name().to_string(),
            r.axis.name().to_string(),
            fmt_f64(r.axis_value),
            r.trial.to_string(),
            r.n.to_string(),
            r.k_train.to_string(),
            r.k_test.to_string(),
            fmt_f64(r.snr_db),
            r.distance_cm.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.accuracy),
            fmt_f64(r.accurate_bit_rate),
            r.seed.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &std::path::Path) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

/// Parse a CSV written by [`write_csv`]. Wall times read back as zero.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> { parse_one(f(i), CSV_HEADER[i]) };
        let int = |i: usize| -> Result<usize> { parse_one(f(i), CSV_HEADER[i]) };
        rows.push(ResultRow {
            demod: f(0).parse()?,
            scheme: f(1).parse()?,
            axis: f(2).parse()?,
            axis_value: num(3)?,
            trial: int(4)?,
            n: int(5)?,
            k_train: int(6)?,
            k_test: int(7)?,
            snr_db: num(8)?,
            distance_cm: if f(9).is_empty() { None } else { Some(num(9)?) },
            accuracy: num(10)?,
            accurate_bit_rate: num(11)?,
            seed: parse_one(f(12), "seed")?,
            wall_time_s: 0.0,
            error: (!f(13).is_empty()).then(|| f(13).to_string()),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryGroup {
    pub demod: DemodKind,
    pub scheme: ModulationScheme,
    pub rows: usize,
    pub failures: usize,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    pub mean_bit_rate: f64,
}

/// Aggregate successful rows by (demodulator, scheme), in first-seen order.
pub fn summary_groups(rows: &[ResultRow]) -> Vec<SummaryGroup> {
    let mut order = Vec::new();
    let mut groups: HashMap<(DemodKind, ModulationScheme), Vec<&ResultRow>> = HashMap::new();
    for r in rows {
        let key = (r.demod, r.scheme);
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(&key).unwrap().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let all = &groups[&key];
            let ok: Vec<&&ResultRow> = all.iter().filter(|r| r.error.is_none()).collect();
            let count = ok.len().max(1) as f64;
            SummaryGroup {
                demod: key.0,
                scheme: key.1,
                rows: all.len(),
                failures: all.len() - ok.len(),
                mean_accuracy: ok.iter().map(|r| r.accuracy).sum::<f64>() / count,
                min_accuracy: ok.iter().map(|r| r.accuracy).fold(f64::INFINITY, f64::min),
                max_accuracy: ok.iter().map(|r| r.accuracy).fold(f64::NEG_INFINITY, f64::max),
                mean_bit_rate: ok.iter().map(|r| r.accurate_bit_rate).sum::<f64>() / count,
            }
        })
        .collect()
}

/// Plain-text table of [`summary_groups`].
pub fn summarize(rows: &[ResultRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<9} {:<7} {:>5} {:>6} {:>9} {:>9} {:>9} {:>9}",
        "demod", "scheme", "rows", "failed", "mean_acc", "min_acc", "max_acc", "mean_abr"
    );
    for g in summary_groups(rows) {
        let _ = writeln!(
            s,
            "{:<9} {:<7} {:>5} {:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            g.demod.name(),
            g.scheme.name(),
            g.rows,
            g.failures,
            g.mean_accuracy,
            g.min_accuracy,
            g.max_accuracy,
            g.mean_bit_rate
        );
    }
    s
}
