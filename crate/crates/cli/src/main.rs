use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vlc_demod::bench::{self, DemodKind, SweepAxis, SweepSpec};
use vlc_demod::channel::ChannelConfig;
use vlc_demod::dataset::{build_dataset, build_train_test, GenerationConfig, LabeledDataset, NormalizationMode};
use vlc_demod::model::{ModelBlob, TrainedModel};
use vlc_demod::modulation::{signal_power, CarrierConfig, ModulationScheme};
use vlc_demod::rasterizer::visualize;
use vlc_demod::{Demodulator, Error};

#[derive(Parser)]
#[command(name = "vlc-demod", version, about = "Synthesize, train and evaluate optical-link demodulators")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a labelled dataset.
    Generate(GenerateArgs),
    /// Train a demodulator on a dataset file.
    Train(TrainArgs),
    /// Accuracy of a model on a dataset file.
    Eval(EvalArgs),
    /// Run a parameter sweep and write CSV.
    Sweep(SweepArgs),
    /// Write the CNN input image of each frame as PGM.
    RasterDump(RasterArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// Target SNR (dB) of a unit-gain channel.
    #[arg(long, conflicts_with = "distance_cm")]
    snr_db: Option<f64>,
    /// Link distance (cm) of the power-law channel.
    #[arg(long)]
    distance_cm: Option<f64>,
    /// Noise std of the power-law channel.
    #[arg(long, default_value_t = 0.01)]
    noise_sigma: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    scheme: ModulationScheme,
    #[arg(long, default_value_t = 40)]
    n: usize,
    /// Frames to generate (training frames when --test-out is given).
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `.txt`, `.csv` or `.owdt` select the text format.
    #[arg(long)]
    out: PathBuf,
    /// Also write an independent test set normalized with the training statistics.
    #[arg(long, requires = "test_k")]
    test_out: Option<PathBuf>,
    #[arg(long)]
    test_k: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    demod: DemodKind,
    /// Training dataset.
    #[arg(long)]
    data: PathBuf,
    /// Expected scheme of the dataset.
    #[arg(long)]
    scheme: Option<ModulationScheme>,
    #[arg(long)]
    epochs: Option<usize>,
    /// AdaBoost learners.
    #[arg(long, default_value_t = vlc_demod::adaboost::DEFAULT_LEARNERS)]
    q: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Test dataset.
    #[arg(long)]
    data: PathBuf,
    /// Training dataset; required by AdaBoost models.
    #[arg(long)]
    train_data: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated demodulators.
    #[arg(long)]
    demod: Option<String>,
    /// Comma-separated schemes.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    axis: Option<SweepAxis>,
    /// Comma-separated, strictly monotone axis values.
    #[arg(long)]
    values: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Fixed SNR when the axis is not snr or distance.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    size_factor: Option<f64>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RasterArgs {
    #[arg(long)]
    data: PathBuf,
    /// Number of leading frames to dump.
    #[arg(long, default_value_t = 16)]
    count: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn channel_for(args: &ChannelArgs, scheme: ModulationScheme, n: usize, seed: u64) -> Result<ChannelConfig> {
    let cfg = match (args.snr_db, args.distance_cm) {
        (Some(snr), None) => ChannelConfig::direct_snr(snr, signal_power(scheme, n, &CarrierConfig::default())?, seed),
        (None, Some(d)) => ChannelConfig::distance(d, args.noise_sigma, seed),
        (None, None) => ChannelConfig::identity(),
        (Some(_), Some(_)) => bail!(Error::InvalidArgument("--snr-db and --distance-cm are exclusive".into())),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let gen = GenerationConfig {
        scheme: a.scheme,
        n: a.n,
        carrier: CarrierConfig::default(),
        channel: channel_for(&a.channel, a.scheme, a.n, vlc_demod::seed::derive_str(a.seed, "channel"))?,
        seed: a.seed,
    };
    match (&a.test_out, a.test_k) {
        (Some(test_out), Some(test_k)) => {
            let (train, test) = build_train_test(&gen, a.k, test_k, NormalizationMode::TrainFrozen)?;
            train.save(&a.out)?;
            test.save(test_out)?;
            println!("wrote {} training frames to {}", train.len(), a.out.display());
            println!("wrote {} test frames to {}", test.len(), test_out.display());
        }
        _ => {
            let ds = build_dataset(&gen, a.k)?;
            ds.save(&a.out)?;
            println!("wrote {} frames to {}", ds.len(), a.out.display());
        }
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let ds = LabeledDataset::load(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    if let Some(s) = a.scheme {
        if s != ds.scheme() {
            bail!(Error::SchemeMismatch {
                expected: s.name(),
                actual: ds.scheme().name(),
            });
        }
    }
    let train = Arc::new(ds);
    let model = bench::train_demodulator(a.demod, &train, a.epochs, a.q, a.seed)?;
    model.save(&a.out)?;
    println!(
        "trained {} on {} {} frames; training accuracy {}",
        a.demod,
        train.len(),
        train.scheme(),
        model.accuracy(&train)?
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let blob = ModelBlob::from_bytes(&std::fs::read(&a.model)?)?;
    let train = a.train_data.as_deref().map(LabeledDataset::load).transpose()?;
    let model = TrainedModel::from_blob(&blob, train.as_ref())?;
    let test = LabeledDataset::load(&a.data)?;
    if test.scheme() != model.scheme() {
        bail!(Error::SchemeMismatch {
            expected: model.scheme().name(),
            actual: test.scheme().name(),
        });
    }
    let acc = model.accuracy(&test)?;
    println!(
        "accuracy={acc} accurate_bit_rate={} frames={}",
        acc * test.scheme().bits_per_symbol(),
        test.len()
    );
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => SweepSpec::from_config(&std::fs::read_to_string(p)?)?,
        None => SweepSpec::default(),
    };
    let mut set = |k: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            spec.set(k, &v)?;
        }
        Ok(())
    };
    set("demods", a.demod)?;
    set("schemes", a.scheme)?;
    set("values", a.values)?;
    set("n", a.n.map(|x| x.to_string()))?;
    set("snr_db", a.snr_db.map(|x| x.to_string()))?;
    set("trials", a.trials.map(|x| x.to_string()))?;
    set("epochs", a.epochs.map(|x| x.to_string()))?;
    set("q", a.q.map(|x| x.to_string()))?;
    set("seed", a.seed.map(|x| x.to_string()))?;
    set("size_factor", a.size_factor.map(|x| x.to_string()))?;
    if let Some(axis) = a.axis {
        spec.axis = axis;
    }
    spec.validate()?;
    let rows = bench::run_sweep_with(&spec, |r| {
        eprintln!(
            "{} {} {}={} accuracy={:.4} ({:.1}s){}",
            r.demod,
            r.scheme,
            r.axis.name(),
            r.axis_value,
            r.accuracy,
            r.wall_time_s,
            r.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default()
        );
    })?;
    match &a.out {
        Some(p) => bench::emit_csv(&rows, p)?,
        None => bench::write_csv(&rows, std::io::stdout().lock())?,
    }
    eprint!("{}", bench::summarize(&rows));
    Ok(())
}

fn raster_dump(a: RasterArgs) -> Result<()> {
    let ds = LabeledDataset::load(&a.data)?;
    std::fs::create_dir_all(&a.out)?;
    let count = a.count.min(ds.len());
    for i in 0..count {
        let img = visualize(ds.frame(i));
        img.write_pgm(&a.out.join(format!("frame{i:05}_label{}.pgm", ds.label(i))))?;
    }
    println!("wrote {count} images to {}", a.out.display());
    Ok(())
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(e) = e.downcast_ref::<Error>() {
        return e.kind();
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    "error"
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::RasterDump(a) => raster_dump(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(
                std::io::stderr(),
                "error kind={} message=\"{}\"",
                error_kind(&e),
                one_line(&format!("{e:#}")).replace('"', "'")
            );
            ExitCode::from(2)
        }
    }
}
