//! `evtad`: command-line pipelines for temporal action detection on event
//! streams. Every subcommand writes its artifacts to disk and prints one
//! JSON summary line on stdout; logs go to stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

/// Exit status for each failure class.
pub mod exit {
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const SCHEMA: u8 = 4;
    pub const INVALID: u8 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "evtad", version, about = "Temporal action detection on event-camera streams")]
pub struct Cli {
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for all randomized steps.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct StreamArgs {
    /// Event CSV (`t_us,x,y,p`).
    #[arg(long)]
    pub events: PathBuf,
    /// Sensor width, overriding the file's metadata line.
    #[arg(long, requires = "height")]
    pub width: Option<u32>,
    #[arg(long, requires = "width")]
    pub height: Option<u32>,
    /// Drop pixels firing faster than this many events per second.
    #[arg(long)]
    pub hot_pixel_rate: Option<f64>,
    /// Remove sensor-wide flash bins.
    #[arg(long)]
    pub flash_filter: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalMethod {
    Retag,
    Etag,
    Watershed,
    Sliding,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectMethod {
    Atsn,
    Bottomup,
    /// Ground-truth oracle: score 1 iff the proposal overlaps an instance
    /// by more than `--oracle-tiou`.
    Perfect,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMethod {
    Atsn,
    Bottomup,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ar,
    Map,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Histogram,
    Timemap,
}

impl From<Kind> for evtad::represent::GridKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Histogram => Self::Histogram,
            Kind::Timemap => Self::Timemap,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic scene: events.csv and annotations.json.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Inject this many hot pixels.
        #[arg(long)]
        hot_pixels: Option<usize>,
        /// Inject this many sensor-wide single-bin flashes.
        #[arg(long)]
        spikes: Option<usize>,
        /// Events per pixel in each flash.
        #[arg(long)]
        spike_size: Option<f64>,
    },
    /// Event-rate curve as CSV (`bin_start_us,rate`).
    Rate {
        #[command(flatten)]
        stream: StreamArgs,
        /// Annotations providing roi boxes.
        #[arg(long, requires = "roi")]
        annotations: Option<PathBuf>,
        /// Crop to this roi first.
        #[arg(long, requires = "annotations")]
        roi: Option<String>,
        #[arg(long)]
        bin_width: Option<f64>,
        #[arg(long)]
        percentile: Option<f64>,
        /// Emit the robustly normalized rate.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Temporal proposals per roi as JSON.
    Propose {
        #[command(flatten)]
        stream: StreamArgs,
        /// Roi boxes; the whole sensor is one roi without them.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ProposalMethod::Retag)]
        method: ProposalMethod,
        /// Flood thresholds (comma separated); the first one for watershed.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        /// Merge thresholds (comma separated).
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        /// NMS tIoU threshold.
        #[arg(long)]
        nms: Option<f64>,
        /// Minimum proposal length in seconds.
        #[arg(long)]
        min_dur: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// One snapshot grid as CSV.
    Snapshot {
        #[command(flatten)]
        stream: StreamArgs,
        #[arg(long, requires = "roi")]
        annotations: Option<PathBuf>,
        #[arg(long, requires = "annotations")]
        roi: Option<String>,
        /// Snapshot time in seconds.
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        /// Output grid size (square); 0 keeps the input resolution.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a proposal or snapshot classifier and write a JSON checkpoint.
    Train {
        #[command(flatten)]
        stream: StreamArgs,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, value_enum, default_value_t = TrainMethod::Atsn)]
        method: TrainMethod,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        /// Loss weights `positive,negative`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        class_weights: Option<Vec<f64>>,
        /// Keep one in this many negative proposals.
        #[arg(long)]
        negative_factor: Option<usize>,
        /// Augmentation divisor W.
        #[arg(long)]
        divisor: Option<f64>,
        #[arg(long)]
        n_start: Option<usize>,
        #[arg(long)]
        n_core: Option<usize>,
        #[arg(long)]
        n_end: Option<usize>,
        /// Snapshot stride in seconds (bottom-up).
        #[arg(long)]
        stride: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detections per roi as JSON.
    Detect {
        #[command(flatten)]
        stream: StreamArgs,
        /// Roi boxes (and ground truth for `--method perfect`).
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = DetectMethod::Atsn)]
        method: DetectMethod,
        /// Checkpoint from `train`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        oracle_tiou: f64,
        /// Closing kernel in samples (bottom-up).
        #[arg(long, conflicts_with = "no_morph")]
        morph_kernel: Option<usize>,
        /// Disable the closing filter (bottom-up).
        #[arg(long)]
        no_morph: bool,
        /// Drop detections scored below this before NMS.
        #[arg(long)]
        min_score: Option<f64>,
        /// Final NMS tIoU threshold.
        #[arg(long)]
        nms: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// AR and mAP report as CSV (`metric,param,value`).
    Eval {
        /// Detections or proposals JSON.
        #[arg(long)]
        pred: PathBuf,
        /// Annotations JSON.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Metric::Ar, Metric::Map])]
        metrics: Vec<Metric>,
        #[arg(long, value_delimiter = ',')]
        tiou: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        top_n: Option<Vec<usize>>,
        /// Interpolated precision envelope.
        #[arg(long)]
        interpolated: bool,
        /// Also write a per-roi AP table here.
        #[arg(long)]
        per_roi: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rate curves per roi and, with predictions, a per-roi AP table.
    Report {
        #[command(flatten)]
        stream: StreamArgs,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    match commands::run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<evtad::Error>() {
            use evtad::Error as E;
            return match err {
                E::Io(_) => exit::IO,
                E::Parse { .. }
                | E::OutOfBounds { .. }
                | E::Schema(_)
                | E::Json(_)
                | E::InvalidInterval { .. }
                | E::UnknownRoi(_)
                | E::DimensionMismatch { .. } => exit::SCHEMA,
                E::InvalidParameter(_) | E::ZeroDuration | E::EmptyGroundTruth | E::SingleClass => exit::INVALID,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return exit::IO;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return exit::SCHEMA;
        }
        if cause.downcast_ref::<commands::UsageError>().is_some() {
            return exit::USAGE;
        }
    }
    exit::OTHER
}
