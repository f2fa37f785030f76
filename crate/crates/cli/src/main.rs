//! Command-line pipeline: dataset handling, encoding, compression,
//! training, evaluation, rendering, and report emission.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numerical
//! failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qpix",
    version,
    about = "Grayscale images as quantum states: tensor-network and circuit compression plus two trainable classifiers"
)]
struct Cli {
    /// Worker threads for per-image parallelism (0 = all cores). Results do
    /// not depend on the thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Print per-epoch progress while training.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Directory holding the IDX files (env: QPIX_DATA_DIR).
    #[arg(long, env = "QPIX_DATA_DIR")]
    data_dir: PathBuf,

    /// Which split to read.
    #[arg(long, default_value = "train", value_parser = ["train", "test"])]
    split: String,

    /// Use only the first N images (after class restriction).
    #[arg(long)]
    subset: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic synthetic dataset in the standard IDX layout.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 28)]
        width: usize,
        #[arg(long, default_value_t = 28)]
        height: usize,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 6000)]
        train_count: usize,
        #[arg(long, default_value_t = 1000)]
        test_count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Encode images as FRQI states and report the qubit budget.
    Encode {
        #[command(flatten)]
        data: DataArgs,
        /// Target size WxH (bilinear, half-pixel centers).
        #[arg(long, default_value = "32x32")]
        resize: String,
        /// Patch grid RxC.
        #[arg(long, default_value = "1x1")]
        patches: String,
        #[arg(long)]
        out: PathBuf,
        /// Also dump dense statevectors (small qubit counts only).
        #[arg(long)]
        dump_states: bool,
    },
    /// Compress images as truncated MPS files or sequential circuits.
    Compress {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_parser = ["mps", "circuit"])]
        mode: String,
        /// Bond cap for --mode mps.
        #[arg(long, default_value_t = 4)]
        chi: usize,
        /// Encoder depth for --mode circuit.
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value = "32x32")]
        resize: String,
        #[arg(long, default_value = "1x1")]
        patches: String,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long, default_value_t = 8e-4)]
        lr: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the MPS or circuit classifier.
    Train(Box<commands::TrainArgs>),
    /// Evaluate a checkpoint: accuracy and confusion matrix.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Decode a compressed image file to a PGM.
    Render {
        /// Input .qpxm file.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a compressed image to a staircase gate list (JSON).
    ExportCircuit {
        /// Input .qpxm file.
        #[arg(long = "in")]
        input: PathBuf,
        /// Patch index within the file.
        #[arg(long, default_value_t = 0)]
        patch: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot a metrics CSV as a self-contained SVG line chart.
    Report {
        #[arg(long)]
        metrics_csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: could not configure {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    }
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::GenData {
            out,
            width,
            height,
            classes,
            train_count,
            test_count,
            seed,
        } => commands::gen_data(&out, width, height, classes, train_count, test_count, seed),
        Command::Encode {
            data,
            resize,
            patches,
            out,
            dump_states,
        } => commands::encode(
            &data.data_dir,
            &data.split,
            data.subset,
            &resize,
            &patches,
            &out,
            dump_states,
        ),
        Command::Compress {
            data,
            mode,
            chi,
            layers,
            resize,
            patches,
            iterations,
            lr,
            seed,
            out,
        } => commands::compress(
            &data.data_dir,
            &data.split,
            data.subset,
            &mode,
            chi,
            layers,
            &resize,
            &patches,
            iterations,
            lr,
            seed,
            &out,
        ),
        Command::Train(args) => commands::train(*args, verbose),
        Command::Eval {
            checkpoint,
            data,
            cache_dir,
        } => commands::eval(
            &checkpoint,
            &data.data_dir,
            &data.split,
            data.subset,
            cache_dir.as_deref(),
        ),
        Command::Render { input, out } => commands::render(&input, &out),
        Command::ExportCircuit { input, patch, out } => {
            commands::export_circuit(&input, patch, &out)
        }
        Command::Report { metrics_csv, out } => commands::report(&metrics_csv, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
