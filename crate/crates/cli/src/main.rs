use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sape::io::{points, write_json, Image};
use sape::tasks::{
    evaluate_run, fit_image, fit_occupancy, fit_signal_1d, fit_silhouette, fixtures, sweep_grid, sweep_sigma,
    write_run, EncodingKind, OccupancyShape, RunData, RunOutput, SignalDataset, SilhouetteTarget, TaskKind,
    TrainConfig,
};
use sape::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sape",
    version,
    about = "Fit coordinate networks with spatially-adaptive progressive encoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regress RGB values from pixel coordinates (25% regular subsample).
    FitImage(TrainArgs),
    /// Regress a 1D signal given as `p y` rows.
    FitSignal(TrainArgs),
    /// Deform a unit circle onto a closed 2D contour.
    FitSilhouette(TrainArgs),
    /// Learn inside/outside for a polygon or watertight mesh.
    FitOccupancy(TrainArgs),
    /// Fit one image at several σ, with SAPE on and off.
    SweepSigma {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,10,20,30,40")]
        values: Vec<f64>,
    },
    /// Fit one image with SAPE at several square grid resolutions.
    SweepGrid {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,8,16,32,64")]
        values: Vec<usize>,
    },
    /// Recompute the metrics of a run directory and compare with its report.
    Evaluate {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    None,
    Fourier,
    Rbf,
}

#[derive(Args)]
struct TrainArgs {
    /// Input file (image, point list or mesh, depending on the task).
    #[arg(long, conflicts_with = "fixture")]
    input: Option<PathBuf>,
    /// Built-in target instead of --input (e.g. two-tone, chirp, star, gear).
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "fourier")]
    encoding: Encoding,
    #[arg(long, overrides_with = "no_sape")]
    sape: bool,
    #[arg(long = "no-sape")]
    no_sape: bool,
    #[arg(long, overrides_with = "no_spatial")]
    spatial: bool,
    #[arg(long = "no-spatial")]
    no_spatial: bool,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    freqs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    grid_res: Option<Vec<usize>>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
}

impl TrainArgs {
    fn config(&self, task: TaskKind) -> TrainConfig {
        let mut c = TrainConfig::for_task(task);
        c.encoding = match self.encoding {
            Encoding::None => EncodingKind::None,
            Encoding::Fourier => EncodingKind::Fourier,
            Encoding::Rbf => EncodingKind::RbfGrid,
        };
        c.sape_enabled = self.sape || !self.no_sape;
        c.spatial_enabled = self.spatial || !self.no_spatial;
        if let Some(v) = self.sigma {
            c.sigma = v;
        }
        if let Some(v) = self.freqs {
            c.num_frequencies = v;
        }
        if let Some(v) = &self.grid_res {
            c.grid_resolution = v.clone();
        }
        if let Some(v) = self.iters {
            c.iterations = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.lr {
            c.lr = v;
        }
        if let Some(v) = self.width {
            c.hidden_width = v;
        }
        if let Some(v) = self.depth {
            c.depth = v;
        }
        if self.batch.is_some() {
            c.batch_size = self.batch;
        }
        c
    }

    fn source(&self) -> Result<Source<'_>, Error> {
        match (&self.input, &self.fixture) {
            (Some(path), _) => Ok(Source::File(path)),
            (None, Some(name)) => Ok(Source::Fixture(name)),
            (None, None) => Err(Error::invalid("one of --input or --fixture is required")),
        }
    }
}

enum Source<'a> {
    File(&'a Path),
    Fixture(&'a str),
}

fn load_image(args: &TrainArgs) -> Result<Image, Error> {
    match args.source()? {
        Source::File(path) => Image::load(path),
        Source::Fixture("two-tone") => fixtures::two_tone_image(64),
        Source::Fixture("constant") => fixtures::constant_image(32, [0.3, 0.6, 0.9]),
        Source::Fixture(name) => Err(Error::invalid(format!("unknown image fixture {name:?}"))),
    }
}

fn load_signal(args: &TrainArgs) -> Result<SignalDataset, Error> {
    match args.source()? {
        Source::File(path) => SignalDataset::from_rows(points::load(path)?),
        Source::Fixture("chirp") => fixtures::chirp_signal(),
        Source::Fixture("sine") => fixtures::sine_signal(2.0),
        Source::Fixture(name) => Err(Error::invalid(format!("unknown signal fixture {name:?}"))),
    }
}

fn load_silhouette(args: &TrainArgs) -> Result<SilhouetteTarget, Error> {
    match args.source()? {
        Source::File(path) => SilhouetteTarget::load(path),
        Source::Fixture(name) => fixtures::silhouette(name),
    }
}

fn load_shape(args: &TrainArgs) -> Result<OccupancyShape, Error> {
    match args.source()? {
        Source::File(path) => OccupancyShape::load(path),
        Source::Fixture(name) => fixtures::occupancy_shape(name),
    }
}

fn finish(out: &Path, run: RunOutput) -> Result<(), Error> {
    write_run(out, &run)?;
    for m in &run.report.metrics {
        println!("{:<28} {:>12.6}  ({})", m.name, m.value, m.support);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::FitImage(args) => {
            let image = load_image(&args)?;
            let (model, report, data) = fit_image(&args.config(TaskKind::Image2d), &image)?;
            finish(
                &args.out,
                RunOutput {
                    model,
                    report,
                    data: RunData::Image(data),
                },
            )
        }
        Command::FitSignal(args) => {
            let data = load_signal(&args)?;
            let (model, report) = fit_signal_1d(&args.config(TaskKind::Signal1d), &data)?;
            finish(
                &args.out,
                RunOutput {
                    model,
                    report,
                    data: RunData::Signal(data),
                },
            )
        }
        Command::FitSilhouette(args) => {
            let target = load_silhouette(&args)?;
            let (model, report) = fit_silhouette(&args.config(TaskKind::Silhouette2d), &target)?;
            finish(
                &args.out,
                RunOutput {
                    model,
                    report,
                    data: RunData::Silhouette(target),
                },
            )
        }
        Command::FitOccupancy(args) => {
            let shape = load_shape(&args)?;
            let (model, report) = fit_occupancy(&args.config(TaskKind::Occupancy), &shape)?;
            finish(
                &args.out,
                RunOutput {
                    model,
                    report,
                    data: RunData::Occupancy(shape),
                },
            )
        }
        Command::SweepSigma { train, values } => {
            let image = load_image(&train)?;
            let sweep = sweep_sigma(&train.config(TaskKind::Image2d), &image, &values)?;
            for e in &sweep.entries {
                println!("{:<8} sigma {:>6}  psnr {:>8.3}", e.method, e.param, e.psnr);
            }
            std::fs::create_dir_all(&train.out).map_err(|e| Error::io(&train.out, e))?;
            write_json(&train.out.join("report.json"), &sweep)
        }
        Command::SweepGrid { train, values } => {
            let image = load_image(&train)?;
            let sweep = sweep_grid(&train.config(TaskKind::Image2d), &image, &values)?;
            for e in &sweep.entries {
                println!("grid {:>4}  psnr {:>8.3}", e.param, e.psnr);
            }
            std::fs::create_dir_all(&train.out).map_err(|e| Error::io(&train.out, e))?;
            write_json(&train.out.join("report.json"), &sweep)
        }
        Command::Evaluate { out } => {
            let recomputed = evaluate_run(&out)?;
            let report: serde_json::Value = sape::io::read_json(&out.join("report.json"))?;
            let stored = &report["metrics"];
            let mut mismatches = 0;
            for m in &recomputed {
                let before = stored
                    .as_array()
                    .and_then(|ms| ms.iter().find(|s| s["name"] == m.name.as_str()))
                    .and_then(|s| s["value"].as_f64());
                let same = before == Some(m.value);
                if !same {
                    mismatches += 1;
                }
                println!(
                    "{:<28} {:>12.6}  {}",
                    m.name,
                    m.value,
                    if same { "matches" } else { "DIFFERS" }
                );
            }
            if mismatches > 0 {
                return Err(Error::Mismatch(format!(
                    "{mismatches} metric(s) differ from report.json"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Diverged { .. } => EXIT_DIVERGED,
                Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            })
        }
    }
}
