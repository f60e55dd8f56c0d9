//! `mongeo` command-line tool.

mod commands;
mod output;
mod settings;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bad input: unreadable or malformed files, invalid settings. Exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// How a command that produced its artifacts ended.
pub enum Status {
    Complete,
    /// Solver did not converge or the evolution hit the blowup guard. Exit code 3.
    Incomplete(String),
}

const PRECEDENCE: &str = "\
Settings are taken from command-line flags first, then from the JSON object given by \
--config (keys are the long flag names with '_' for '-' and \"T\" for the horizon, \
e.g. {\"nx\": 128, \"init\": \"linear\", \"T\": 0.3}), \
then from built-in defaults. Relative paths in the config file resolve against its directory.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge or blowup detected \
(artifacts are still written), 1 any other failure.

MONGEO_THREADS caps the number of worker threads (default: all cores).";

#[derive(Parser)]
#[command(name = "mongeo", version, about = "Geodesics, energies and Camassa-Holm runs on monotone maps of [0, 1]", after_long_help = PRECEDENCE)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy of a path (Lagrangian, optionally relaxed with jumps) or of a velocity field.
    Energy(EnergyArgs),
    /// Geodesic between two maps by direct minimization.
    Geodesic(GeodesicArgs),
    /// Camassa-Holm evolution from an initial velocity profile.
    Evolve(EvolveArgs),
    /// Minimality certificate of a Camassa-Holm solution.
    Certify(CertifyArgs),
    /// Square-root interpolation path between two maps and its energy bound.
    Hellinger(HellingerArgs),
    /// Replaces the jumps of a path by continuous filling.
    Fill(FillArgs),
    /// Scripted scenarios.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Args)]
pub struct EnergyArgs {
    /// Path CSV/JSON (rows are time slices).
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Velocity field CSV/JSON.
    #[arg(long)]
    pub velocity: Option<PathBuf>,
    /// Jumps JSON `{"locations": [x, ..]}`; adds the jump term to a path's energy.
    #[arg(long)]
    pub jumps: Option<PathBuf>,
    /// Jump energy formula [default: metric].
    #[arg(long, value_enum)]
    pub formula: Option<Formula>,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    ClosedForm,
    AsPrinted,
    Metric,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Hellinger,
    Linear,
}

#[derive(Args)]
pub struct GeodesicArgs {
    /// Start map (single-row CSV/JSON).
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// End map.
    #[arg(long)]
    pub to: Option<PathBuf>,
    /// Space cells; the maps are resampled if they use another grid [default: input grid].
    #[arg(long)]
    pub nx: Option<usize>,
    /// Time steps [default: 32].
    #[arg(long)]
    pub nt: Option<usize>,
    /// Starting path [default: hellinger].
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Iteration cap [default: 5000].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stopping tolerance on the projected gradient [default: 1e-7].
    #[arg(long)]
    pub grad_tol: Option<f64>,
}

#[derive(Args)]
pub struct EvolveArgs {
    /// Initial velocity profile (single row, zero at both ends).
    #[arg(long)]
    pub v0: Option<PathBuf>,
    /// Horizon [default: 0.3].
    #[arg(short = 'T', long = "horizon")]
    pub horizon: Option<f64>,
    /// Time steps [default: 256].
    #[arg(long)]
    pub nt: Option<usize>,
}

#[derive(Args)]
pub struct CertifyArgs {
    /// Initial velocity profile; the solution is computed with `evolve`.
    #[arg(long)]
    pub v0: Option<PathBuf>,
    /// A velocity field to certify directly, instead of --v0.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Horizon of the certificate [default: 0.3, or the field's horizon].
    #[arg(short = 'T', long = "horizon")]
    pub horizon: Option<f64>,
    /// Time steps of the evolution [default: 256].
    #[arg(long)]
    pub nt: Option<usize>,
    /// Also use the first and last time slices, where the time stencils are one-sided.
    #[arg(long)]
    pub include_boundary: bool,
}

#[derive(Args)]
pub struct HellingerArgs {
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long)]
    pub to: Option<PathBuf>,
    /// Space cells [default: input grid].
    #[arg(long)]
    pub nx: Option<usize>,
    /// Time steps [default: 32].
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Args)]
pub struct FillArgs {
    /// Path with jumps.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Jumps JSON `{"locations": [x, ..]}`.
    #[arg(long)]
    pub jumps: Option<PathBuf>,
    /// Total width of the opened gaps [default: 0.1].
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Subcommand)]
pub enum Demo {
    /// Two flows of one non-Lipschitz field: a particle reaching ½ in finite time and one resting there.
    Collapse(CollapseArgs),
    /// Smoothed peakon-antipeakon collision: the flow's smallest density heads to 0.
    Peakon(PeakonArgs),
}

#[derive(Args)]
pub struct CollapseArgs {
    /// Space cells, even [default: 2048].
    #[arg(long)]
    pub nx: Option<usize>,
    /// Time steps [default: 2000].
    #[arg(long)]
    pub nt: Option<usize>,
    /// Horizon [default: 1].
    #[arg(short = 'T', long = "horizon")]
    pub horizon: Option<f64>,
    /// Starting point of the moving particle [default: 0.75].
    #[arg(long)]
    pub start: Option<f64>,
}

#[derive(Args)]
pub struct PeakonArgs {
    /// Space cells [default: 1024].
    #[arg(long)]
    pub nx: Option<usize>,
    /// Time steps [default: 4000].
    #[arg(long)]
    pub nt: Option<usize>,
    /// Horizon [default: 1].
    #[arg(short = 'T', long = "horizon")]
    pub horizon: Option<f64>,
    /// Peak height [default: 1].
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Decay length of each peak [default: 0.05].
    #[arg(long)]
    pub width: Option<f64>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<mongeo::Error>() {
            return match e {
                mongeo::Error::BlowupDetected { .. } => 3,
                mongeo::Error::StepRejected { .. } | mongeo::Error::DegenerateDensity { .. } => 1,
                _ => 2,
            };
        }
    }
    1
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("MONGEO_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| InputError(format!("MONGEO_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    configure_threads()?;
    let settings = settings::Settings::load(cli.config.as_deref())?;
    let out = settings.output_dir(cli.out)?;
    match cli.command {
        Command::Energy(a) => commands::energy(a, &settings, out),
        Command::Geodesic(a) => commands::geodesic(a, &settings, out),
        Command::Evolve(a) => commands::evolve(a, &settings, out),
        Command::Certify(a) => commands::certify(a, &settings, out),
        Command::Hellinger(a) => commands::hellinger(a, &settings, out),
        Command::Fill(a) => commands::fill(a, &settings, out),
        Command::Demo { which: Demo::Collapse(a) } => commands::collapse(a, &settings, out),
        Command::Demo { which: Demo::Peakon(a) } => commands::peakon(a, &settings, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Incomplete(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
