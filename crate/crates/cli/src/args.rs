use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// A comma-separated list of numbers, e.g. `0.5,1,2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

fn parse_axis(text: &str) -> Result<Axis, String> {
    threshlab::paramfile::parse_list(text).map(Axis)
}

#[derive(Debug, Parser)]
#[command(
    name = "threshlab",
    version,
    about = "Threshold effects in delay estimation: closed forms, phase diagrams and Monte Carlo"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each overrides the config-file key of
/// the same name.
#[derive(Debug, Args)]
pub struct Common {
    /// Parameter file: `name = value` lines, or JSON if the name ends in `.json`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Signal power.
    #[arg(long = "P", global = true, value_name = "POWER")]
    pub p: Option<f64>,
    /// Noise level; the white noise has spectral density N0/2.
    #[arg(long = "N0", global = true)]
    pub n0: Option<f64>,
    /// Observation time; a list for sweeps.
    #[arg(long = "T", global = true, value_parser = parse_axis)]
    pub t: Option<Axis>,
    /// Pulse-width prefactor; the width is Delta0·e^(−RT).
    #[arg(long = "Delta0", global = true)]
    pub delta0: Option<f64>,
    /// Bandwidth growth rate; a list for sweeps and tables.
    #[arg(long = "R", global = true, value_parser = parse_axis)]
    pub r: Option<Axis>,
    /// Half-range of the delay, in units of T.
    #[arg(long = "M", global = true)]
    pub m: Option<f64>,
    /// Smallest admissible amplitude; alone it implies the normalised upper end.
    #[arg(long = "alpha-min", global = true)]
    pub alpha_min: Option<f64>,
    /// Largest admissible amplitude; needs --alpha-min.
    #[arg(long = "alpha-max", global = true)]
    pub alpha_max: Option<f64>,
    /// Grid points per pulse width.
    #[arg(long = "G", global = true)]
    pub g: Option<u64>,
    /// Inverse temperatures, comma-separated.
    #[arg(long, global = true, value_parser = parse_axis)]
    pub beta: Option<Axis>,
    /// Master seed; every trial seed derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo realisations per cell.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Exact correlation paths or independent levels from the maximum law.
    #[arg(long, global = true, value_parser = ["exact", "surrogate"])]
    pub mode: Option<String>,
    /// Caps the worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Parent of the run directory.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Run directory name; defaults to a hash of the resolved configuration.
    #[arg(long, global = true)]
    pub label: Option<String>,
    /// Also write long-format CSV for plotting.
    #[arg(long = "emit-plot-data", global = true)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Free energy over a (β, R) grid and the three-phase boundaries.
    PhaseDiagram(DiagramArgs),
    /// The same with unknown amplitude: five-phase boundaries.
    PhaseDiagramJoint(JointDiagramArgs),
    /// Free energy and phase at listed (β, R) points.
    Psi,
    /// Monte Carlo estimation at one parameter point.
    Simulate(SimulateArgs),
    /// Empirical against closed-form free energy over (β, R, T).
    SweepPsi(SweepArgs),
    /// Anomaly rate across the capacity and the local-error decay.
    SweepThreshold(SweepArgs),
    /// Tabulates the maximum law; optionally checks it against simulation.
    Slepian(SlepianArgs),
    /// Weiss–Weinstein bound against the ML exponents.
    Bounds,
    /// Phase diagram of a receiver with a mismatched pulse.
    Mismatch(MismatchArgs),
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    #[arg(long = "beta-max")]
    pub beta_max: Option<f64>,
    #[arg(long = "R-max")]
    pub r_max: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    pub resolution: Option<u64>,
}

#[derive(Debug, Args)]
pub struct JointDiagramArgs {
    #[command(flatten)]
    pub diagram: DiagramArgs,
    /// Draw the anomalous part alone.
    #[arg(long)]
    pub anomalous: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = ["delay", "joint"])]
    pub estimator: Option<String>,
    /// Largest K a run may visit level by level.
    #[arg(long = "k-max")]
    pub k_max: Option<f64>,
    /// Accept amplitude ranges without unit mean square.
    #[arg(long = "unchecked-amplitudes")]
    pub unchecked_amplitudes: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimulateArgs,
    /// Attach bound values to every cell.
    #[arg(long = "with-bounds")]
    pub with_bounds: bool,
}

#[derive(Debug, Args)]
pub struct SlepianArgs {
    /// Print normalization and derivative-consistency residuals.
    #[arg(long)]
    pub check: bool,
    /// Simulated suprema for a KS comparison.
    #[arg(long)]
    pub paths: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MismatchArgs {
    /// Normalised overlap of the receiver pulse with the true one.
    #[arg(long)]
    pub rho: Option<f64>,
    #[command(flatten)]
    pub diagram: DiagramArgs,
}
