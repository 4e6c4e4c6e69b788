//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "lienard-lab",
    version,
    about = "Classify planar polynomial oscillators by the damping sign of their Lienard form, and check the verdicts numerically",
    after_help = "Exit codes: 0 ok, 1 usage or I/O error, 2 invalid model, 3 integrator failure, \
                  4 unsupported truncation template, 5 no boundary in the swept box.\n\
                  LIENARD_LAB_THREADS caps the worker count of sweeps."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Built-in model catalog.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
    /// Reduce a model and print the damping-sign verdict.
    Classify(ClassifyArgs),
    /// Integrate a model, write the trajectory and summarize the cycle verdict.
    Simulate(SimulateArgs),
    /// Amplitude and phase flow of the truncated equation.
    Rg(RgArgs),
    /// Scan two parameters of a built-in model and trace the F(0,0) = 0 curve.
    Sweep(SweepArgs),
    /// Run one reproduction config.
    Reproduce(ReproduceArgs),
    /// Run every reproduction config in a directory.
    RunAllFigures(RunAllArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelsAction {
    /// List built-in models with their parameters and defaults.
    List,
    /// Print a built-in model in model-file format.
    Show {
        /// Built-in model: brusselator, glycolytic or vanderpol.
        #[arg(long)]
        model: String,
        /// Parameter override `name=value`; repeatable.
        #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Built-in model: brusselator, glycolytic or vanderpol.
    #[arg(long, value_name = "PRESET")]
    pub model: Option<String>,
    /// Model file with `dx = ...` and `dy = ...` lines.
    #[arg(long, value_name = "PATH", conflicts_with = "model")]
    pub file: Option<PathBuf>,
    /// Parameter override `name=value` for a built-in model; repeatable.
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct NumericArgs {
    /// Seed point `x,y`; repeatable. One seed is paired with a second seed
    /// on the other side of the cycle estimate.
    #[arg(long = "seed", value_name = "X,Y", value_parser = parse_seed)]
    pub seeds: Vec<[f64; 2]>,
    /// Relative integrator tolerance; the absolute tolerance is 1% of it.
    #[arg(long, value_name = "REL")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Which files to write.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also run the numeric cycle detector at each valid steady state.
    #[arg(long)]
    pub confirm: bool,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
    /// Length of the written trajectory.
    #[arg(long, value_name = "T", default_value_t = 100.0)]
    pub t_end: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RgArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Book-keeping parameter multiplying the quadratic nonlinearity.
    #[arg(long, default_value_t = lienard_lab::rg::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Add the series-versus-numeric error table over five periods.
    #[arg(long)]
    pub compare: bool,
    /// Amplitude used by --compare.
    #[arg(long, value_name = "A", default_value_t = 0.1)]
    pub amplitude: f64,
    /// Relative integrator tolerance for --compare.
    #[arg(long, value_name = "REL")]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Built-in model: brusselator, glycolytic or vanderpol.
    #[arg(long, value_name = "PRESET")]
    pub model: String,
    /// Fixed parameter `name=value`; repeatable.
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Scan axes `p1:lo:hi:n,p2:lo:hi:n`.
    #[arg(long, value_name = "AXES")]
    pub axes: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Reproduction config (TOML).
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunAllArgs {
    /// Directory holding the `*.toml` reproduction configs.
    #[arg(long, value_name = "DIR", default_value = "configs")]
    pub configs: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "figures")]
    pub out: PathBuf,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok((k.trim().to_string(), v))
}

fn parse_seed(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got `{s}`"))?;
    let x: f64 = x.trim().parse().map_err(|_| format!("`{x}` is not a number"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("`{y}` is not a number"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("`{s}` is not finite"));
    }
    Ok([x, y])
}
