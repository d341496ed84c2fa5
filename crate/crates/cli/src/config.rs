use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "cwtori", version, about = "Constrained Willmore tori: families, stability reports and meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// n-lobed Hopf family over a (λ̃, κ₀) grid, written as CSV.
    HopfFamily(HopfFamilyArgs),
    /// (1,2)-equivariant family at fixed b, with multiplier estimates.
    Eq12Family(Eq12Args),
    /// Critical α and kernel modes at a homogeneous torus.
    Stability(StabilityArgs),
    /// OBJ mesh of a torus after stereographic projection.
    Mesh(MeshArgs),
    /// Stability reports over a range of b.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridPreset {
    /// 5 × 5 around the Clifford point.
    Small,
    /// 11 × 11.
    Medium,
    /// 21 × 21.
    Large,
}

#[derive(Debug, Args, Serialize)]
pub struct HopfFamilyArgs {
    /// Lobe count.
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, value_enum, default_value_t = GridPreset::Small)]
    pub grid: GridPreset,
    /// Largest λ̃ (the grid runs from 0).
    #[arg(long, default_value_t = 0.01)]
    pub lambda_max: f64,
    /// κ₀ runs over [−kappa_max, kappa_max].
    #[arg(long, default_value_t = 0.1)]
    pub kappa_max: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Eq12Args {
    #[arg(long, default_value_t = 1.05)]
    pub b: f64,
    /// Largest turning-point offset R(0) − s.
    #[arg(long, default_value_t = 0.05)]
    pub eps_max: f64,
    /// Members after the homogeneous one, uniform in the offset (and so in √a).
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Profile samples used for the multiplier fits.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StabilityArgs {
    #[arg(long)]
    pub b: f64,
    /// Include every scanned mode in the report.
    #[arg(long)]
    pub table: bool,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Surface {
    Homogeneous,
    Eq12,
}

#[derive(Debug, Args, Serialize)]
pub struct MeshArgs {
    /// Shorthand for `--surface homogeneous`.
    #[arg(long, conflicts_with = "surface")]
    pub homogeneous: bool,
    #[arg(long, value_enum)]
    pub surface: Option<Surface>,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Offset R(0) − s of the (1,2) member.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 128)]
    pub nx: usize,
    #[arg(long, default_value_t = 64)]
    pub ny: usize,
    /// Projection centre on S³ as four comma-separated numbers.
    #[arg(long, default_value = "0,0,0,1")]
    pub pole: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1.0)]
    pub b_min: f64,
    #[arg(long, default_value_t = 1.1)]
    pub b_max: f64,
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("--{name} must be positive and finite, got {v}")))
    }
}

impl Command {
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            Command::HopfFamily(a) => {
                if a.n < 2 {
                    return Err(CliError::Config(format!("--n must be at least 2, got {}", a.n)));
                }
                positive("lambda-max", a.lambda_max)?;
                positive("kappa-max", a.kappa_max)
            }
            Command::Eq12Family(a) => {
                positive("b", a.b)?;
                positive("eps-max", a.eps_max)?;
                if a.steps < 3 {
                    return Err(CliError::Config("--steps must be at least 3".into()));
                }
                if a.samples < 16 {
                    return Err(CliError::Config("--samples must be at least 16".into()));
                }
                Ok(())
            }
            Command::Stability(a) => positive("b", a.b),
            Command::Mesh(a) => {
                positive("b", a.b)?;
                if a.nx < 8 || a.ny < 8 {
                    return Err(CliError::Config("--nx and --ny must be at least 8".into()));
                }
                if !a.homogeneous && a.surface.is_none() {
                    return Err(CliError::Config("choose --homogeneous or --surface".into()));
                }
                parse_pole(&a.pole).map(|_| ())
            }
            Command::Sweep(a) => {
                positive("b-min", a.b_min)?;
                positive("b-max", a.b_max)?;
                if a.b_max < a.b_min || a.steps == 0 {
                    return Err(CliError::Config("sweep range is empty".into()));
                }
                Ok(())
            }
        }
    }
}

pub fn parse_pole(s: &str) -> Result<[f64; 4], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--pole: {e}")))?;
    if v.len() != 4 || v.iter().all(|&x| x == 0.0) || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("--pole needs four finite numbers, not all zero: {s}")));
    }
    Ok([v[0], v[1], v[2], v[3]])
}

/// n evenly spaced values on [lo, hi].
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl GridPreset {
    pub fn size(self) -> usize {
        match self {
            GridPreset::Small => 5,
            GridPreset::Medium => 11,
            GridPreset::Large => 21,
        }
    }
}
