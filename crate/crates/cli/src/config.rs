use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Flags shared by every experiment.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Dimension of the sphere / Euclidean space.
    #[arg(long, default_value_t = 3)]
    pub n: u32,
    /// Half the operator order.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Nonlinearity exponent; the critical exponent when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Perturbation parameter; repeat for a list.
    #[arg(long = "epsilon")]
    pub epsilon: Vec<f64>,
    /// Largest spectral degree.
    #[arg(long = "L", default_value_t = 64)]
    pub degree: usize,
    /// Number of quadrature nodes.
    #[arg(long = "M", default_value_t = 96)]
    pub nodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for the pass/fail decision; each subcommand has its own default.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Everything needed to re-run an experiment, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub n: u32,
    pub s: f64,
    pub alpha: f64,
    pub epsilon: Vec<f64>,
    #[serde(rename = "L")]
    pub degree: usize,
    #[serde(rename = "M")]
    pub nodes: usize,
    pub seed: u64,
    pub tol: f64,
    pub out: PathBuf,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x_norms: Vec<f64>,
}
