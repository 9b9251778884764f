// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

mod commands;
mod plot;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fqnv::units::ModelTag;

use crate::plot::PlotKind;

#[derive(Parser, Debug)]
#[command(name = "fqnv", version, about = "Flux-qubit / NV-ensemble spectroscopy models")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the ensemble seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Thom,
    Mhom,
    Me,
}

impl From<ModelArg> for ModelTag {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Thom => ModelTag::Thom,
            ModelArg::Mhom => ModelTag::Mhom,
            ModelArg::Me => ModelTag::Me,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Power,
    Detuning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EigenMethod {
    Numeric,
    Perturbative,
    Exact,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute one spectrum; writes spectrum.csv and spectrum.meta.json.
    Simulate {
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Drive amplitude, overriding system.lambda.
        #[arg(long)]
        lambda: Option<f64>,
        /// Drive power in dBm, converted through drive_calibration.
        #[arg(long, conflicts_with = "lambda", allow_hyphen_values = true)]
        power_dbm: Option<f64>,
    },
    /// Spectra over drive amplitude or detuning; writes sweep.csv (long format).
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Single-excitation eigenfrequencies and qubit weights as JSON.
    Eigen {
        /// Detuning ω_FQ − ω_NV; defaults to the configured one.
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value = "numeric")]
        method: EigenMethod,
    },
    /// Run the parameter-estimation pipeline; writes estimate.json.
    Estimate,
    /// Fit a Lorentzian to a spectrum CSV inside a frequency window.
    FitLorentzian {
        #[arg(long)]
        input: PathBuf,
        /// Window as `lo,hi` in MHz.
        #[arg(long, value_delimiter = ',', num_args = 2, required = true)]
        window: Vec<f64>,
    },
    /// Middle-peak FWHM against drive amplitude; writes fwhm.csv.
    SweepPower {
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
    },
    /// Emit a gnuplot script next to a CSV produced by this tool.
    PlotScript {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
    },
    /// Grow the Fock truncation until the ME spectrum stops changing.
    Convergence {
        #[arg(long, default_value_t = 2)]
        start: usize,
        #[arg(long, default_value_t = 6)]
        max_levels: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
