use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use trigbound_core::BoundConstant;

mod commands;
mod pgm;

/// Sample-based bounds and positivity certificates for trigonometric
/// polynomials, Toeplitz spectra and filter banks.
#[derive(Debug, Parser)]
#[command(name = "trigbound", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Bound the extrema of a polynomial from its samples on a uniform grid.
    Bound(BoundArgs),
    /// Certify strict positivity of a real polynomial; exit 0 iff certified.
    Certify(CertifyArgs),
    /// Tabulate the sharp and simple bound constants over grid ratios as CSV.
    FigOpnorm(FigOpnormArgs),
    /// Enclose the eigenvalues of Toeplitz / BTTB matrices with a given symbol.
    ToeplitzEig(ToeplitzArgs),
    /// Design an analysis filter bank (optionally with FIR synthesis filters).
    FbDesign(FbDesignArgs),
    /// Certify perfect reconstruction of a filter bank; exit 0 iff certified.
    FbCertify(FbCertifyArgs),
    /// Run an image through a filter bank and report the reconstruction PSNR.
    FbApply(FbApplyArgs),
}

#[derive(Debug, Args, Serialize)]
struct BoundArgs {
    /// Polynomial coefficient file (JSON).
    #[arg(long)]
    poly: PathBuf,
    /// Samples per axis.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    grid_size: usize,
    /// Norming-set constant used for the bounds.
    #[arg(long, default_value = "sharp")]
    constant: BoundConstant,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CertifyArgs {
    /// Polynomial coefficient file (JSON).
    #[arg(long)]
    poly: PathBuf,
    /// Samples per axis.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    grid_size: usize,
    /// Constant whose threshold decides the certificate.
    #[arg(long, default_value = "sharp")]
    constant: BoundConstant,
}

#[derive(Debug, Args, Serialize)]
struct FigOpnormArgs {
    /// Polynomial degree.
    #[arg(long)]
    n: usize,
    /// Ratios N/2n as start:stop:step (inclusive).
    #[arg(long, default_value = "1.05:8:0.05")]
    ratios: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ToeplitzArgs {
    /// Generator file: polynomial JSON with "kind": "toeplitz".
    #[arg(long = "gen", value_name = "FILE")]
    #[serde(rename = "gen")]
    generators: PathBuf,
    /// Samples per axis of the symbol.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    grid_size: usize,
    #[arg(long, default_value = "sharp")]
    constant: BoundConstant,
}

#[derive(Debug, Args, Serialize)]
struct FbDesignArgs {
    /// Design configuration (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output bank file.
    #[arg(long)]
    out: PathBuf,
    /// Co-design FIR synthesis filters of this side length.
    #[arg(long)]
    synth_size: Option<usize>,
    /// Start from the analysis filters of this bank file.
    #[arg(long)]
    init_bank: Option<PathBuf>,
    /// Override the iteration count of the config.
    #[arg(long)]
    iters: Option<usize>,
    /// Write the objective per iteration here as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FbCertifyArgs {
    /// Bank file (JSON).
    #[arg(long)]
    bank: PathBuf,
    /// Samples per axis of p_H.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    grid_size: usize,
    #[arg(long, default_value = "sharp")]
    constant: BoundConstant,
}

#[derive(Debug, Args, Serialize)]
struct FbApplyArgs {
    /// Bank file (JSON). Without synthesis filters the minimum-norm
    /// synthesis bank is used.
    #[arg(long)]
    bank: PathBuf,
    /// Input image, 8- or 16-bit PGM.
    #[arg(long)]
    image: PathBuf,
    /// Reconstructed image, written with the input bit depth.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid for the minimum-norm synthesis bank; defaults to the padded
    /// image side.
    #[arg(long)]
    min_norm_grid: Option<usize>,
}

/// Exit statuses.
const EXIT_OK: u8 = 0;
const EXIT_NOT_CERTIFIED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(commands::Outcome::Done) => ExitCode::from(EXIT_OK),
        Ok(commands::Outcome::NotCertified) => ExitCode::from(EXIT_NOT_CERTIFIED),
        Err(err) => {
            eprintln!("trigbound: {err}");
            ExitCode::from(commands::exit_status(&err))
        }
    }
}
