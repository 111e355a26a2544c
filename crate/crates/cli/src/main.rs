mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::MAP_HELP;

/// Spectral invariants of weighted transfer operators for piecewise monotone interval maps.
#[derive(Parser, Debug)]
#[command(name = "tspec", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    #[arg(long, global = true, default_value = "builtin:beta:3/2", help = MAP_HELP)]
    pub map: String,
    /// inverse-derivative, constant:<q> or poly:<c0>,<c1>,...
    #[arg(long, global = true, default_value = "inverse-derivative")]
    pub weight: String,
    /// Directory receiving JSON, CSV and SVG artifacts.
    #[arg(long, global = true, env = "TSPEC_OUT_DIR", default_value = "tspec-out")]
    pub out_dir: PathBuf,
    /// Seed for every random observable suite.
    #[arg(long, global = true, default_value_t = transfer_spectra::suite::DEFAULT_SEED)]
    pub seed: u64,
    /// Working precision for irrational example data.
    #[arg(long, global = true, default_value_t = config::default_bits())]
    pub bits: u32,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Discontinuity orbits, k0 and the Markov test.
    Orbits {
        #[arg(long, default_value_t = 64)]
        depth: usize,
    },
    /// Λ^inf and Λ^sup estimates along the discontinuity orbits.
    Lambda {
        #[arg(long, default_value_t = 64)]
        depth: usize,
        /// Defaults to 1..depth.
        #[arg(long)]
        n_range: Option<String>,
    },
    /// sup|φ_n|^{1/n} and ‖1/(T^n)'‖^{1/n}.
    BvRadius {
        #[arg(long, default_value = "1..12")]
        n_range: String,
    },
    /// Spectral gap of the example family T_{m,ρ}.
    ExampleGap {
        #[arg(long, default_value_t = 10)]
        m: i64,
        /// Fail unless the gap exceeds c; also reports the smallest m achieving c.
        #[arg(long)]
        c: Option<String>,
        #[arg(long, default_value = "thue-morse")]
        itinerary: String,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 48)]
        depth: usize,
    },
    /// Exact checks of the identities behind the bounds.
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
    /// Ulam discretization spectrum with the reference radii.
    Ulam {
        #[arg(long, default_value = "64,256")]
        m_list: String,
        /// uniform or gamma-aligned
        #[arg(long, default_value = "gamma-aligned")]
        policy: String,
        #[arg(long, default_value = "1..12")]
        n_range: String,
    },
    /// Λ estimates, BV radius and Ulam spectrum in one report.
    Report {
        #[arg(long, default_value = "64,256")]
        m_list: String,
        #[arg(long, default_value = "1..12")]
        n_range: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum VerifySuite {
    /// J(Lh, a_k) = γ φ(a_{k-1}) J(h, a_{k-1}) for k in the range.
    JumpShift {
        #[arg(long, default_value = "1..32")]
        k: String,
        #[arg(long, default_value_t = 20)]
        suite_size: usize,
    },
    /// (Lh)' = L(φ'/T' h) + L(φ/T' h').
    DerivIdentity {
        #[arg(long, default_value_t = 20)]
        suite_size: usize,
    },
    /// D^p L^n h = Σ_l L^n(A_{l,p,n} D^l h) and the closed form of A_{p,p,n}.
    SuperDa {
        #[arg(long, default_value = "1..4")]
        n: String,
        #[arg(long, default_value_t = 3)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        suite_size: usize,
    },
    /// Dual eigen-functional residuals over the λ grid.
    DualEigen {
        #[arg(long, default_value_t = 32)]
        depth: usize,
        #[arg(long, default_value_t = 20)]
        suite_size: usize,
    },
    /// Deep-jump contraction against Λ̃^n.
    Ly {
        #[arg(long, default_value = "1..8")]
        n: String,
        /// Must exceed the Λ^sup estimate.
        #[arg(long, default_value = "3/4")]
        lambda_tilde: String,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 20)]
        suite_size: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
