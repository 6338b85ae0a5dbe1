use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "riskmdp", version, about = "Risk-sensitive MDP solver, oracle and verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the game LPs and compare against the brute-force oracle.
    Solve(SolveArgs),
    /// Growth rates by power iteration and policy enumeration.
    Oracle(OracleArgs),
    /// Re-check the dynamic-programming equations for a saved solution.
    Verify(VerifyArgs),
    /// Closed-form two-state example.
    Example(ExampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Grid,
    Congen,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub n_start: u32,
    #[arg(long, default_value_t = 8)]
    pub n_max: u32,
    #[arg(long, default_value_t = 1e-4)]
    pub stop_tol: f64,
    #[arg(long, value_enum, default_value_t = Method::Grid)]
    pub method: Method,
    /// Tolerance for grouping values into levels in the certificate.
    #[arg(long, default_value_t = 1e-6)]
    pub level_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Policy file; without it all pure policies are enumerated.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Report written by `solve`.
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub level_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
