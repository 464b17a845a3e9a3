//! Command-line front end: builds measures and systems, runs the analyses, writes JSON/CSV with manifests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "ubiq", version, about = "Multifractal limsup-set experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "UBIQ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Build a measure on the c-adic tree.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Fit τ(q) and its Legendre transform.
    Spectrum(SpectrumArgs),
    /// Generate point–scale systems.
    #[command(subcommand)]
    System(SystemCmd),
    /// Weak-redundancy analysis of a system.
    Redundancy(RedundancyArgs),
    /// Conditioned selection of indices.
    Select(SelectArgs),
    /// Box-count exponents of a selection's limsup approximants.
    Dim(DimArgs),
    /// Generalized Cantor construction and its audits.
    #[command(subcommand)]
    Cantor(CantorCmd),
    /// Jarnik–Besicovitch experiment on rationals with prescribed digit frequencies.
    Demo(DemoArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug, Serialize)]
enum MeasureCmd {
    Build(MeasureBuildArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum MeasureKind {
    Multinomial,
    Cascade,
    Cpc,
    Gibbs,
}

#[derive(Args, Debug, Serialize)]
struct MeasureBuildArgs {
    #[arg(long, value_enum)]
    kind: MeasureKind,
    /// JSON file with the measure parameters.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    depth: u32,
    /// Overrides the seed of random measures.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; `.json` selects JSON, anything else the binary layout.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    q_min: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    q_max: f64,
    #[arg(long, default_value_t = 0.1)]
    q_step: f64,
    #[arg(long)]
    j_min: u32,
    #[arg(long)]
    j_max: u32,
    /// Number of α values for the Legendre transform.
    #[arg(long, default_value_t = 101)]
    alphas: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug, Serialize)]
enum SystemCmd {
    Gen(SystemGenArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Badic,
    Rationals,
    Nalpha,
    Poisson,
    Uniform,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Radius {
    Standard,
    Hurwitz,
}

#[derive(Args, Debug, Serialize)]
struct SystemGenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 2)]
    b: u32,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Deepest b-adic level.
    #[arg(long, default_value_t = 12)]
    j_max: u32,
    #[arg(long, default_value_t = 100)]
    q_max: u64,
    /// Keep only reduced fractions.
    #[arg(long)]
    irreducible: bool,
    #[arg(long, value_enum, default_value_t = Radius::Standard)]
    radius: Radius,
    /// golden, sqrt2, liouville:D, periodic:h;p, or a decimal literal.
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long, default_value_t = 4096)]
    n_max: u64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-3)]
    lambda_min: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ubiq::systems::DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RedundancyArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, default_value_t = 4)]
    j_min: i32,
    #[arg(long, default_value_t = 20)]
    j_max: i32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SelectArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// `auto` for the default schedule, or a constant.
    #[arg(long, default_value = "auto")]
    eps: String,
    /// Extra generations used to bracket ball masses.
    #[arg(long, default_value_t = 3)]
    margin: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DimArgs {
    #[arg(long)]
    selection: PathBuf,
    /// System file; defaults to the one recorded in the selection.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Finest box generation.
    #[arg(long = "J")]
    j_top: Option<u32>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    tails: Vec<usize>,
    /// δ values; defaults to the selection's δ.
    #[arg(long, value_delimiter = ',')]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    window: u32,
    /// τ*(α) for the theoretical bound.
    #[arg(long)]
    tau_star: Option<f64>,
    #[arg(long, default_value_t = 2)]
    c: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug, Serialize)]
enum CantorCmd {
    Build(CantorBuildArgs),
    Audit(CantorAuditArgs),
}

#[derive(Args, Debug, Serialize)]
struct CantorBuildArgs {
    /// Full configuration as JSON; otherwise built from the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Multinomial weights of μ = m.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    weights: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 4)]
    generations: usize,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// κ of the χ gauge (needed for ρ < 1).
    #[arg(long)]
    chi_kappa: Option<f64>,
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CantorAuditArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long, default_value_t = 5000)]
    balls: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Audit exponent; defaults to the dimension formula.
    #[arg(long)]
    exponent: Option<f64>,
    /// Constant of the φ gauge used by the audit.
    #[arg(long)]
    phi_c: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DemoArgs {
    #[arg(long, default_value_t = 2)]
    b: u32,
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.2")]
    pi: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2")]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 18)]
    depth: u32,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 10)]
    window: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Fail when the regenerated outputs differ from the recorded digests.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
