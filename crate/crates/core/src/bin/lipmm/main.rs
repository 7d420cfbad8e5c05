//! `lipmm`: command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure (report still written),
//! 2 bad input, 3 internal invariant breach.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lipmm::alberti::AlbertiError;
use lipmm::approx::ApproxError;
use lipmm::lipscape::LipscapeError;
use lipmm::poset::PosetError;
use lipmm::zahorski::ZahorskiError;

#[derive(Parser, Debug)]
#[command(name = "lipmm", version, about = "Lipschitz analysis on finite metric measure spaces")]
pub struct Cli {
    /// Output directory.
    #[arg(long, env = "LIPMM_OUT", default_value = "lipmm-out", global = true)]
    pub out: PathBuf,
    /// Tolerance for geometric predicates and certificate checks.
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub tol: f64,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate or validate point clouds.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Greedy nets and covering-count dimension estimates.
    #[command(subcommand)]
    Net(NetCmd),
    /// Chain order on cylinder nodes.
    #[command(subcommand)]
    Poset(PosetCmd),
    /// Strip approximation.
    #[command(subcommand)]
    Approx(ApproxCmd),
    /// Fragment representations of a measure.
    #[command(subcommand)]
    Alberti(AlbertiCmd),
    /// Pointwise Lipschitz profiles.
    #[command(subcommand)]
    Lip(LipCmd),
    /// Porosity witnesses.
    #[command(subcommand)]
    Porosity(PorosityCmd),
    /// Gap detection between derivation norms and pointwise Lipschitz constants.
    #[command(subcommand)]
    Gap(GapCmd),
    /// Independent Lipschitz functions on a Cantor sample, in exact arithmetic.
    #[command(subcommand)]
    Zahorski(ZahorskiCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Euclidean,
    Max,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Grid,
    Segment,
    Cantor,
    /// Triadic grid with its Cantor endpoints written as a set file.
    Triadic,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct SpaceIn {
    /// Point cloud (JSON, or CSV `id,x1..xd,weight`).
    #[arg(long)]
    pub input: PathBuf,
    /// Distance used for CSV point clouds.
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
    /// Treat the input as a square distance-matrix CSV.
    #[arg(long)]
    pub matrix: bool,
}

#[derive(Subcommand, Debug)]
pub enum SpaceCmd {
    Generate(GenerateArgs),
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Points per side (grid) or number of points (segment).
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Construction level (cantor, triadic).
    #[arg(long, default_value_t = 4)]
    pub level: u32,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub space: SpaceIn,
}

#[derive(Subcommand, Debug)]
pub enum NetCmd {
    Build(NetArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct NetArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub net_eps: f64,
    /// Dyadic scale pairs for the covering-count estimate.
    #[arg(long, default_value_t = 4)]
    pub scales: usize,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct FunctionIn {
    /// Function table CSV `id,f1..fq`.
    #[arg(long)]
    pub values: PathBuf,
    /// Set of point ids (JSON array or one per line); all points if omitted.
    #[arg(long)]
    pub set: Option<PathBuf>,
    /// Cone axis `w`, comma separated; defaults to the first coordinate direction.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cone_axis: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum PosetCmd {
    Chains(PosetArgs),
    Antichains(PosetArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct PosetArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long)]
    pub set: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cone_axis: Option<Vec<f64>>,
    /// Random instance with this many nodes instead of an input space.
    #[arg(long)]
    pub random: Option<usize>,
    /// Transverse dimension of a random instance.
    #[arg(long, default_value_t = 1)]
    pub transverse: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub alpha: f64,
}

#[derive(Subcommand, Debug)]
pub enum ApproxCmd {
    Run(ApproxArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[command(flatten)]
    pub function: FunctionIn,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long)]
    pub n: usize,
    /// Also tabulate the error against n = 1, 2, 4, ... up to n.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Subcommand, Debug)]
pub enum AlbertiCmd {
    Build(AlbertiBuildArgs),
    Validate(AlbertiRepArgs),
    Derive(AlbertiDeriveArgs),
    Algebra(AlbertiAlgebraArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct AlbertiBuildArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    /// Lines of a `side x side` grid instead of the greedy construction.
    #[arg(long)]
    pub grid_side: Option<usize>,
    /// Varying coordinate of the grid lines.
    #[arg(long, default_value_t = 1)]
    pub axis: usize,
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cone_axis: Option<Vec<f64>>,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub angle: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub coverage: f64,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub min_len: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct AlbertiRepArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub rep: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct AlbertiDeriveArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub rep: PathBuf,
    #[arg(long)]
    pub values: PathBuf,
    /// Test function `g` (first column) for the pairing bound.
    #[arg(long)]
    pub pair_with: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraOp {
    Reparametrize,
    Indicator,
    Sum,
    Scale,
}

#[derive(Args, Debug, Serialize)]
pub struct AlbertiAlgebraArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub rep: PathBuf,
    #[arg(long)]
    pub values: PathBuf,
    #[arg(long, value_enum)]
    pub op: AlgebraOp,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    /// Subset for the indicator combination.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// Further representations to add (the input is added to itself if none).
    #[arg(long)]
    pub with: Vec<PathBuf>,
    /// Scale factors `lambda` (first column of a function table).
    #[arg(long)]
    pub lambda: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub bound: f64,
    #[arg(long, default_value_t = 10)]
    pub depth: u32,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct ScalesArg {
    /// Explicit scales, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    /// Largest dyadic scale (defaults to the diameter).
    #[arg(long)]
    pub top: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub count: usize,
}

#[derive(Subcommand, Debug)]
pub enum LipCmd {
    Profile(LipProfileArgs),
    Liplip(LipLipArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct LipProfileArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub values: PathBuf,
    #[command(flatten)]
    pub scales: ScalesArg,
}

#[derive(Args, Debug, Serialize)]
pub struct LipLipArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub values: PathBuf,
    /// Window; defaults to the common finest window.
    #[arg(long)]
    pub window: Option<f64>,
    /// Constant for the `biglip <= tau * smllip` check.
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum PorosityCmd {
    Scan(PorosityArgs),
    Saturate(PorosityArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct PorosityArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub c: f64,
    #[command(flatten)]
    pub scales: ScalesArg,
}

#[derive(Subcommand, Debug)]
pub enum GapCmd {
    Detect(GapArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GapArgs {
    #[command(flatten)]
    pub space: SpaceIn,
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub values: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub window: f64,
    /// Fragment pool (JSON array of `{domain, trace}`).
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Build the pool from two-point fragments inside the set up to this length.
    #[arg(long)]
    pub pool_step: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum ZahorskiCmd {
    Build(ZahorskiArgs),
    Report(ZahorskiArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ZahorskiArgs {
    /// Exact rationals, e.g. `1/2` or `0.05`.
    #[arg(long, default_value = "1/2")]
    pub delta0: String,
    #[arg(long, default_value = "1")]
    pub lip: String,
    #[arg(long, default_value = "0.05")]
    pub alpha: String,
    /// Number of functions.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Cantor level of the set.
    #[arg(long, default_value_t = 3)]
    pub set_level: u32,
    /// Level of the coarse triadic grid added to the sample.
    #[arg(long, default_value_t = 4)]
    pub grid_level: u32,
    /// Deepest triadic generation the flat family may use.
    #[arg(long, default_value_t = 600)]
    pub max_generation: u32,
}

/// How a command ended when it did not fail outright.
pub struct Outcome {
    pub ok: bool,
    pub summary: String,
}

fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ApproxError>() {
            return match e {
                ApproxError::ComparablePair(..) | ApproxError::WidthMismatch(..) | ApproxError::Overlap { .. } => 3,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<PosetError>() {
            return if matches!(e, PosetError::NotAChain { .. }) { 3 } else { 2 };
        }
        if let Some(e) = cause.downcast_ref::<AlbertiError>() {
            return if matches!(e, AlbertiError::Overlap { .. }) { 3 } else { 2 };
        }
        if let Some(e) = cause.downcast_ref::<ZahorskiError>() {
            return match e {
                ZahorskiError::Violation { .. } | ZahorskiError::FamilyCertificate { .. } | ZahorskiError::MissingWitness { .. } => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<LipscapeError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<commands::Invariant>().is_some() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(Outcome { ok: true, summary }) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Ok(Outcome { ok: false, summary }) => {
            eprintln!("validation failed: {summary}");
            ExitCode::from(1)
        }
        Err(err) => {
            let code = classify(&err);
            let msg = serde_json::json!({ "error": error_text(&err), "exit_code": code });
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

/// The error chain joined by `: `, skipping causes a parent message already quotes.
fn error_text(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if text.contains(&msg) {
            continue;
        }
        if !text.is_empty() {
            text.push_str(": ");
        }
        text.push_str(&msg);
    }
    text
}
