//! `finetti`: thresholds, bounds, operator certification, simulation and
//! figure data for biased-basis squeezed-state verification.
//!
//! Exit codes: 0 success, 1 invalid parameters, 2 numerical failure
//! (truncation, duality gap, failed certification).

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use finetti_core::Error as CoreError;

#[derive(Parser, Debug)]
#[command(name = "finetti", version, about, long_about = None)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct GlobalArgs {
    /// Result file. Relative paths resolve against $FINETTI_OUTPUT_DIR when set;
    /// without this flag results go to $FINETTI_OUTPUT_DIR/<command>.<ext> or stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Result format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// RNG seed for simulations.
    #[arg(long, global = true, default_value = "1", value_parser = parse_count)]
    pub seed: u64,

    /// Independent RNG streams for simulations.
    #[arg(long, global = true, default_value = "8", value_parser = parse_count)]
    pub streams: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimum verification threshold n0 for (k, n, q, r).
    Threshold(ThresholdArgs),
    /// Every scalar bound, for one point or a grid of (k, n, q, r).
    Bounds(BoundsArgs),
    /// Numerical complementary overlap γ(δ) on the truncated POVMs.
    Gamma(GammaArgs),
    /// Certify the operator inequality chain by eigensolves.
    VerifyOperators(VerifyArgs),
    /// Monte Carlo verification rounds, or the sampling tail-bound check.
    Simulate(SimulateArgs),
    /// Threshold curves over squeezing (fig3a) or basis bias (fig3b).
    Figures(FiguresArgs),
    /// Outlines of the pass rectangle and the support ellipse.
    Regions(RegionsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Threshold(_) => "threshold",
            Command::Bounds(_) => "bounds",
            Command::Gamma(_) => "gamma",
            Command::VerifyOperators(_) => "verify-operators",
            Command::Simulate(_) => "simulate",
            Command::Figures(_) => "figures",
            Command::Regions(_) => "regions",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PointArgs {
    /// Verification sample count.
    #[arg(long, default_value = "2e7")]
    pub k: f64,
    /// Key sample count.
    #[arg(long, default_value = "2e9")]
    pub n: f64,
    /// Probability of measuring X.
    #[arg(long, default_value = "0.4")]
    pub q: f64,
    /// Squeezing parameter.
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    pub r: f64,
    /// Grid over one parameter as `name=lo:hi:count`, name in k, n, q, r. At most two.
    #[arg(long, value_parser = commands::parse_sweep)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<commands::Sweep>,
}

#[derive(Args, Debug, Serialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub point: PointArgs,
    /// Also report the alternative prefactor and exponent variants.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub point: PointArgs,
    /// Fill gamma_numeric by eigensolves at the closed-form threshold.
    #[arg(long)]
    pub numeric_gamma: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct GammaArgs {
    #[arg(long, default_value = "6")]
    pub n0: f64,
    #[arg(long, default_value = "0.2", allow_negative_numbers = true)]
    pub r: f64,
    #[arg(long, default_value = "0.4")]
    pub q: f64,
    /// Bound on the U1 probability.
    #[arg(long, default_value = "0.05")]
    pub delta: f64,
    /// Fock cutoff [default: 8(n0 e^{2|r|} + 1)].
    #[arg(long, value_parser = parse_dim)]
    pub dim: Option<usize>,
    /// Largest accepted primal-dual gap.
    #[arg(long, default_value = "1e-7")]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value = "6")]
    pub n0: f64,
    #[arg(long, default_value = "0.2", allow_negative_numbers = true)]
    pub r: f64,
    #[arg(long, default_value = "0.4")]
    pub q: f64,
    /// Fock cutoff [default: 8(n0 e^{2|r|} + 1)].
    #[arg(long, value_parser = parse_dim)]
    pub dim: Option<usize>,
    /// Slack allowed on each minimum eigenvalue gap.
    #[arg(long, default_value = "1e-7")]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Measurements per verification round.
    #[arg(long, default_value = "10", value_parser = parse_count)]
    pub k: u64,
    /// Key sample count.
    #[arg(long, default_value = "1e3", value_parser = parse_count)]
    pub n: u64,
    #[arg(long, default_value = "0.5")]
    pub q: f64,
    /// Squeezing the thresholds are adapted to.
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    pub r: f64,
    #[arg(long, default_value = "2")]
    pub n0: f64,
    #[arg(long, default_value = "1e5", value_parser = parse_count)]
    pub trials: u64,
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    pub alpha_re: f64,
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    pub alpha_im: f64,
    /// Source rotation angle.
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    pub theta: f64,
    /// Source squeezing [default: same as --r].
    #[arg(long, allow_negative_numbers = true)]
    pub source_r: Option<f64>,
    /// Added quadrature variance on both quadratures.
    #[arg(long, default_value = "0")]
    pub excess: f64,
    /// Run the sampling tail-bound check with γ(x) = x instead.
    #[arg(long, conflicts_with = "batch")]
    pub tail_check: bool,
    /// CSV of configurations, one run per row; columns k, q, r, n0, trials and
    /// optionally n, alpha_re, alpha_im, theta, source_r, excess. Row i uses seed + i.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    /// U1 outcome probability for --tail-check.
    #[arg(long, default_value = "0.02")]
    pub p_u: f64,
    /// V1 outcome probability for --tail-check.
    #[arg(long, default_value = "0.02")]
    pub p_v: f64,
    /// Deviation for --tail-check.
    #[arg(long, default_value = "0.3")]
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// n0 against r in [-r_max, r_max] at k=2e7, n=2e9, q=0.4.
    Fig3a,
    /// n0 against q in [0.01, 0.99] at k=2e7, n=2e9, r=0.05.
    Fig3b,
}

#[derive(Args, Debug, Serialize)]
pub struct FiguresArgs {
    #[arg(value_enum)]
    pub preset: Preset,
    /// Grid points [default: 41 for fig3a, 99 for fig3b].
    #[arg(long, value_parser = parse_dim)]
    pub grid: Option<usize>,
    /// Half-width of the squeezing range for fig3a.
    #[arg(long, default_value = "1")]
    pub r_max: f64,
    /// Also write an SVG plot here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct RegionsArgs {
    #[arg(long, default_value = "4")]
    pub n0: f64,
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    pub r: f64,
    /// Points per curve.
    #[arg(long, default_value = "200", value_parser = parse_dim)]
    pub samples: usize,
}

/// Nonnegative integer, scientific notation allowed (`1e5`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15) {
        return Err(format!("expected a nonnegative integer, got {s}"));
    }
    Ok(v as u64)
}

fn parse_dim(s: &str) -> Result<usize, String> {
    parse_count(s).map(|v| v as usize)
}

/// Failure after results were produced, e.g. a certification that did not pass.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

/// Command line rejected by the parser; clap has already printed why.
#[derive(Debug)]
struct Usage;

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invalid command line")
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NumericalFailure>().is_some() {
        return 2;
    }
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Truncation { .. } | CoreError::NumericalConsistency(_) | CoreError::Guard(_)) => 2,
        _ => 1,
    }
}

fn run(mut argv: Vec<String>) -> anyhow::Result<()> {
    if let Some(path) = config::take_config_flag(&mut argv)? {
        let file = config::load(std::path::Path::new(&path))?;
        config::merge(&mut argv, &file);
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            e.print()?;
            return Ok(());
        }
        Err(e) => {
            let _ = e.print();
            return Err(Usage.into());
        }
    };
    commands::dispatch(&cli)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !err.is::<Usage>() {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e5"), Ok(100_000));
        assert_eq!(parse_count("42"), Ok(42));
        assert!(parse_count("2.5").is_err());
        assert!(parse_count("-1").is_err());
        assert!(parse_count("abc").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_squeezing_parses() {
        let cli = Cli::try_parse_from(["finetti", "threshold", "--r", "-0.3", "--k", "1e6"]).unwrap();
        match cli.command {
            Command::Threshold(a) => {
                assert_eq!(a.point.r, -0.3);
                assert_eq!(a.point.k, 1e6);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let e = anyhow::Error::new(CoreError::Truncation {
            message: "x".into(),
            suggested_dim: 9,
        });
        assert_eq!(exit_code(&e), 2);
        assert_eq!(
            exit_code(&anyhow::Error::new(CoreError::InvalidParameter("q".into()))),
            1
        );
        assert_eq!(exit_code(&anyhow::Error::new(CoreError::Infeasible("no".into()))), 1);
        assert_eq!(exit_code(&anyhow::Error::new(NumericalFailure("ii".into()))), 2);
        assert_eq!(exit_code(&Usage.into()), 1);
    }
}
