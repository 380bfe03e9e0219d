use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use orthospline_cli::config::{parse_raw, resolve, RawConfig};
use orthospline_cli::{run, CliError, Command};

/// Experiments on orthogonal projections onto spline spaces.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 for input
/// errors, 3 for numerical failures.
#[derive(Debug, Parser)]
#[command(name = "orthospline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Spline order (degree + 1), 1..=10
    #[arg(long, visible_alias = "order", global = true)]
    k: Option<usize>,

    /// Partition spec (uniform:N, dyadic:N, geometric:Q:N, random:N[:SEED],
    /// explicit:x0,x1,..., optional @MULT) or a knot file
    #[arg(long, global = true)]
    partition: Option<String>,

    /// Partition family: uniform, dyadic, geometric or random
    #[arg(long, global = true)]
    family: Option<String>,

    /// Ratio of consecutive intervals for the geometric family
    #[arg(long, global = true)]
    ratio: Option<f64>,

    /// Number of knot intervals
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Seed for random partitions and random trials
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Interior knot multiplicity
    #[arg(long, global = true)]
    multiplicity: Option<usize>,

    /// Test function, e.g. sin, x^2, step:0.5, abspow:0:-0.5, runge
    #[arg(long, global = true)]
    function: Option<String>,

    /// Left end of the interval
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,

    /// Right end of the interval
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<f64>,

    /// Cells of the evaluation grid
    #[arg(long, global = true)]
    eval_grid: Option<usize>,

    /// Cells of the maximal-function grid
    #[arg(long, global = true)]
    maximal_grid: Option<usize>,

    /// Cells per axis of the kernel grid
    #[arg(long, global = true)]
    kernel_grid: Option<usize>,

    /// Number of refinement levels
    #[arg(long, global = true)]
    levels: Option<usize>,

    /// Samples per axis in each kernel cell
    #[arg(long, global = true)]
    samples_per_cell: Option<usize>,

    /// Random coefficient vectors for the stability constant
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Quadrature tolerance for moments
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Comma-separated probe points for pointwise errors
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    probes: Option<Vec<f64>>,

    /// Comma-separated evaluation points
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    points: Option<Vec<f64>>,

    /// Comma-separated level-set thresholds
    #[arg(long, global = true, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,

    /// Output directory
    #[arg(long, global = true, env = "ORTHOSPLINE_OUT")]
    out: Option<PathBuf>,
}

impl Cli {
    fn overlay(&self) -> RawConfig {
        RawConfig {
            k: self.k,
            a: self.a,
            b: self.b,
            partition: self.partition.clone(),
            family: self.family.clone(),
            ratio: self.ratio,
            n: self.n,
            multiplicity: self.multiplicity,
            function: self.function.clone(),
            levels: self.levels,
            seed: self.seed,
            eval_grid: self.eval_grid,
            maximal_grid: self.maximal_grid,
            kernel_grid: self.kernel_grid,
            samples_per_cell: self.samples_per_cell,
            trials: self.trials,
            tol: self.tol,
            probes: self.probes.clone(),
            points: self.points.clone(),
            thresholds: self.thresholds.clone(),
            out: self.out.clone(),
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            parse_raw(&text)?
        }
        None => RawConfig::default(),
    };
    let cfg = resolve(base.overlay(cli.overlay()))?;
    let outcome = run(cli.command, &cfg)?;
    for c in outcome.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {:e} (limit {} {:e})", c.name, c.value, c.relation, c.limit);
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
