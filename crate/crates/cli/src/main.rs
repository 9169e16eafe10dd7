use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use spatialvote::{Candidate, Dimension, GeneratorConfig, MetricKind};

mod commands;
mod run;

/// Spatial voting models and survey counterfactuals.
#[derive(Parser, Debug)]
#[command(name = "spatialvote", version, about, propagate_version = true)]
struct Cli {
    /// Master seed. Defaults to a fixed constant, never to entropy.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Require an explicit --seed.
    #[arg(long, global = true)]
    test_mode: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// D's vote share as one or two of its coordinates sweep a grid.
    TheoryCurve(TheoryCurveArgs),
    /// Grid search for D's best position.
    Optimize(OptimizeArgs),
    /// Generate a synthetic survey.
    #[command(after_help = GeneratorConfig::KEY_HELP)]
    Synth(SynthArgs),
    /// Fit the 12 perception regressions and 3 vote-choice logits.
    Fit(FitArgs),
    /// Intercept-shift election simulation.
    Counterfactual(CounterfactualArgs),
    /// Sample an electorate and write it as CSV.
    ExportElectorate(ExportElectorateArgs),
}

/// Comma-separated reals, e.g. `2,1` or `-1,-2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

fn parse_coords(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|x| {
            let v: f64 = x.trim().parse().map_err(|_| format!("`{x}` is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{x}` is not finite"))
            }
        })
        .collect::<Result<_, _>>()
        .map(Coords)
}

impl std::fmt::Display for Coords {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArg {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

fn parse_grid(s: &str) -> Result<GridArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected lo:hi:step, got `{s}`"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number"));
    let g = GridArg { lo: num(lo)?, hi: num(hi)?, step: num(step)? };
    if !(g.lo < g.hi) || !(g.step > 0.0) || !g.hi.is_finite() || !g.lo.is_finite() {
        return Err(format!("grid `{s}` needs lo < hi and step > 0"));
    }
    Ok(g)
}

impl std::fmt::Display for GridArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

/// `lo:hi` per free axis, comma-separated.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds(pub Vec<(f64, f64)>);

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    s.split(',')
        .map(|b| {
            let (lo, hi) = b.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{b}`"))?;
            let lo: f64 = lo.trim().parse().map_err(|_| format!("`{lo}` is not a number"))?;
            let hi: f64 = hi.trim().parse().map_err(|_| format!("`{hi}` is not a number"))?;
            Ok((lo, hi))
        })
        .collect::<Result<_, String>>()
        .map(Bounds)
}

impl std::fmt::Display for Bounds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(lo, hi)| format!("{lo}:{hi}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Args, Debug, Clone)]
pub struct ElectorateArgs {
    /// Named configuration: fig1, fig2, fig3a, fig3b. Explicit flags override it.
    #[arg(long)]
    preset: Option<String>,
    /// Issue-space dimension.
    #[arg(long)]
    dims: Option<usize>,
    /// Common correlation between voter dimensions.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Number of voters to sample.
    #[arg(long)]
    voters: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SpatialArgs {
    #[command(flatten)]
    electorate: ElectorateArgs,
    /// R's position.
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true, required_unless_present = "preset")]
    r_pos: Option<Coords>,
    /// D's position; swept coordinates are overwritten. Defaults to the origin.
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    d_pos: Option<Coords>,
    /// Read voters from a CSV written by export-electorate instead of sampling.
    #[arg(long, conflicts_with_all = ["rho", "voters"])]
    electorate_file: Option<PathBuf>,
    /// squared-euclidean or absolute-value.
    #[arg(long, default_value = "squared-euclidean")]
    metric: MetricKind,
    /// Positive per-dimension weights.
    #[arg(long, value_parser = parse_coords)]
    weights: Option<Coords>,
    /// Additive utility advantage for D.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    valence: f64,
    /// Perception-noise sd, shared or one per dimension.
    #[arg(long, value_parser = parse_coords)]
    sigma: Option<Coords>,
    /// Perception-noise draws per voter (with --sigma).
    #[arg(long, requires = "sigma")]
    draws: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TheoryCurveArgs {
    #[command(flatten)]
    spatial: SpatialArgs,
    /// Sweep grid for D's coordinate.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    grid: Option<GridArg>,
    /// Coordinate swept by --grid.
    #[arg(long)]
    axis: Option<usize>,
    /// Second grid, producing a surface.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    grid2: Option<GridArg>,
    #[arg(long, default_value_t = 1, requires = "grid2")]
    axis2: usize,
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write a JSON summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    spatial: SpatialArgs,
    /// One or two of D's coordinates to optimize.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    free_axes: Vec<usize>,
    /// Inclusive search box per free axis.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Option<Bounds>,
    #[arg(long, default_value_t = 0.1)]
    coarse_step: f64,
    #[arg(long, default_value_t = 2)]
    refine_rounds: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Generator config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one generator key, e.g. `--set undecided_rate=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    sets: Vec<String>,
    /// Respondents per party group as nD,nI,nR.
    #[arg(long)]
    groups: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Survey CSV.
    #[arg(long)]
    survey: PathBuf,
    /// Model file destination.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the coefficient table here (it always goes to stdout).
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CounterfactualArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    survey: PathBuf,
    /// Replace the fitted vote-choice model with a preset (aoas2008-eq31).
    #[arg(long)]
    choice_model: Option<String>,
    /// Candidate to move: bush or kerry.
    #[arg(long)]
    candidate: Candidate,
    /// Dimension for a one-dimensional sweep.
    #[arg(long, conflicts_with_all = ["econ_grid", "soc_grid", "shift"])]
    dim: Option<Dimension>,
    /// Shift grid for a one-dimensional sweep.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, requires = "dim")]
    grid: Option<GridArg>,
    /// Economic shift grid of a two-dimensional sweep.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, requires = "soc_grid", conflicts_with = "shift")]
    econ_grid: Option<GridArg>,
    /// Social shift grid of a two-dimensional sweep.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, requires = "econ_grid")]
    soc_grid: Option<GridArg>,
    /// A single shift as delta_econ,delta_soc.
    #[arg(long, value_parser = parse_coords, allow_hyphen_values = true)]
    shift: Option<Coords>,
    /// Simulated elections per grid point.
    #[arg(long, default_value_t = spatialvote::counterfactual::DEFAULT_DRAWS)]
    draws: usize,
    /// Sweep CSV destination; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// JSON summary destination; defaults to the CSV path with a .json
    /// extension, or stderr.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportElectorateArgs {
    #[command(flatten)]
    electorate: ElectorateArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.test_mode && cli.seed.is_none() {
        Cli::command()
            .error(clap::error::ErrorKind::MissingRequiredArgument, "--test-mode requires --seed")
            .exit();
    }
    let seed = cli.seed.unwrap_or(spatialvote::presets::DEFAULT_SEED);
    let result = match cli.command {
        Command::TheoryCurve(a) => commands::theory_curve(a, seed),
        Command::Optimize(a) => commands::optimize(a, seed),
        Command::Synth(a) => commands::synth(a, seed),
        Command::Fit(a) => commands::fit(a),
        Command::Counterfactual(a) => commands::counterfactual(a, seed),
        Command::ExportElectorate(a) => commands::export_electorate(a, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn value_parsers() {
        assert_eq!(parse_coords("-1,2.5").unwrap(), Coords(vec![-1.0, 2.5]));
        assert!(parse_coords("1,x").is_err());
        assert_eq!(parse_grid("-3:2:0.05").unwrap(), GridArg { lo: -3.0, hi: 2.0, step: 0.05 });
        assert!(parse_grid("2:-3:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert_eq!(parse_bounds("-3:2,0:1").unwrap(), Bounds(vec![(-3.0, 2.0), (0.0, 1.0)]));
        assert_eq!(GridArg { lo: -2.0, hi: 2.0, step: 0.1 }.to_string(), "-2:2:0.1");
    }
}
