//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error, 3 a theory check
//! flagged a violation.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dist::DistributionSpec;
use crate::eq::analyze_with_profiles;
use crate::game::{Game, GameShape};
use crate::generate::{CorrelationMatrix, Generator, SeedSpec};
use crate::graph::{is_alpha_expander, is_well_connected, InteractionGraph};
use crate::mc::{estimate_share, fig1_csv, fig1_suite_with, shares_csv, thm_check, ExperimentConfig};
use crate::theory::{lemma3_table, theory_report};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "epsgames", version, about = "Random games and their pure equilibria")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs (0 = all cores). Output does not
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one random game and write it as JSON.
    Gen(GenArgs),
    /// Count pure Nash, ε- and ε*-equilibria of a stored game.
    Analyze(AnalyzeArgs),
    /// Run a Monte Carlo experiment described by a JSON config.
    Share(ShareArgs),
    /// Reproduce both panels of the reference share figure as CSV.
    Fig1(Fig1Args),
    /// Print the Poisson parameters and error bounds for a shape.
    Bounds(BoundsArgs),
    /// Print the `k·q` versus `exp(ε·h)` convergence table.
    Lemma3(Lemma3Args),
    /// Check vertex expansion of an interaction graph.
    Expander(ExpanderArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Action counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    shape: Vec<usize>,
    #[arg(long, default_value = "uniform(0,1)")]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Equicorrelated Gaussian copula with this correlation.
    #[arg(long, conflicts_with = "graph")]
    rho: Option<f64>,
    /// Network game on this interaction graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Also list the qualifying profiles.
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Args)]
pub struct ShareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's replication count.
    #[arg(long)]
    replications: Option<u64>,
    /// Compare against the theoretical bounds; exit 3 on a violation.
    #[arg(long)]
    check: bool,
    /// Count every equilibrium instead of stopping at the first.
    #[arg(long)]
    full_counts: bool,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = crate::mc::DEFAULT_REPLICATIONS)]
    replications: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    shape: Vec<usize>,
    #[arg(long, default_value = "uniform(0,1)")]
    dist: DistributionSpec,
    #[arg(long)]
    epsilon: f64,
}

#[derive(Debug, Args)]
pub struct Lemma3Args {
    #[arg(long)]
    dist: DistributionSpec,
    #[arg(long)]
    epsilon: f64,
    /// Largest k; accepts forms like `1e5`.
    #[arg(long, default_value = "1e5", value_parser = parse_count)]
    kmax: usize,
    /// Add a column with the hazard taken at the right end of the interval.
    #[arg(long)]
    right: bool,
}

#[derive(Debug, Args)]
pub struct ExpanderArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Expansion factor α.
    #[arg(long, required_unless_present = "c", conflicts_with = "c")]
    alpha: Option<f64>,
    /// Test for a (c·ln n)-expander.
    #[arg(long)]
    c: Option<f64>,
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 1.0 && v.fract() == 0.0 && v <= usize::MAX as f64 => Ok(v as usize),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

/// Integral values print without a fractional part.
fn json_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn write_output(path: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parse `argv` (including the program name) and run the command.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let threads = cli.threads;
    match cli.command {
        Command::Gen(args) => {
            let shape = GameShape::new(args.shape)?;
            let seed = SeedSpec::new(args.seed);
            let gen = match (args.rho, &args.graph) {
                (Some(rho), None) => {
                    let delta = CorrelationMatrix::equicorrelated(shape.num_agents(), rho)?;
                    Generator::copula(shape, args.dist, seed, delta)?
                }
                (None, Some(path)) => {
                    let graph = InteractionGraph::parse(&std::fs::read_to_string(path)?)?;
                    Generator::network(shape, args.dist, seed, &graph)?
                }
                _ => Generator::iid(shape, args.dist, seed),
            };
            write_output(args.out.as_ref(), &gen.generate(args.index).to_json(), stdout)?;
        }
        Command::Analyze(args) => {
            let game = Game::from_json(&std::fs::read_to_string(&args.game)?)?;
            let report = analyze_with_profiles(&game, args.epsilon)?;
            let mut out = format!(
                "{{\"epsilon\":{},\"nash\":{},\"eps\":{},\"eps_star\":{}",
                json_number(report.epsilon),
                report.count_nash,
                report.count_eps,
                report.count_eps_star
            );
            if args.list {
                let lists = [
                    ("nash_profiles", &report.nash_profiles),
                    ("eps_profiles", &report.eps_profiles),
                    ("eps_star_profiles", &report.eps_star_profiles),
                ];
                for (name, list) in lists {
                    let decoded = list
                        .as_deref()
                        .unwrap_or_default()
                        .iter()
                        .map(|&flat| game.shape().decode(flat))
                        .collect::<Result<Vec<_>>>()?;
                    write!(out, ",\"{name}\":{}", serde_json::to_string(&decoded)?).unwrap();
                }
            }
            out.push_str("}\n");
            stdout.write_all(out.as_bytes())?;
        }
        Command::Share(args) => {
            let mut config = ExperimentConfig::from_file(&args.config)?;
            if let Some(seed) = args.seed {
                config.master_seed = seed;
            }
            if let Some(r) = args.replications {
                config.replications = r;
            }
            config.full_counts |= args.full_counts;
            config.validate()?;
            let estimates = estimate_share(&config, threads)?;
            stdout.write_all(shares_csv(&estimates).as_bytes())?;
            if args.check {
                let verdicts = thm_check(&config, threads)?;
                let mut violated = false;
                for v in &verdicts {
                    writeln!(stderr, "{}", serde_json::to_string(v)?)?;
                    violated |= v.violation();
                }
                if violated {
                    writeln!(stderr, "theory check: violation")?;
                    return Ok(EXIT_VIOLATION);
                }
            }
        }
        Command::Fig1(args) => {
            if args.replications == 0 {
                return Err(Error::InvalidConfig("replications must be at least 1".into()));
            }
            let rows = fig1_suite_with(args.seed, args.replications, threads)?;
            write_output(args.out.as_ref(), &fig1_csv(&rows), stdout)?;
        }
        Command::Bounds(args) => {
            let report = theory_report(&args.shape, &args.dist, args.epsilon)?;
            writeln!(stdout, "{}", serde_json::to_string(&report)?)?;
        }
        Command::Lemma3(args) => {
            let rows = lemma3_table(&args.dist, args.epsilon, args.kmax)?;
            let mut out = String::from("k,lhs,rhs,ratio");
            if args.right {
                out.push_str(",rhs_right");
            }
            out.push('\n');
            for r in rows {
                write!(out, "{},{},{},{}", r.k, r.lhs, r.rhs, r.ratio()).unwrap();
                if args.right {
                    write!(out, ",{}", r.rhs_right).unwrap();
                }
                out.push('\n');
            }
            stdout.write_all(out.as_bytes())?;
        }
        Command::Expander(args) => {
            let graph = InteractionGraph::parse(&std::fs::read_to_string(&args.graph)?)?;
            let verdict = match (args.alpha, args.c) {
                (Some(alpha), _) => is_alpha_expander(&graph, alpha)?,
                (None, Some(c)) => is_well_connected(&graph, c)?,
                (None, None) => unreachable!("clap enforces one of the two"),
            };
            writeln!(stdout, "{verdict}")?;
        }
    }
    Ok(EXIT_OK)
}
