//! Command line front end. Every subcommand reads a TOML problem spec and
//! writes one output file; exit codes separate parse failures (2), invalid
//! problems (3), and numerics that did not settle (4).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qqland::cli::{
    apply_overrides, ensure_task, parse_grid_arg, parse_spec, run, run_sweep_levels, CliError,
    Task,
};
use qqland::landscape::Sense;

#[derive(Parser)]
#[command(
    name = "qqland",
    version,
    about = "Control landscapes over controller states of a coupled quantum system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attainable objective range at one duration
    Bounds(CommonArgs),
    /// Globally optimal controller state with its degenerate eigenspace
    Optimal(CommonArgs),
    /// Objective bounds across a duration grid, as CSV
    Sweep(SweepArgs),
    /// Optimize a joint input with the A marginal pinned
    Entangled(CommonArgs),
    /// Run the seeded property battery for the spec
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem spec file (TOML)
    #[arg(long)]
    spec: PathBuf,
    /// Output file (JSON, or CSV for sweeps)
    #[arg(long)]
    out: PathBuf,
    /// Override the spec's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the duration grid, as tStart:tEnd:steps
    #[arg(long)]
    grid: Option<String>,
    /// Override the optimization direction
    #[arg(long, value_enum)]
    sense: Option<SenseArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Field truncation sizes for a combined long-form sweep, e.g. 4,8,16
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SenseArg {
    Max,
    Min,
}

impl From<SenseArg> for Sense {
    fn from(arg: SenseArg) -> Self {
        match arg {
            SenseArg::Max => Sense::Maximize,
            SenseArg::Min => Sense::Minimize,
        }
    }
}

fn execute(task: Task, args: &CommonArgs, levels: Option<&[usize]>) -> Result<(), CliError> {
    let mut spec = parse_spec(&args.spec)?;
    ensure_task(&spec, task)?;
    let grid = args.grid.as_deref().map(parse_grid_arg).transpose()?;
    apply_overrides(&mut spec, args.seed, grid, args.sense.map(Sense::from));
    match levels {
        Some(levels) => run_sweep_levels(&spec, levels, &args.out),
        None => run(&spec, &args.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args, levels) = match &cli.command {
        Command::Bounds(args) => (Task::Bounds, args, None),
        Command::Optimal(args) => (Task::Optimal, args, None),
        Command::Sweep(sweep) => (Task::Sweep, &sweep.common, sweep.levels.as_deref()),
        Command::Entangled(args) => (Task::Entangled, args, None),
        Command::Verify(args) => (Task::Verify, args, None),
    };
    match execute(task, args, levels) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
