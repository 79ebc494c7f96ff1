use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfcache_cli::commands::sweep_axes;
use mfcache_cli::{cmd_simulate, cmd_solve, cmd_sweep, presets, CliError, CliResult, ConfigDoc, RunOptions};

#[derive(Parser)]
#[command(name = "mfcache", version, about = "Mean-field-game edge caching: solve, simulate, sweep")]
struct Cli {
    /// Worker threads for solves and replications.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the coupled equilibrium for every content.
    Solve(RunArgs),
    /// Monte-Carlo evaluation of the configured policies.
    Simulate(RunArgs),
    /// Solve and simulate over a grid of parameter values.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Dotted config key, e.g. `radio.sbs_density_per_m2`.
        #[arg(long)]
        key: Option<String>,
        /// Comma-separated values for `--key`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Option<Vec<f64>>,
    },
    /// Built-in experiment presets.
    Presets {
        #[command(subcommand)]
        action: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    /// List preset names and descriptions.
    List,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write full surfaces as `(t, x, Q, value)` CSV.
    #[arg(long)]
    surface_csv: bool,
}

impl RunArgs {
    fn doc(&self) -> CliResult<ConfigDoc> {
        let mut doc = match (&self.config, &self.preset) {
            (Some(path), _) => ConfigDoc::load(path)?,
            (None, Some(name)) => ConfigDoc::preset(name)?,
            (None, None) => return Err(CliError::Config("pass --config or --preset".into())),
        };
        if let Some(seed) = self.seed {
            doc.set_seed(seed)?;
        }
        Ok(doc)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let opts = |args: &RunArgs| RunOptions {
        surface_csv: args.surface_csv,
        jobs: cli.jobs,
    };
    match &cli.command {
        Cmd::Solve(args) => cmd_solve(&args.doc()?, &args.out, &opts(args)),
        Cmd::Simulate(args) => cmd_simulate(&args.doc()?, &args.out, &opts(args)),
        Cmd::Sweep { run, key, values } => {
            let doc = run.doc()?;
            let axes = sweep_axes(&doc, key.as_deref(), values.as_deref())?;
            cmd_sweep(&doc, &run.out, &axes, &opts(run)).map(|_| ())
        }
        Cmd::Presets {
            action: PresetCmd::List,
        } => {
            for name in presets::names() {
                println!("{name}\t{}", presets::describe(name).unwrap_or_default());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
