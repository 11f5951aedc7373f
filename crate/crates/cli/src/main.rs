use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use treewalk::config::{ExperimentConfig, ExperimentKind, KEYS};
use treewalk::runner::{run, RunOptions};
use treewalk::verify::{report, run_checks, Fault};
use treewalk::Family;

#[derive(Parser)]
#[command(name = "treewalk", version = treewalk::output::version(), about = "Quantum walks on disordered glued trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result bundle.
    ///
    /// Usage: treewalk run <KIND> [--config FILE] [--workers N] [--out DIR] [--KEY VALUE]...
    /// Kinds: spectrum, ipr-phase, ipr-center, dynamics, local-decay,
    /// max-depth, scattering, classical. Every config key is accepted as a
    /// flag, e.g. `--d 8 --delta-e 0.15 --widths 0:30:2 --seed 7`.
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "ARGS")]
        args: Vec<String>,
    },
    /// Run the built-in oracle checks.
    Verify {
        /// Corrupt the graph before checking (confirms checks can fail).
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Print the edge list of a graph.
    Graph {
        #[arg(long, value_enum, default_value = "sgt")]
        family: FamilyArg,
        #[arg(long, short)]
        d: usize,
        /// Master seed for random gluings.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Realization index for random gluings.
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    CorruptAdjacency,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Sgt,
    MgtRegular,
    MgtRandom,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Sgt => Family::Sgt,
            FamilyArg::MgtRegular => Family::MgtRegular,
            FamilyArg::MgtRandom => Family::MgtRandom,
        }
    }
}

struct RunArgs {
    config: ExperimentConfig,
    options: RunOptions,
}

fn parse_run_args(args: &[String]) -> anyhow::Result<RunArgs> {
    let mut rest = args;
    let mut kind = None;
    if let Some(first) = rest.first().filter(|a| !a.starts_with('-')) {
        kind = Some(first.parse::<ExperimentKind>()?);
        rest = &rest[1..];
    }
    let mut config_file = None;
    let mut options = RunOptions::default();
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        let arg = &rest[i];
        let Some(flag) = arg.strip_prefix("--") else {
            bail!("unexpected argument `{arg}`; options look like `--key value`");
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = rest
                    .get(i + 1)
                    .with_context(|| format!("missing value for `--{flag}`"))?;
                i += 1;
                (flag.to_string(), v.clone())
            }
        };
        i += 1;
        match key.as_str() {
            "config" => config_file = Some(PathBuf::from(value)),
            "workers" => {
                let n: usize = value.parse().with_context(|| format!("invalid --workers `{value}`"))?;
                options.workers = Some(n);
            }
            "out" => options.output = Some(PathBuf::from(value)),
            _ => {
                if !KEYS.contains(&key.replace('-', "_").as_str()) {
                    bail!("unknown option `--{key}`; config keys are: {}", KEYS.join(", "));
                }
                overrides.push((key, value));
            }
        }
    }
    let mut config = match config_file {
        Some(path) => ExperimentConfig::load(&path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = kind {
        if config.kind.is_some_and(|k| k != kind) {
            bail!("kind `{kind}` on the command line conflicts with the config file");
        }
        config.kind = Some(kind);
    }
    let config = config.with_overrides(overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    Ok(RunArgs { config, options })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run { args } => {
            let RunArgs { config, options } = parse_run_args(&args)?;
            let report = run(&config, &options)?;
            log::info!("wall time {:.2}s", report.manifest.wall_time_seconds);
            println!("{}", report.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { inject_fault } => {
            let fault = inject_fault.map(|FaultArg::CorruptAdjacency| Fault::CorruptAdjacency);
            let checks = run_checks(fault)?;
            print!("{}", report(&checks));
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Graph {
            family,
            d,
            seed,
            index,
            out,
        } => {
            let g = Family::from(family).realize(d, seed, index)?;
            let text = g.to_edge_list();
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
