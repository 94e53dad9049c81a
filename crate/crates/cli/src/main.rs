use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use ris_cellfree::experiment::{
    emit_report, parse_combiner, read_settings, run_experiment, write_settings, ExperimentSpec, Scenario,
};
use ris_cellfree::oracle;

/// Uplink cell-free massive MIMO with RIS-fronted access points.
#[derive(Parser, Debug)]
#[command(name = "ris-cellfree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte Carlo experiment and write CSV outputs.
    Run(RunArgs),
    /// Resolve and check a configuration without running it.
    Validate(CommonArgs),
    /// Run the reference-oracle consistency suite.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Settings file (`key = value` lines).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Scenarios to run (default: all four).
    #[arg(long, value_name = "NAME", num_args = 1..)]
    scenario: Vec<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,
    /// Override the number of network realizations.
    #[arg(long, value_name = "N")]
    setups: Option<usize>,
    /// Override the number of coherence blocks per realization.
    #[arg(long, value_name = "N")]
    blocks: Option<usize>,
    /// `p-mmse` (default) or `mmse`.
    #[arg(long, value_name = "KIND")]
    combiner: Option<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

/// Defaults, then the settings file, then command-line flags.
fn resolve(args: &CommonArgs) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(Default::default());
    if let Some(path) = &args.config {
        let settings = read_settings(path).with_context(|| format!("reading {}", path.display()))?;
        spec.config = settings.config;
        if let Some(s) = settings.scenarios {
            spec.scenarios = s;
        }
        if let Some(c) = settings.combiner {
            spec.combiner = c;
        }
    }
    if let Some(seed) = args.seed {
        spec.config.seed = seed;
    }
    if let Some(n) = args.setups {
        spec.config.mc_setups = n;
    }
    if let Some(n) = args.blocks {
        spec.config.mc_channel_realizations = n;
    }
    if let Some(c) = &args.combiner {
        spec.combiner = parse_combiner(c)?;
    }
    if !args.scenario.is_empty() {
        spec.scenarios = args
            .scenario
            .iter()
            .flat_map(|s| s.split(','))
            .filter(|s| !s.is_empty())
            .map(str::parse::<Scenario>)
            .collect::<Result<_, _>>()?;
    }
    spec.threads = args.threads;
    spec.validate()?;
    Ok(spec)
}

fn run(args: &RunArgs) -> Result<()> {
    let mut spec = resolve(&args.common)?;
    spec.out_dir = Some(args.out.clone());
    let report = run_experiment(&spec)?;
    let files = emit_report(&report, &args.out).with_context(|| format!("writing to {}", args.out.display()))?;
    for s in &report.scenarios {
        println!(
            "{:<14} samples {:>6}  median {:.4}  p10 {:.4}",
            s.scenario.name(),
            s.samples.len(),
            s.median().unwrap_or(f64::NAN),
            s.percentile_10().unwrap_or(f64::NAN)
        );
    }
    info!("manifest written to {}", files.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => resolve(args).map(|spec| {
            print!("{}", write_settings(&spec.config, Some(&spec.scenarios), Some(spec.combiner)));
        }),
        Command::Oracle { seed } => {
            let results = oracle::run_suite(*seed);
            let mut failed = 0;
            for r in &results {
                println!("{} {:<40} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                Err(anyhow::anyhow!("{failed} oracle check(s) failed"))
            } else {
                Ok(())
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
