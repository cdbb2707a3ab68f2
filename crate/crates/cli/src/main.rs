use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aqec::experiments::{
    fit_rate, load_config, output::read_column, run_scenario, run_sweep_output, write_output,
    FitForm, FitWindow, ScenarioConfig, ScenarioId, ScenarioOutput,
};
use aqec::models::validate_params;
use aqec::par::configure_threads_from_env;
use clap::{Args, Parser, Subcommand};

/// Autonomous bit-flip correction simulator.
#[derive(Parser, Debug)]
#[command(name = "aqec", version, about)]
struct Cli {
    /// Print progress and summary metrics to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a named scenario and write its CSV and metadata files.
    Run(ConfigArgs),
    /// Sweep `sweep_key` over `sweep_values` for the configured model.
    Sweep(ConfigArgs),
    /// Fit an exponential to one column of a curve CSV.
    Fit(FitArgs),
    /// Print the parameter validity report (never fails on violated checks).
    Validate(ConfigArgs),
    /// List the registered scenarios.
    List,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    #[arg(long)]
    scenario: Option<String>,

    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config field, `dotted.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    csv: PathBuf,

    #[arg(long, default_value = "fidelity_compensated")]
    column: String,

    /// `rise` for 1 - A exp(-rate t), `decay` for A exp(-rate t).
    #[arg(long, default_value = "rise")]
    form: String,

    #[arg(long, default_value_t = 0.1)]
    lo: f64,

    #[arg(long, default_value_t = 0.9)]
    hi: f64,
}

fn resolve(args: &ConfigArgs) -> aqec::Result<ScenarioConfig> {
    let id = args
        .scenario
        .as_deref()
        .map(str::parse::<ScenarioId>)
        .transpose()?;
    load_config(id, args.config.as_deref(), &args.overrides)
}

fn report(out: &ScenarioOutput, files: &[PathBuf], verbose: u8) {
    for f in files {
        println!("{}", f.display());
    }
    if verbose == 0 {
        return;
    }
    eprintln!("{}: {:.2} s", out.scenario(), out.wall_time_s);
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for (k, v) in &out.metrics {
        eprintln!("  {k} = {v:.6}");
    }
}

fn write(out: &ScenarioOutput, dir: &Path, verbose: u8) -> aqec::Result<()> {
    let files = write_output(out, dir)?;
    report(out, &files, verbose);
    Ok(())
}

fn dispatch(cli: Cli) -> aqec::Result<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Run(args) => {
            let cfg = resolve(&args)?;
            if verbose > 0 {
                eprintln!("running {} ({})", cfg.scenario, cfg.scenario.anchor());
            }
            write(&run_scenario(&cfg)?, &args.out, verbose)
        }
        Command::Sweep(args) => {
            let cfg = resolve(&args)?;
            write(&run_sweep_output(&cfg)?, &args.out, verbose)
        }
        Command::Validate(args) => {
            let cfg = resolve(&args)?;
            let report = validate_params(&cfg.system_params());
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| aqec::Error::Config(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::Fit(args) => {
            let form = match args.form.as_str() {
                "rise" => FitForm::Rise,
                "decay" => FitForm::Decay,
                other => {
                    return Err(aqec::Error::Config(format!(
                        "unknown fit form '{other}' (rise | decay)"
                    )))
                }
            };
            let text = std::fs::read_to_string(&args.csv).map_err(|e| {
                aqec::Error::Config(format!("cannot read {}: {e}", args.csv.display()))
            })?;
            let t = read_column(&text, "t")?;
            let y = read_column(&text, &args.column)?;
            let window = FitWindow {
                lo: args.lo,
                hi: args.hi,
            };
            let fit = fit_rate(&t, &y, form, window)?;
            let text = serde_json::to_string_pretty(&fit)
                .map_err(|e| aqec::Error::Config(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::List => {
            for id in ScenarioId::ALL {
                println!("{}\t{}", id.name(), id.anchor());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = configure_threads_from_env() {
        if cli.verbose > 0 {
            eprintln!("worker threads: {n}");
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_runtime() { 1 } else { 2 })
        }
    }
}
