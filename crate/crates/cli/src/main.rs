use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scalpemd::transport::{MassMode, Metric};
use scalpemd_cli::compare::{cohort_comparisons, compare, custom_comparisons, read_map, write_table};
use scalpemd_cli::output::write_text;
use scalpemd_cli::{
    cmd_prepare, cmd_report, cmd_select_channels, cmd_train_eval, render_svg, ChannelConfig, CliError,
    ExperimentConfig, ModelSpec, Overrides,
};

const DEFAULT_CONFIG: &str = "scalpemd.toml";

#[derive(Parser)]
#[command(name = "scalpemd", version, about = "EEG channel relevance experiments with Earth Mover's Distance")]
struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Split seed; overrides `split.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Ground metric; overrides `emd.metric`.
    #[arg(long, global = true)]
    metric: Option<Metric>,
    /// Mass handling; overrides `emd.mass`.
    #[arg(long, global = true)]
    mass: Option<MassMode>,
    /// Scale model maps to the baseline total before comparing.
    #[arg(long, global = true)]
    rebalance: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read, band-pass and epoch every subject into the cache.
    Prepare,
    /// Train and evaluate each (model, channel config) pair.
    TrainEval(TrainEvalArgs),
    /// Rank channels per subject and build cohort maps.
    SelectChannels,
    /// Compare relevance maps with the motor-imagery baseline.
    Emd(EmdArgs),
    /// Render a map as SVG.
    Plot(PlotArgs),
    /// Tables, Mean±SD footers and p-values from train-eval results.
    Report,
}

#[derive(Args)]
struct TrainEvalArgs {
    /// Restrict to these models (repeatable).
    #[arg(long = "model")]
    models: Vec<ModelSpec>,
    /// Restrict to these channel configs (repeatable).
    #[arg(long = "channel-config")]
    configs: Vec<ChannelConfig>,
}

#[derive(Args)]
struct EmdArgs {
    /// `NAME=FILE` map to compare (repeatable); without any, the cohort
    /// maps from select-channels are used.
    #[arg(long = "map", value_parser = parse_named_map)]
    maps: Vec<(String, PathBuf)>,
    /// Baseline map file for `--map` comparisons.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Directory for emd.json and emd.csv; defaults to `<output_dir>/emd`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Map CSV.
    map: PathBuf,
    /// Output file; the map path with an `.svg` extension by default.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    title: Option<String>,
}

fn parse_named_map(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=FILE, got {s:?}")),
    }
}

/// The file named by `--config`, else `scalpemd.toml` when present; with
/// `required = false` a missing default yields built-in defaults.
fn load_config(cli: &Cli, required: bool) -> Result<ExperimentConfig, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        metric: cli.metric,
        mass: cli.mass,
        rebalance: cli.rebalance,
    };
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if Path::new(DEFAULT_CONFIG).exists() => ExperimentConfig::load(Path::new(DEFAULT_CONFIG))?,
        None if required => {
            return Err(CliError::Config(format!("no --config given and {DEFAULT_CONFIG} not found")));
        }
        None => ExperimentConfig::default(),
    };
    cfg.apply(overrides);
    Ok(cfg)
}

fn print_json<S: serde::Serialize>(value: &S) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Prepare => {
            let summary = cmd_prepare(&load_config(&cli, true)?)?;
            print_json(&summary)
        }
        Command::TrainEval(args) => {
            let cfg = load_config(&cli, true)?;
            let reports = cmd_train_eval(&cfg, &args.models, &args.configs)?;
            let brief: Vec<_> = reports
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "model": r.model,
                        "channel_config": r.channel_config,
                        "summary": r.summary,
                        "failed": r.failed,
                        "missing": r.missing,
                    })
                })
                .collect();
            print_json(&brief)
        }
        Command::SelectChannels => {
            let cohorts = cmd_select_channels(&load_config(&cli, true)?)?;
            let brief: Vec<_> = cohorts
                .iter()
                .map(|c| serde_json::json!({"model": c.model, "top_channels": c.top_channels}))
                .collect();
            print_json(&brief)
        }
        Command::Emd(args) => {
            let cfg = load_config(&cli, args.maps.is_empty())?;
            let layout = cfg.layout()?;
            let comparisons = if args.maps.is_empty() {
                if args.baseline.is_some() {
                    return Err(CliError::Usage("--baseline applies to --map comparisons only".into()));
                }
                cohort_comparisons(&cfg, &layout)?
            } else {
                custom_comparisons(&args.maps, args.baseline.as_deref(), &layout)?
            };
            let table = compare(comparisons, cfg.emd)?;
            let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.join("emd"));
            write_table(&out, &table)?;
            print_json(&table)
        }
        Command::Plot(args) => {
            let cfg = load_config(&cli, false)?;
            let layout = cfg.layout()?;
            let map = read_map(&args.map)?;
            let svg = render_svg(&map, &layout, args.title.as_deref())?;
            let out = args.out.clone().unwrap_or_else(|| args.map.with_extension("svg"));
            write_text(&out, &svg)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Report => {
            let report = cmd_report(&load_config(&cli, true)?)?;
            print_json(&report.p_values)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
