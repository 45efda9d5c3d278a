use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use segprof::clustering::Method;
use segprof::pipeline::{demo, export_plot_data, run_pipeline, run_stage, PipelineConfig, PlotKind, Stage};
use segprof::Error;

/// Segment profiling of mixed-type records.
#[derive(Parser)]
#[command(name = "segprof", version, about)]
struct Cli {
    /// Log progress (-v) or debugging detail (-vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, clean and compute ratios.
    Clean(StageArgs),
    /// Code ratios into ordinal categories.
    Bin(StageArgs),
    /// Fit homogeneity analysis to the coded matrix.
    Scale(StageArgs),
    /// Fit every (method, k) partition of the object scores.
    Cluster(StageArgs),
    /// Score partitions by silhouette width and pick the best.
    Select(StageArgs),
    /// Profile the selected partition.
    Profile(StageArgs),
    /// Run all stages and write a manifest.
    Pipeline(StageArgs),
    /// Write plot-ready tables for a finished run.
    ExportPlot(ExportArgs),
    /// Generate the synthetic three-segment dataset and its config.
    DemoData(DemoArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline config file (TOML).
    #[arg(short, long)]
    config: PathBuf,

    /// Run directory; defaults to `output.dir` from the config.
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Base seed; defaults to the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Clustering methods, comma separated.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,

    #[arg(long)]
    k_min: Option<usize>,

    #[arg(long)]
    k_max: Option<usize>,

    /// Override any config value, e.g. `--set scaling.restarts=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ExportArgs {
    /// Run directory of a finished run.
    #[arg(short, long)]
    run: PathBuf,

    /// boxplot, joint-map, silhouette-curve or all.
    #[arg(short, long, default_value = "all")]
    figure: String,
}

#[derive(Args)]
struct DemoArgs {
    /// Directory receiving demo.csv and demo.toml.
    #[arg(short, long, default_value = "data")]
    out: PathBuf,

    #[arg(long, default_value_t = demo::DemoOptions::default().records)]
    records: usize,

    #[arg(long, default_value_t = demo::DemoOptions::default().seed)]
    seed: u64,

    /// Log-scale spread of ratios around their segment medians.
    #[arg(long, default_value_t = demo::RATIO_SPREAD)]
    spread: f64,
}

impl StageArgs {
    fn load(&self) -> Result<(PipelineConfig, PathBuf)> {
        let mut sets = self.overrides.clone();
        if let Some(seed) = self.seed {
            sets.push(format!("seed={seed}"));
        }
        if let Some(methods) = &self.methods {
            let list: Vec<String> = methods.iter().map(|m| format!("\"{m}\"")).collect();
            sets.push(format!("sweep.methods=[{}]", list.join(",")));
        }
        if let Some(k) = self.k_min {
            sets.push(format!("sweep.k_min={k}"));
        }
        if let Some(k) = self.k_max {
            sets.push(format!("sweep.k_max={k}"));
        }
        let cfg = PipelineConfig::load(&self.config, &sets)?;
        let dir = match &self.out {
            Some(out) => out.clone(),
            None => cfg.output_dir(),
        };
        Ok((cfg, dir))
    }
}

fn run(cli: Cli) -> Result<()> {
    let stage = |stage: Stage, args: &StageArgs| -> Result<()> {
        let (cfg, dir) = args.load()?;
        run_stage(stage, &cfg, &dir)?;
        println!("{stage}: wrote artifacts to {}", dir.display());
        Ok(())
    };
    match &cli.command {
        Command::Clean(a) => stage(Stage::Clean, a),
        Command::Bin(a) => stage(Stage::Bin, a),
        Command::Scale(a) => stage(Stage::Scale, a),
        Command::Cluster(a) => stage(Stage::Cluster, a),
        Command::Select(a) => stage(Stage::Select, a),
        Command::Profile(a) => stage(Stage::Profile, a),
        Command::Pipeline(a) => {
            let (cfg, dir) = a.load()?;
            let manifest = run_pipeline(&cfg, &dir)?;
            println!("selected {} with k = {}", manifest.chosen_method, manifest.chosen_k);
            for t in &manifest.timings {
                println!("  {:<8} {:>8.2}s", t.stage, t.seconds);
            }
            println!("run written to {}", dir.display());
            Ok(())
        }
        Command::ExportPlot(a) => {
            let kinds = if a.figure == "all" { PlotKind::ALL.to_vec() } else { vec![a.figure.parse()?] };
            for kind in kinds {
                for path in export_plot_data(&a.run, kind)? {
                    println!("{}", path.display());
                }
            }
            Ok(())
        }
        Command::DemoData(a) => write_demo(a),
    }
}

fn write_demo(a: &DemoArgs) -> Result<()> {
    let opts = demo::DemoOptions { records: a.records, seed: a.seed, ratio_spread: a.spread, ..Default::default() };
    let (csv, _) = demo::generate(&opts)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let data = a.out.join("demo.csv");
    let config = a.out.join("demo.toml");
    write(&data, csv.as_bytes())?;
    write(&config, demo::config_toml("demo.csv").as_bytes())?;
    println!("{}\n{}", data.display(), config.display());
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(e.downcast_ref::<Error>(), Some(Error::Config(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
