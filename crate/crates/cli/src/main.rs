//! `mirl`: run, sweep, verify and plot from the command line.
//!
//! Exit status is 0 on success, 1 on a runtime failure or a failed check,
//! and 2 on a usage error.

use std::fs::File;
use std::io::BufWriter;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mirl_core::harness::{
    aggregate_series, emit_plot, read_csv, run_sweep, run_trial_with, write_best_csv, write_csv,
    GridSpec, Metric, PlotOptions, RunConfig, SweepOutcome, TraceWriter,
};
use mirl_core::verify::{render_table, run_groups, write_report, Group, VerifySettings};

#[derive(Debug, Parser)]
#[command(
    name = "mirl",
    version,
    about = "Tabular Q-learning with missing state components"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every seed of one config file.
    Run {
        config: PathBuf,
        /// Run this single seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output_dir`, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Also write a per-step trace for each seed.
        #[arg(long)]
        trace: bool,
    },
    /// Run a grid file, or every `*.toml` run config in a directory.
    Sweep {
        grid: PathBuf,
        /// Run only this seed for every config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Check the estimator theory and print a pass/fail table.
    Verify {
        #[arg(long, value_enum, default_value_t = GroupArg::All)]
        theorem: GroupArg,
        /// Write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Draw an SVG chart from a metrics CSV.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        log: bool,
        #[arg(long, value_enum, default_value_t = MetricArg::Reward)]
        metric: MetricArg,
        /// Defaults to the CSV path with an `.svg` extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GroupArg {
    All,
    A1,
    A2,
    A3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Reward,
    River,
    Path,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Reward => Metric::Reward,
            MetricArg::River => Metric::RiverSteps,
            MetricArg::Path => Metric::PathLength,
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// A command-line mistake that should exit with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        return Err(Usage(format!("{what} {} does not exist", path.display())).into());
    }
    Ok(())
}

fn metric_title(m: Metric) -> &'static str {
    match m {
        Metric::Reward => "mean total reward per episode",
        Metric::RiverSteps => "mean steps in the river per episode",
        Metric::PathLength => "mean path length per episode",
    }
}

/// Reward on a linear axis, river steps and path length on log axes.
fn write_standard_plots(csv: &Path, out_dir: &Path) -> Result<()> {
    let rows = read_csv(csv)?;
    for (metric, file, log) in [
        (Metric::Reward, "reward.svg", false),
        (Metric::RiverSteps, "river_steps.svg", true),
        (Metric::PathLength, "path_length.svg", true),
    ] {
        let series = aggregate_series(&rows, metric);
        if series.iter().all(|s| s.points.is_empty()) {
            continue;
        }
        let opts = PlotOptions {
            title: metric_title(metric).to_string(),
            x_label: "step".into(),
            y_label: format!("cumulative {}", metric_title(metric)),
            log_scale: log,
        };
        emit_plot(&series, &out_dir.join(file), &opts)?;
    }
    Ok(())
}

fn report(outcome: &SweepOutcome, out_dir: &Path, labels: &[String]) -> Result<bool> {
    let metrics = out_dir.join("metrics.csv");
    write_csv(&outcome.results, &metrics)?;
    write_best_csv(&outcome.best, labels, &out_dir.join("best.csv"))?;
    if !outcome.results.is_empty() {
        write_standard_plots(&metrics, out_dir)?;
    }
    for r in &outcome.results {
        println!(
            "{:<28} seed {:>4}  episodes {:>6}  reward {:>10.3}  river {:>8.3}  path {:>8.3}  ({:.2?})",
            r.label,
            r.seed,
            r.summary.episodes,
            r.summary.mean_reward,
            r.summary.mean_river_steps,
            r.summary.mean_path_length,
            r.wall_clock
        );
    }
    if outcome.best.len() > 1 || labels.len() > 1 {
        println!("\nbest per method:");
        for b in &outcome.best {
            println!(
                "  {:<24} {:<28} reward {:.3} ± {:.3}  river {:.3}",
                b.method,
                labels.get(b.config_index).map_or("", String::as_str),
                b.mean_reward,
                b.se_reward,
                b.mean_river_steps
            );
        }
    }
    for f in &outcome.failures {
        eprintln!("trial failed: {} seed {}: {}", f.label, f.seed, f.message);
    }
    println!("wrote {}", out_dir.display());
    Ok(outcome.failures.is_empty())
}

fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: usize,
    trace: bool,
) -> Result<bool> {
    require_file(config, "config")?;
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seeds = Some(vec![s]);
    }
    let out_dir = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if trace {
        for s in cfg.seed_list() {
            let path = out_dir.join(format!("trace_seed{s}.csv"));
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut tw = TraceWriter::new(BufWriter::new(file))?;
            let mut io_err = None;
            run_trial_with(&cfg, s, |ev| match tw.record(ev) {
                Ok(()) => ControlFlow::Continue(()),
                Err(e) => {
                    io_err = Some(e);
                    ControlFlow::Break(())
                }
            })?;
            if let Some(e) = io_err {
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
        }
    }
    let outcome = run_sweep(std::slice::from_ref(&cfg), workers)?;
    report(&outcome, &out_dir, &[cfg.display_label()])
}

fn load_grid(path: &Path) -> Result<Vec<RunConfig>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!(Usage(format!("no .toml configs in {}", path.display())));
        }
        files.iter().map(|f| Ok(RunConfig::load(f)?)).collect()
    } else {
        Ok(GridSpec::load(path)?.expand()?)
    }
}

fn cmd_sweep(grid: &Path, seed: Option<u64>, out: &Path, workers: usize) -> Result<bool> {
    require_file(grid, "grid")?;
    let mut configs = load_grid(grid)?;
    if let Some(s) = seed {
        for c in &mut configs {
            c.seeds = Some(vec![s]);
        }
    }
    let trials: usize = configs.iter().map(|c| c.seed_list().len()).sum();
    eprintln!(
        "{} configs, {trials} trials, {workers} workers",
        configs.len()
    );
    let outcome = run_sweep(&configs, workers)?;
    let labels: Vec<String> = configs.iter().map(RunConfig::display_label).collect();
    report(&outcome, out, &labels)
}

fn cmd_verify(
    theorem: GroupArg,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: usize,
) -> Result<bool> {
    // the global pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build_global();
    let groups: Vec<Group> = match theorem {
        GroupArg::All => Group::ALL.to_vec(),
        GroupArg::A1 => vec![Group::A1],
        GroupArg::A2 => vec![Group::A2],
        GroupArg::A3 => vec![Group::A3],
    };
    let mut settings = VerifySettings::default();
    if let Some(s) = seed {
        settings.seed = s;
    }
    let rows = run_groups(&groups, &settings)?;
    print!("{}", render_table(&rows));
    if let Some(path) = out {
        write_report(&rows, &path)?;
        println!("wrote {}", path.display());
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failed} failed", rows.len());
    Ok(failed == 0)
}

fn cmd_plot(
    csv: &Path,
    log: bool,
    metric: MetricArg,
    out: Option<PathBuf>,
    title: Option<String>,
) -> Result<bool> {
    require_file(csv, "csv")?;
    let metric = Metric::from(metric);
    let rows = read_csv(csv)?;
    let series = aggregate_series(&rows, metric);
    let out = out.unwrap_or_else(|| csv.with_extension("svg"));
    let opts = PlotOptions {
        title: title.unwrap_or_else(|| metric_title(metric).to_string()),
        x_label: "step".into(),
        y_label: metric.column().into(),
        log_scale: log,
    };
    emit_plot(&series, &out, &opts)?;
    println!("wrote {} ({} series)", out.display(), series.len());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            workers,
            trace,
        } => cmd_run(&config, seed, out, workers, trace),
        Command::Sweep {
            grid,
            seed,
            out,
            workers,
        } => cmd_sweep(&grid, seed, &out, workers),
        Command::Verify {
            theorem,
            out,
            seed,
            workers,
        } => cmd_verify(theorem, out, seed, workers),
        Command::Plot {
            csv,
            log,
            metric,
            out,
            title,
        } => cmd_plot(&csv, log, metric, out, title),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}\n");
            eprintln!(
                "{}",
                <Cli as clap::CommandFactory>::command().render_usage()
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
