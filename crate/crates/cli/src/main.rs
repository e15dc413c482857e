use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wdch_cli::config::Experiment;
use wdch_cli::{bench, parse_config, RunConfig};

#[derive(Parser)]
#[command(name = "wdch", version, about = "Weakly dissipative Camassa-Holm experiments")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized test data (kernel-bench); the PDE itself is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Simulate,
    Decay,
    Smalldata,
    Lifespan,
    Admissibility,
    Inflation,
    GnEstimate,
    KernelBench {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 2048)]
        check_points: usize,
        #[arg(long, default_value_t = 65536)]
        timing_points: usize,
    },
    /// Run the configured experiment once per entry of sweep.amplitudes.
    Sweep,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let path = cli.config.as_ref().ok_or("--config <path> is required for this subcommand")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn experiment_for(cfg: &RunConfig, name: &str) -> Result<Experiment, String> {
    match &cfg.experiment {
        Some(e) if e.name() == name => Ok(e.clone()),
        Some(e) => Err(format!("config declares experiment {:?} but the subcommand asks for {name:?}", e.name())),
        None => Experiment::default_for(name).ok_or_else(|| format!("the {name} experiment needs an [experiment] table")),
    }
}

fn real_main(cli: Cli) -> Result<i32, String> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let name = match &cli.command {
        Command::KernelBench {
            instances,
            check_points,
            timing_points,
        } => {
            let r = bench::kernel_bench(cli.seed, *instances, *check_points, *timing_points).map_err(|e| e.to_string())?;
            let text = serde_json::to_string_pretty(&r).map_err(|e| e.to_string())?;
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                std::fs::write(dir.join("kernel_bench.json"), &text).map_err(|e| e.to_string())?;
            }
            println!("{text}");
            return Ok(0);
        }
        Command::Sweep => {
            let cfg = load(&cli)?;
            let exp = cfg.experiment.clone().unwrap_or(Experiment::Simulate);
            let entries = wdch_cli::sweep(&cfg, &exp).map_err(|e| e.to_string())?;
            for e in &entries {
                println!("{} amp={} exit={} {}", e.dir.display(), e.amplitude, e.exit_code, e.error.as_deref().unwrap_or(""));
            }
            println!("index: {}", cfg.output.dir.join("index.csv").display());
            return Ok(if entries.iter().any(|e| e.exit_code == 1) { 1 } else { 0 });
        }
        Command::Simulate => "simulate",
        Command::Decay => "decay",
        Command::Smalldata => "smalldata",
        Command::Lifespan => "lifespan",
        Command::Admissibility => "admissibility",
        Command::Inflation => "inflation",
        Command::GnEstimate => "gn",
    };
    let cfg = load(&cli)?;
    let exp = experiment_for(&cfg, name)?;
    let result = wdch_cli::run(&cfg, &exp).map_err(|e| e.to_string())?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    for r in &result.runs {
        println!("{:?}: {:?} at t = {:.6}", r.solver, r.status, r.t_final);
    }
    println!("report: {}", cfg.output.dir.join("report.json").display());
    Ok(result.exit_code)
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
