use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plgrim_core::executive::PlannerKind;
use plgrim_core::harness::config::{MatrixSpec, RunConfig};
use plgrim_core::harness::run::{default_threads, run_csv, run_file_name, run_matrix, run_one};
use plgrim_core::harness::summary::{format_table, read_summary, summarize, write_summary, SummaryRow};

#[derive(Parser)]
#[command(name = "plgrim", version, about = "Coverage planning missions on grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mission from a config file.
    Explore {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_planner)]
        planner: Option<PlannerKind>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run every planner, environment and seed listed in a matrix spec.
    Matrix {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print per-planner medians from a directory holding summary.csv.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    PlannerKind::parse(s).ok_or_else(|| format!("unknown planner `{s}` (expected plgrim, nbv or hfe)"))
}

fn env_name(world: &Path) -> String {
    world.file_stem().and_then(|s| s.to_str()).unwrap_or("world").to_string()
}

fn explore(config: &Path, seed: Option<u64>, planner: Option<PlannerKind>, out: &Path) -> Result<bool, String> {
    let mut rc = RunConfig::load(config).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        rc.seed = s;
    }
    if let Some(p) = planner {
        rc.mission.planner = p;
    }
    let env = env_name(&rc.world);
    let outcome = run_one(&rc.world, &rc.mission, rc.seed)?;
    let row = SummaryRow::from_outcome(rc.mission.planner.name(), &env, rc.seed, rc.mission.step_budget, &outcome);
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let csv_path = out.join(run_file_name(&env, rc.mission.planner, rc.seed));
    fs::write(&csv_path, run_csv(&outcome.rows)).map_err(|e| e.to_string())?;
    let file = fs::File::create(out.join("summary.csv")).map_err(|e| e.to_string())?;
    write_summary(file, std::slice::from_ref(&row)).map_err(|e| e.to_string())?;
    println!(
        "{} {} seed {}: {} after {} steps, coverage {:.4}, frontiers {}, global nodes {}",
        env,
        rc.mission.planner,
        rc.seed,
        row.status,
        outcome.steps,
        outcome.coverage_fraction,
        outcome.frontier_count,
        outcome.global_nodes
    );
    if !row.diagnostic.is_empty() {
        eprintln!("abort: {}", row.diagnostic);
    }
    Ok(row.status != "aborted")
}

fn matrix(spec: &Path, out: &Path, threads: Option<usize>) -> Result<bool, String> {
    let spec = MatrixSpec::load(spec).map_err(|e| e.to_string())?;
    let rows = run_matrix(&spec, out, threads.unwrap_or_else(default_threads)).map_err(|e| e.to_string())?;
    for r in rows.iter().filter(|r| !r.diagnostic.is_empty()) {
        eprintln!("{} {} seed {}: {}: {}", r.env, r.planner, r.seed, r.status, r.diagnostic);
    }
    print!("{}", format_table(&summarize(&rows)));
    Ok(rows.iter().all(|r| r.status != "aborted" && r.status != "error"))
}

fn summarize_dir(input: &Path) -> Result<bool, String> {
    let path = input.join("summary.csv");
    let file = fs::File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let rows = read_summary(file)?;
    print!("{}", format_table(&summarize(&rows)));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Explore { config, seed, planner, out } => explore(&config, seed, planner, &out),
        Command::Matrix { spec, out, threads } => matrix(&spec, &out, threads),
        Command::Summarize { input } => summarize_dir(&input),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
