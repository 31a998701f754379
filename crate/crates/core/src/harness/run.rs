//! Runs missions and writes their step records.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::executive::{run_mission, MissionConfig, MissionOutcome, PlannerKind, StepRow};
use crate::harness::config::MatrixSpec;
use crate::harness::summary::{write_summary, SummaryRow};
use crate::world::load_world_file;

pub const RUN_HEADER: &str = "step,sim_time,covered_cells,coverage_fraction,x,y,mode,episode,distance";

pub fn run_csv(rows: &[StepRow]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(RUN_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.3},{:.3},{},{},{:.6}\n",
            r.step,
            r.sim_time,
            r.covered_cells,
            r.coverage_fraction,
            r.x,
            r.y,
            r.mode.name(),
            r.episode,
            r.distance
        ));
    }
    out
}

pub fn run_file_name(env: &str, planner: PlannerKind, seed: u64) -> String {
    format!("{env}_{planner}_s{seed}.csv")
}

/// Loads the world and runs one mission; errors come back as text.
pub fn run_one(world: &Path, config: &MissionConfig, seed: u64) -> Result<MissionOutcome, String> {
    let w = load_world_file(world).map_err(|e| e.to_string())?;
    run_mission(w, config, seed).map_err(|e| e.to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRun {
    pub planner: PlannerKind,
    pub env: String,
    pub world: PathBuf,
    pub seed: u64,
}

/// Every (planner, env, seed) triple, planners outermost.
pub fn expand(spec: &MatrixSpec) -> Vec<MatrixRun> {
    let mut out = Vec::new();
    for &planner in &spec.planners {
        for (env, world) in &spec.envs {
            for &seed in &spec.seeds {
                out.push(MatrixRun { planner, env: env.clone(), world: world.clone(), seed });
            }
        }
    }
    out
}

/// Runs the matrix on up to `threads` workers. Each run is independent, so the
/// results do not depend on the thread count. Returns one summary row per run,
/// in expansion order, with the outcome of every run that got going.
pub fn execute_matrix(spec: &MatrixSpec, threads: usize) -> Vec<(MatrixRun, SummaryRow, Option<MissionOutcome>)> {
    let runs = expand(spec);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<(SummaryRow, Option<MissionOutcome>)>>> = runs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, runs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(run) = runs.get(i) else { break };
                let mut cfg = spec.mission.clone();
                cfg.planner = run.planner;
                let budget = cfg.step_budget;
                let result = match run_one(&run.world, &cfg, run.seed) {
                    Ok(o) => (SummaryRow::from_outcome(run.planner.name(), &run.env, run.seed, budget, &o), Some(o)),
                    Err(msg) => (SummaryRow::failed(run.planner.name(), &run.env, run.seed, budget, msg), None),
                };
                *slots[i].lock().expect("worker panicked") = Some(result);
            });
        }
    });
    runs.into_iter()
        .zip(slots)
        .map(|(run, slot)| {
            let (row, outcome) = slot.into_inner().expect("worker panicked").expect("every run executed");
            (run, row, outcome)
        })
        .collect()
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs the matrix and writes `<env>_<planner>_s<seed>.csv` per run and
/// `summary.csv` into `out`.
pub fn run_matrix(spec: &MatrixSpec, out: &Path, threads: usize) -> std::io::Result<Vec<SummaryRow>> {
    fs::create_dir_all(out)?;
    let results = execute_matrix(spec, threads);
    let mut summary = Vec::with_capacity(results.len());
    for (run, row, outcome) in results {
        let rows = outcome.as_ref().map_or(&[][..], |o| &o.rows[..]);
        fs::write(out.join(run_file_name(&run.env, run.planner, run.seed)), run_csv(rows))?;
        summary.push(row);
    }
    let file = fs::File::create(out.join("summary.csv"))?;
    write_summary(file, &summary).map_err(std::io::Error::other)?;
    Ok(summary)
}
