//! Benchmark harness: runs a scenario × planner matrix from the config file
//! and writes three CSV tables — per-run records, a wall-time aggregate
//! (scenario rows × planner columns), and delay versus fleet size.
//!
//! All CSV content except wall-time columns is deterministic for a fixed
//! config and seed; files start with a versioned header comment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::config::{run_planner, scenario_from_spec, Config, ConfigError};
use crate::kinematics::VehicleId;
use crate::planner::{PlanError, PlanResult, PlannerConfig};
use crate::scenario::Scenario;

pub const CSV_VERSION: &str = "# fleet-bench csv v1";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("planner {planner} failed on scenario {scenario}: {source}")]
    Plan {
        scenario: String,
        planner: String,
        source: PlanError,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One (scenario, planner, repetition) cell of the matrix.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: String,
    pub fleet_size: usize,
    pub planner: String,
    pub rep: usize,
    pub delay: f64,
    pub total_time: f64,
    pub iterations: usize,
    pub milp_solves: usize,
    pub constraint_steps: usize,
    pub free_goal_binaries: usize,
    pub nodes: usize,
    pub wall: Duration,
}

impl RunRecord {
    pub fn from_result(
        scenario: &str,
        fleet_size: usize,
        planner: &str,
        rep: usize,
        res: &PlanResult,
        wall: Duration,
    ) -> RunRecord {
        RunRecord {
            scenario: scenario.to_string(),
            fleet_size,
            planner: planner.to_string(),
            rep,
            delay: res.total_delay,
            total_time: res.total_time,
            iterations: res.iterations,
            milp_solves: res.milp_solves(),
            constraint_steps: res.constraint_steps_added,
            free_goal_binaries: res.free_goal_binaries,
            nodes: res.solve_stats.iter().map(|s| s.nodes).sum(),
            wall,
        }
    }
}

/// Per-run CSV. The final `wall_ms` column is the only non-deterministic one.
pub fn render_runs_csv(records: &[RunRecord]) -> String {
    let mut out = format!(
        "{CSV_VERSION}\nscenario,fleet_size,planner,rep,delay_s,total_time_s,iterations,milp_solves,constraint_steps,free_goal_binaries,nodes,wall_ms\n"
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{},{},{},{},{},{:.3}\n",
            r.scenario,
            r.fleet_size,
            r.planner,
            r.rep,
            r.delay,
            r.total_time,
            r.iterations,
            r.milp_solves,
            r.constraint_steps,
            r.free_goal_binaries,
            r.nodes,
            r.wall.as_secs_f64() * 1e3,
        ));
    }
    out
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Aggregate CSV: one row per scenario, one median-wall-time column per
/// planner (all values in milliseconds, hence entirely non-deterministic and
/// excluded from determinism checks).
pub fn render_aggregate_csv(records: &[RunRecord], planners: &[String]) -> String {
    let mut out = format!("{CSV_VERSION}\nscenario,{}\n", planners.join("_wall_ms,") + "_wall_ms");
    let mut scenarios: Vec<&str> = records.iter().map(|r| r.scenario.as_str()).collect();
    scenarios.dedup();
    for sc in scenarios {
        out.push_str(sc);
        for p in planners {
            let walls: Vec<f64> = records
                .iter()
                .filter(|r| r.scenario == sc && &r.planner == p)
                .map(|r| r.wall.as_secs_f64() * 1e3)
                .collect();
            out.push_str(&format!(",{:.3}", median(walls)));
        }
        out.push('\n');
    }
    out
}

/// Delay-versus-size CSV (first repetition only; planners are deterministic).
pub fn render_delay_csv(records: &[RunRecord]) -> String {
    let mut out = format!("{CSV_VERSION}\nscenario,fleet_size,planner,delay_s\n");
    for r in records.iter().filter(|r| r.rep == 0) {
        out.push_str(&format!(
            "{},{},{},{:.6}\n",
            r.scenario, r.fleet_size, r.planner, r.delay
        ));
    }
    out
}

#[derive(Debug)]
pub struct MatrixOutput {
    pub records: Vec<RunRecord>,
    pub runs_csv: PathBuf,
    pub aggregate_csv: PathBuf,
    pub delay_csv: PathBuf,
}

/// Executes every (scenario, planner, repetition) cell and writes the three
/// CSV files into `out_dir`.
pub fn run_matrix(
    cfg: &Config,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<MatrixOutput, BenchError> {
    let planners = cfg.bench_planners()?;
    if cfg.bench.scenarios.is_empty() {
        return Err(ConfigError::NoScenarios.into());
    }
    let pcfg = cfg.planner_config()?;
    let reps = cfg.bench.repetitions.max(1);
    let mut records = Vec::new();
    for spec in &cfg.bench.scenarios {
        let mut scenario = scenario_from_spec(spec, seed_override)?;
        cfg.apply_to_scenario(&mut scenario);
        for planner in &planners {
            for rep in 0..reps {
                let start = Instant::now();
                let res = run_planner(planner, &scenario, &pcfg).map_err(|source| {
                    BenchError::Plan {
                        scenario: spec.clone(),
                        planner: planner.clone(),
                        source,
                    }
                })?;
                records.push(RunRecord::from_result(
                    spec,
                    scenario.fleet.len(),
                    planner,
                    rep,
                    &res,
                    start.elapsed(),
                ));
            }
        }
    }
    let write = |name: &str, content: String| -> Result<PathBuf, BenchError> {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    };
    std::fs::create_dir_all(out_dir).map_err(|source| BenchError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    Ok(MatrixOutput {
        runs_csv: write("runs.csv", render_runs_csv(&records))?,
        aggregate_csv: write("aggregate.csv", render_aggregate_csv(&records, &planners))?,
        delay_csv: write("delay_vs_size.csv", render_delay_csv(&records))?,
        records,
    })
}

/// One objective-formulation variant measured by [`compare_objectives`].
#[derive(Debug, Clone)]
pub struct ObjectiveRow {
    pub variant: &'static str,
    pub free_goal_binaries: usize,
    pub arrival_steps: BTreeMap<VehicleId, usize>,
    pub wall: Duration,
}

/// Compares the arrival-time objective (with and without goal windows)
/// against the distance-to-goal objective on a zero-final-velocity scenario:
/// reports binary counts and arrival steps, asserting that the windowed time
/// objective and the distance objective agree within one step per vehicle.
pub fn compare_objectives(
    scenario: &Scenario,
    cfg: &PlannerConfig,
) -> Result<Vec<ObjectiveRow>, PlanError> {
    let variants: [(&'static str, PlannerConfig); 3] = [
        (
            "time_full",
            PlannerConfig {
                use_goal_windows: false,
                distance_objective: false,
                ..cfg.clone()
            },
        ),
        (
            "time_window",
            PlannerConfig {
                use_goal_windows: true,
                distance_objective: false,
                ..cfg.clone()
            },
        ),
        (
            "distance",
            PlannerConfig {
                use_goal_windows: true,
                distance_objective: true,
                ..cfg.clone()
            },
        ),
    ];
    let mut rows = Vec::new();
    for (variant, vcfg) in variants {
        let start = Instant::now();
        let res = crate::planner::plan_full_range(scenario, &vcfg)?;
        let arrival_steps = res
            .trajectories
            .iter()
            .map(|(&id, t)| (id, (t.goal_time / scenario.dt).round() as usize))
            .collect();
        rows.push(ObjectiveRow {
            variant,
            free_goal_binaries: res.free_goal_binaries,
            arrival_steps,
            wall: start.elapsed(),
        });
    }
    for (&id, &step) in &rows[1].arrival_steps {
        let other = rows[2].arrival_steps[&id];
        assert!(
            step.abs_diff(other) <= 1,
            "vehicle {id}: windowed-time arrival {step} vs distance-objective {other}"
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::make_grid;

    fn small_config() -> Config {
        Config::parse(
            r#"
[bench]
scenarios = ["grid1", "toy2"]
planners = ["interval", "heuristic", "reactive"]
repetitions = 2
"#,
        )
        .unwrap()
    }

    /// Strips the trailing wall-time column from every data line.
    fn strip_wall(csv: &str) -> String {
        csv.lines()
            .map(|l| {
                if l.starts_with('#') || l.starts_with("scenario") {
                    l.to_string()
                } else {
                    l.rsplit_once(',').map(|(a, _)| a.to_string()).unwrap_or_default()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn matrix_runs_and_is_deterministic() {
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let a = run_matrix(&cfg, dir.path(), None).unwrap();
        assert_eq!(a.records.len(), 2 * 3 * 2);
        let runs_a = std::fs::read_to_string(&a.runs_csv).unwrap();
        let b = run_matrix(&cfg, dir.path(), None).unwrap();
        let runs_b = std::fs::read_to_string(&b.runs_csv).unwrap();
        assert_eq!(strip_wall(&runs_a), strip_wall(&runs_b));
        assert!(runs_a.starts_with(CSV_VERSION));
        // Repetitions of a deterministic planner report identical delays.
        for r in &a.records {
            let twin = a
                .records
                .iter()
                .find(|t| t.scenario == r.scenario && t.planner == r.planner && t.rep != r.rep)
                .unwrap();
            assert_eq!(r.delay, twin.delay);
        }
        // Delay ordering per scenario: reactive >= heuristic >= exact MILP.
        for sc in ["grid1", "toy2"] {
            let d = |p: &str| {
                a.records
                    .iter()
                    .find(|r| r.scenario == sc && r.planner == p)
                    .unwrap()
                    .delay
            };
            assert!(d("reactive") >= d("heuristic") - 1e-9);
            assert!(d("heuristic") >= d("interval") - 1e-9);
        }
        let agg = std::fs::read_to_string(&a.aggregate_csv).unwrap();
        assert_eq!(agg.lines().count(), 4); // version, header, 2 scenarios
    }

    #[test]
    fn empty_planner_list_is_config_error() {
        let cfg = Config::parse("[bench]\nscenarios = [\"grid1\"]").unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run_matrix(&cfg, dir.path(), None),
            Err(BenchError::Config(ConfigError::NoPlanners))
        ));
    }

    #[test]
    fn objective_comparison_grid1() {
        let rows = compare_objectives(&make_grid(1), &PlannerConfig::default()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].free_goal_binaries < rows[0].free_goal_binaries);
        assert_eq!(rows[2].free_goal_binaries, 0);
    }
}
