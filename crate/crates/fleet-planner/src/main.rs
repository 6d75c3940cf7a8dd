//! `fleet` command-line interface.
//!
//! Subcommands:
//! * `plan <scenario> --planner <name> [--dt s] [--config file] --out <dir>`
//!   — plan one scenario, writing the scenario text, per-step trajectories,
//!   a delay summary, and one distance-time SVG per vehicle.
//! * `bench --config <file> --out <dir>` — run the scenario × planner matrix
//!   from the config's `[bench]` section and write the CSV tables.
//! * `plot <result-dir> --vehicle <id>` — re-render the SVG for one vehicle
//!   from a `plan` output directory.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 planner failure.
//! The `FLEET_SEED` environment variable overrides the seed of `mine:...`
//! scenario specs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fleet_planner::bench::run_matrix;
use fleet_planner::config::{run_planner, scenario_from_spec, validate_planner_name, Config};
use fleet_planner::kinematics::{Trajectory, VehicleId};
use fleet_planner::plot::plot_trajectory;
use fleet_planner::scenario::Scenario;

#[derive(Parser)]
#[command(name = "fleet", about = "Fleet trajectory planning on shared road networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one scenario and write trajectories, summary, and plots.
    Plan {
        /// Scenario spec: toy1, toy2, case1:<m>, grid<n>,
        /// mine:<seed>:<vertices>:<vehicles>, or a scenario file path.
        scenario: String,
        /// Planner: full, interval, midpoint, heuristic, reactive.
        #[arg(long)]
        planner: Option<String>,
        /// Sampling period in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Optional TOML config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "fleet-out")]
        out: PathBuf,
    },
    /// Run the scenario × planner benchmark matrix from a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "fleet-out")]
        out: PathBuf,
    },
    /// Render the distance-time SVG for one vehicle from a `plan` output.
    Plot {
        /// Directory previously written by `plan`.
        result: PathBuf,
        #[arg(long)]
        vehicle: u32,
        /// Output SVG path (default: <result>/vehicle_<id>.svg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PLANNER: u8 = 3;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn seed_override() -> Option<u64> {
    std::env::var("FLEET_SEED").ok().and_then(|v| v.parse().ok())
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    std::fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Per-step trajectory CSV, one block of rows per vehicle.
fn trajectories_csv(trajs: &BTreeMap<VehicleId, Trajectory>) -> String {
    let mut out = String::from("vehicle,k,t_s,x_m,v_mps,u_mps2\n");
    for (id, traj) in trajs {
        for s in &traj.samples {
            out.push_str(&format!(
                "{id},{},{:.3},{:.6},{:.6},{:.6}\n",
                s.k,
                s.k as f64 * traj.dt,
                s.x,
                s.v,
                s.u
            ));
        }
    }
    out
}

fn parse_trajectories_csv(text: &str, dt: f64) -> Result<BTreeMap<VehicleId, Trajectory>, String> {
    use fleet_planner::kinematics::propagate;
    let mut controls: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut v0s: BTreeMap<u32, f64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(format!("trajectories.csv line {}: expected 6 fields", i + 1));
        }
        let bad = |what: &str| format!("trajectories.csv line {}: bad {what}", i + 1);
        let id: u32 = f[0].parse().map_err(|_| bad("vehicle"))?;
        let k: usize = f[1].parse().map_err(|_| bad("step"))?;
        let v: f64 = f[4].parse().map_err(|_| bad("velocity"))?;
        let u: f64 = f[5].parse().map_err(|_| bad("control"))?;
        if k == 0 {
            v0s.insert(id, v);
        } else {
            controls.entry(id).or_default().push(u);
        }
    }
    Ok(v0s
        .into_iter()
        .map(|(id, v0)| {
            let u = controls.remove(&id).unwrap_or_default();
            (VehicleId(id), propagate(0.0, v0, &u, dt))
        })
        .collect())
}

fn write_plan_outputs(
    dir: &Path,
    scenario: &Scenario,
    planner: &str,
    result: &fleet_planner::planner::PlanResult,
) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    write_file(&dir.join("scenario.txt"), &scenario.to_text())?;
    write_file(
        &dir.join("trajectories.csv"),
        &trajectories_csv(&result.trajectories),
    )?;
    let mut summary = format!(
        "planner {planner}\ntotal_time_s {:.6}\ntotal_delay_s {:.6}\niterations {}\nmilp_solves {}\nconstraint_steps {}\n",
        result.total_time,
        result.total_delay,
        result.iterations,
        result.milp_solves(),
        result.constraint_steps_added
    );
    for (id, traj) in &result.trajectories {
        summary.push_str(&format!("arrival_s {id} {:.6}\n", traj.goal_time));
    }
    write_file(&dir.join("summary.txt"), &summary)?;
    for (id, _, _) in &scenario.fleet {
        let svg = plot_trajectory(scenario, &result.trajectories, *id)
            .map_err(|e| e.to_string())?;
        write_file(&dir.join(format!("vehicle_{id}.svg")), &svg)?;
    }
    Ok(())
}

fn cmd_plan(
    spec: &str,
    planner: Option<String>,
    dt: Option<f64>,
    config: Option<PathBuf>,
    out: &Path,
) -> ExitCode {
    let mut cfg = match config {
        Some(path) => match Config::load(&path) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_CONFIG, e),
        },
        None => Config::default(),
    };
    if let Some(dt) = dt {
        if !(dt > 0.0) {
            return fail(EXIT_CONFIG, "dt must be positive");
        }
        cfg.dt = dt;
    }
    let planner = planner.unwrap_or_else(|| cfg.planner.clone());
    if let Err(e) = validate_planner_name(&planner) {
        return fail(EXIT_CONFIG, e);
    }
    let pcfg = match cfg.planner_config() {
        Ok(p) => p,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let mut scenario = match scenario_from_spec(spec, seed_override()) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    cfg.apply_to_scenario(&mut scenario);
    let result = match run_planner(&planner, &scenario, &pcfg) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_PLANNER, e),
    };
    if let Err(e) = write_plan_outputs(out, &scenario, &planner, &result) {
        return fail(EXIT_PLANNER, e);
    }
    println!(
        "planned {} vehicles with {planner}: total time {:.3} s, delay {:.3} s -> {}",
        scenario.fleet.len(),
        result.total_time,
        result.total_delay,
        out.display()
    );
    ExitCode::SUCCESS
}

fn cmd_bench(config: &Path, out: &Path) -> ExitCode {
    let cfg = match Config::load(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    match run_matrix(&cfg, out, seed_override()) {
        Ok(m) => {
            println!(
                "{} runs -> {}, {}, {}",
                m.records.len(),
                m.runs_csv.display(),
                m.aggregate_csv.display(),
                m.delay_csv.display()
            );
            ExitCode::SUCCESS
        }
        Err(e @ fleet_planner::bench::BenchError::Plan { .. }) => fail(EXIT_PLANNER, e),
        Err(e) => fail(EXIT_CONFIG, e),
    }
}

fn cmd_plot(result: &Path, vehicle: u32, out: Option<PathBuf>) -> ExitCode {
    let read = |name: &str| {
        std::fs::read_to_string(result.join(name))
            .map_err(|e| format!("cannot read {}/{name}: {e}", result.display()))
    };
    let scenario_text = match read("scenario.txt") {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let scenario = match Scenario::parse(&scenario_text) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let traj_text = match read("trajectories.csv") {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let trajectories = match parse_trajectories_csv(&traj_text, scenario.dt) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let svg = match plot_trajectory(&scenario, &trajectories, VehicleId(vehicle)) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let path = out.unwrap_or_else(|| result.join(format!("vehicle_{vehicle}.svg")));
    if let Err(e) = write_file(&path, &svg) {
        return fail(EXIT_PLANNER, e);
    }
    println!("wrote {}", path.display());
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Plan {
            scenario,
            planner,
            dt,
            config,
            out,
        } => cmd_plan(&scenario, planner, dt, config, &out),
        Command::Bench { config, out } => cmd_bench(&config, &out),
        Command::Plot {
            result,
            vehicle,
            out,
        } => cmd_plot(&result, vehicle, out),
    }
}
