//! Exact fleet-level MILP planners: monolithic full-range avoidance and
//! iterative lazy constraint generation.

use std::collections::BTreeMap;

use crate::interaction::detect_active;
use crate::kinematics::{Trajectory, VehicleId};
use crate::model::{MilpModel, AVOIDANCE_EPS};
use crate::scenario::Scenario;
use crate::solver::{backend_from_name, Backend, SolveStatus};

use super::{
    finalize, inflate, milp_prep, prepare, PlanError, PlanResult, PlannerConfig, Prep, TargetMode,
};

fn backend(cfg: &PlannerConfig) -> Result<Box<dyn Backend>, PlanError> {
    backend_from_name(&cfg.backend).ok_or_else(|| PlanError::UnknownBackend(cfg.backend.clone()))
}

/// Builds the fleet model: one vehicle block per fleet member plus optional
/// goal windows (applied before any avoidance rows so bound tightening can
/// presolve redundant steps away).
fn build_fleet_model(
    s: &Scenario,
    prep: &Prep,
    horizon: usize,
    windows: Option<&BTreeMap<VehicleId, (usize, usize)>>,
) -> Result<MilpModel, PlanError> {
    let mut model = MilpModel::new(s.dt, horizon);
    for (id, x_f, params) in &prep.fleet {
        model.add_vehicle(*id, *x_f, params)?;
    }
    if let Some(w) = windows {
        for (&id, &(lb, ub)) in w {
            model.apply_goal_window(id, lb, ub)?;
        }
    }
    Ok(model)
}

fn solve_model(
    model: &MilpModel,
    backend: &dyn Backend,
    context: &str,
) -> Result<crate::solver::SolveResult, PlanError> {
    let res = backend.solve(model);
    if res.status != SolveStatus::Optimal {
        return Err(PlanError::Solver {
            status: res.status,
            context: context.to_string(),
        });
    }
    Ok(res)
}

fn decode_all(
    model: &MilpModel,
    prep: &Prep,
    assignment: &[f64],
) -> Result<BTreeMap<VehicleId, Trajectory>, PlanError> {
    prep.fleet
        .iter()
        .map(|(id, _, _)| Ok((*id, model.decode_trajectory(*id, assignment)?)))
        .collect()
}

/// Minimum-total-arrival-time plan from a single MILP with avoidance
/// disjunctions at every horizon step of every crossing.
pub fn plan_full_range(s: &Scenario, cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    let prep = prepare(s, cfg)?;
    let sizing = milp_prep(s, cfg, &prep)?;
    let backend = backend(cfg)?;

    let mut model = build_fleet_model(s, &prep, sizing.horizon, sizing.windows.as_ref())?;
    let all_steps: Vec<usize> = (1..=sizing.horizon).collect();
    let mut steps_added = 0;
    for geo in &prep.crossings {
        steps_added += model.add_avoidance(&inflate(geo, cfg.buffer), &all_steps)?;
    }
    if cfg.distance_objective {
        model.build_distance_objective(sizing.windows.as_ref())?;
    }
    let free_b = model.free_goal_binaries();

    let res = solve_model(&model, backend.as_ref(), "solving the monolithic fleet model")?;
    let trajectories = decode_all(&model, &prep, &res.assignment)?;
    finalize(
        &prep,
        trajectories,
        Some(res.objective),
        1,
        steps_added,
        free_b,
        sizing.horizon,
        vec![res.stats],
        sizing.prep_solve_stats,
    )
}

/// Steps whose segment `(k-1, k]` is not certified safe by any of the four
/// escapes in the current solution — exactly the steps whose avoidance
/// disjunction would cut it.
fn violating_steps(
    ti: &Trajectory,
    tj: &Trajectory,
    interval_i: (f64, f64),
    interval_j: (f64, f64),
    horizon: usize,
) -> Vec<usize> {
    let pos = |t: &Trajectory, k: usize| t.samples[k.min(t.samples.len() - 1)].x;
    let overlaps = |t: &Trajectory, k: usize, (a, b): (f64, f64)| {
        pos(t, k) > a - AVOIDANCE_EPS && pos(t, k - 1) < b + AVOIDANCE_EPS
    };
    (1..=horizon)
        .filter(|&k| overlaps(ti, k, interval_i) && overlaps(tj, k, interval_j))
        .collect()
}

/// Exact plan by lazy constraint generation: solve the relaxed fleet model,
/// add avoidance steps only where active conflicts appear (per `cfg.mode`),
/// and repeat until no conflict remains.
pub fn plan_iterative(s: &Scenario, cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    let prep = prepare(s, cfg)?;
    let sizing = milp_prep(s, cfg, &prep)?;
    let backend = backend(cfg)?;
    let horizon = sizing.horizon;

    let mut model = build_fleet_model(s, &prep, horizon, sizing.windows.as_ref())?;
    let mut steps_added = 0;
    let mut stats = Vec::new();

    for iteration in 1..=cfg.iteration_cap {
        let res = solve_model(&model, backend.as_ref(), "solving the iterative fleet model")?;
        stats.push(res.stats.clone());
        let trajectories = decode_all(&model, &prep, &res.assignment)?;
        let actives: Vec<_> = detect_active(&trajectories, &prep.crossings, cfg.buffer)?
            .into_iter()
            .filter(|n| n.active)
            .collect();
        if actives.is_empty() {
            return finalize(
                &prep,
                trajectories,
                Some(res.objective),
                iteration,
                steps_added,
                model.free_goal_binaries(),
                horizon,
                stats,
                sizing.prep_solve_stats,
            );
        }
        // Extend the model in place for every active conflict at once.
        for n in &actives {
            let geo = prep
                .crossings
                .iter()
                .find(|g| (g.i, g.j) == n.vehicles && g.intersection == n.intersection)
                .expect("interaction originates from a known crossing");
            let g = inflate(geo, cfg.buffer);
            let (ei, xi) = n.occupancy_i.expect("active conflict occupancy");
            let (ej, xj) = n.occupancy_j.expect("active conflict occupancy");
            let horizon_s = horizon as f64 * s.dt;
            let steps: Vec<usize> = match cfg.mode {
                TargetMode::Interval => {
                    let lo_t = ei.min(ej);
                    let hi_t = xi.max(xj).min(horizon_s);
                    let k_lo = ((lo_t / s.dt).floor() as usize).saturating_sub(1).max(1);
                    let k_hi = ((hi_t / s.dt).ceil() as usize + 1).min(horizon);
                    (k_lo..=k_hi).collect()
                }
                TargetMode::Midpoint => {
                    let lo_t = ei.max(ej);
                    let hi_t = xi.min(xj).min(horizon_s);
                    let k = ((0.5 * (lo_t + hi_t) / s.dt).round() as usize).clamp(1, horizon);
                    vec![k]
                }
            };
            let mut added = model.add_avoidance(&g, &steps)?;
            if added == 0 {
                // Targeted steps were already covered (midpoint targeting can
                // stall this way): fall back to the step nearest the midpoint
                // at which the current solution actually violates the
                // disjunction.
                let (ti, tj) = (&trajectories[&n.vehicles.0], &trajectories[&n.vehicles.1]);
                let mid = steps[steps.len() / 2] as i64;
                let mut candidates =
                    violating_steps(ti, tj, g.interval_i, g.interval_j, horizon);
                candidates.sort_by_key(|&k| ((k as i64 - mid).abs(), k));
                for k in candidates {
                    added = model.add_avoidance(&g, &[k])?;
                    if added > 0 {
                        break;
                    }
                }
            }
            if added == 0 {
                return Err(PlanError::Stalled(n.vehicles.0, n.vehicles.1, n.intersection));
            }
            steps_added += added;
        }
    }
    Err(PlanError::IterationCap(cfg.iteration_cap))
}
