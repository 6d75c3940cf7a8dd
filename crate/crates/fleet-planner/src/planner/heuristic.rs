//! Sequential avoidance heuristic: resolve one conflict at a time by holding
//! the later-arriving vehicle behind the intersection with a waypoint and
//! re-solving only that vehicle's single-vehicle MILP.

use std::collections::BTreeMap;

use crate::interaction::detect_active;
use crate::kinematics::min_time_tpbvp;
use crate::model::{MilpModel, Sense};
use crate::scenario::Scenario;
use crate::solver::{backend_from_name, SolveStatus};

use super::{conflict_roles, finalize, prepare, PlanError, PlanResult, PlannerConfig};

/// One accumulated waypoint: position bound `x <= limit` (or `=`) at step `k`.
#[derive(Debug, Clone, Copy)]
struct Waypoint {
    k: usize,
    limit: f64,
    sense: Sense,
}

/// Resolves conflicts sequentially, earliest first: the earlier-entering
/// vehicle proceeds unchanged; the other receives a waypoint holding it at
/// the intersection entrance until the leader's exit time (rounded up to the
/// grid), then its own minimum-time problem is re-solved with all waypoints
/// accumulated so far. Repeats until no active conflict remains.
pub fn plan_heuristic(s: &Scenario, cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    let prep = prepare(s, cfg)?;
    let backend = backend_from_name(&cfg.backend)
        .ok_or_else(|| PlanError::UnknownBackend(cfg.backend.clone()))?;
    let mut trajectories = prep.relaxed.clone();
    let mut waypoints: BTreeMap<_, Vec<Waypoint>> = BTreeMap::new();
    let mut stats = Vec::new();
    let mut resolutions = 0;
    let mut resolution_log = Vec::new();

    loop {
        let actives = detect_active(&trajectories, &prep.crossings, cfg.buffer)?;
        let Some(n) = actives.iter().find(|n| n.active) else {
            break;
        };
        resolutions += 1;
        if resolutions > cfg.resolution_cap {
            return Err(PlanError::ResolutionCap(cfg.resolution_cap));
        }
        let (lead_exit, delayed, limit) = conflict_roles(n)?;
        resolution_log.push((delayed, n.intersection));
        let sense = if cfg.equality_waypoints {
            Sense::Eq
        } else {
            Sense::Le
        };
        let mut k = ((lead_exit / s.dt).ceil() as usize).max(1);
        let wps = waypoints.entry(delayed).or_default();
        // A repeated identical waypoint would change nothing; push the hold
        // one step later to guarantee progress.
        while wps
            .iter()
            .any(|w| w.k == k && (w.limit - limit).abs() < 1e-9)
        {
            k += 1;
        }
        wps.push(Waypoint { k, limit, sense });

        // Re-solve the delayed vehicle alone. Horizon: hold until the last
        // waypoint step, then a full traverse from rest still fits.
        let (_, x_f, params) = prep
            .fleet
            .iter()
            .find(|(id, _, _)| *id == delayed)
            .expect("delayed vehicle in fleet");
        let t_full = min_time_tpbvp(*x_f, 0.0, params.vf, params)?.total_time;
        let k_hold = wps.iter().map(|w| w.k).max().unwrap();
        let horizon = k_hold + (t_full / s.dt).ceil() as usize + 3;
        let mut model = MilpModel::new(s.dt, horizon);
        model.add_vehicle(delayed, *x_f, params)?;
        for w in wps.iter() {
            model.add_waypoint(delayed, w.k, w.limit, w.sense)?;
        }
        let res = backend.solve(&model);
        if res.status != SolveStatus::Optimal {
            return Err(PlanError::Solver {
                status: res.status,
                context: format!("re-solving vehicle {delayed} with {} waypoints", wps.len()),
            });
        }
        stats.push(res.stats);
        trajectories.insert(delayed, model.decode_trajectory(delayed, &res.assignment)?);
    }

    let mut result = finalize(
        &prep,
        trajectories,
        None,
        resolutions,
        0,
        0,
        0,
        stats,
        Vec::new(),
    )?;
    result.resolution_log = resolution_log;
    Ok(result)
}
