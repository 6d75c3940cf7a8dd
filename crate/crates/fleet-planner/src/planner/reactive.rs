//! Reactive stop-and-proceed resolver: no optimization at all. The
//! later-entering vehicle of each conflict brakes to a halt just before the
//! (buffer-inflated) intersection interval and waits until the other vehicle
//! has cleared it, mimicking onboard proximity rules.

use std::collections::BTreeMap;

use crate::interaction::detect_active;
use crate::kinematics::{
    discrete_min_time_velocities, propagate, Trajectory, VehicleParams,
};
use crate::model::AVOIDANCE_EPS;
use crate::scenario::Scenario;

use super::{conflict_roles, finalize, prepare, PlanError, PlanResult, PlannerConfig};

/// A full stop at `x_stop`, held until `resume_step`.
#[derive(Debug, Clone, Copy)]
struct StopEvent {
    x_stop: f64,
    resume_step: usize,
}

/// Rebuilds a vehicle's trajectory as minimum-time segments between stops:
/// accelerate-cruise-brake to each stop point in path order, dwell until its
/// resume step (no dwell if the vehicle arrives later anyway), then continue;
/// the last segment lands on the goal state.
fn rebuild(
    params: &VehicleParams,
    x_f: f64,
    stops: &[StopEvent],
    dt: f64,
) -> Result<Trajectory, PlanError> {
    let mut vs = vec![params.v0];
    let (mut x_prev, mut v_prev, mut step) = (0.0_f64, params.v0, 0usize);
    for ev in stops {
        let seg = discrete_min_time_velocities(
            ev.x_stop - x_prev,
            v_prev,
            0.0,
            params.v_max,
            params.a_max,
            params.a_min,
            dt,
        )?;
        vs.extend_from_slice(&seg[1..]);
        step += seg.len() - 1;
        while step < ev.resume_step {
            vs.push(0.0);
            step += 1;
        }
        x_prev = ev.x_stop;
        v_prev = 0.0;
    }
    let seg = discrete_min_time_velocities(
        x_f - x_prev,
        v_prev,
        params.vf,
        params.v_max,
        params.a_max,
        params.a_min,
        dt,
    )?;
    vs.extend_from_slice(&seg[1..]);
    let controls: Vec<f64> = vs.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    let mut traj = propagate(0.0, params.v0, &controls, dt);
    traj.goal_time = (vs.len() - 1) as f64 * dt;
    Ok(traj)
}

/// Resolves conflicts with full stops only, using the inflated
/// `cfg.reactive_buffer` detection margin; performs zero LP/MILP solves.
pub fn plan_reactive(s: &Scenario, cfg: &PlannerConfig) -> Result<PlanResult, PlanError> {
    let prep = prepare(s, cfg)?;
    let mut trajectories = prep.relaxed.clone();
    let mut stops: BTreeMap<_, Vec<StopEvent>> = BTreeMap::new();
    let mut resolutions = 0;
    let mut resolution_log = Vec::new();

    loop {
        let actives = detect_active(&trajectories, &prep.crossings, cfg.reactive_buffer)?;
        let Some(n) = actives.iter().find(|n| n.active) else {
            break;
        };
        resolutions += 1;
        if resolutions > cfg.resolution_cap {
            return Err(PlanError::ResolutionCap(cfg.resolution_cap));
        }
        let (lead_exit, delayed, interval_start) = conflict_roles(n)?;
        resolution_log.push((delayed, n.intersection));
        let x_stop = interval_start - AVOIDANCE_EPS;
        let resume_step = ((lead_exit / s.dt).ceil() as usize).max(1);
        let evs = stops.entry(delayed).or_default();
        if let Some(ev) = evs.iter_mut().find(|e| (e.x_stop - x_stop).abs() < 1e-6) {
            // Same intersection conflicting again (the leader was delayed in
            // the meantime): extend the dwell, always by at least one step so
            // the loop makes progress.
            ev.resume_step = resume_step.max(ev.resume_step + 1);
        } else {
            evs.push(StopEvent {
                x_stop,
                resume_step,
            });
            evs.sort_by(|a, b| a.x_stop.total_cmp(&b.x_stop));
        }
        if evs[0].x_stop <= 0.0 {
            return Err(PlanError::CannotStop {
                vehicle: delayed,
                intersection: n.intersection,
            });
        }
        let (_, x_f, params) = prep
            .fleet
            .iter()
            .find(|(id, _, _)| *id == delayed)
            .expect("delayed vehicle in fleet");
        trajectories.insert(delayed, rebuild(params, *x_f, evs, s.dt)?);
    }

    let mut result = finalize(
        &prep,
        trajectories,
        None,
        resolutions,
        0,
        0,
        0,
        Vec::new(),
        Vec::new(),
    )?;
    result.resolution_log = resolution_log;
    Ok(result)
}
