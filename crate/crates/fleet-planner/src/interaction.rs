//! Detection of active interactions between trajectory pairs at crossing
//! intersections.
//!
//! A pair interacts at an intersection where their paths cross; the
//! interaction is *active* when their occupancy time windows over the
//! intersection's spatial interval overlap. Planners must drive every active
//! interaction inactive; `detect_active` with buffer 0 on final trajectories
//! is the shared safety check.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kinematics::{Trajectory, VehicleId};
use crate::network::VertexId;

/// Crossing geometry for one vehicle pair at one intersection, expressed as
/// occupancy intervals along each vehicle's own path coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingGeometry {
    pub i: VehicleId,
    pub j: VehicleId,
    pub intersection: VertexId,
    pub interval_i: (f64, f64),
    pub interval_j: (f64, f64),
}

/// One evaluated interaction: geometry plus occupancy windows and activity.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub vehicles: (VehicleId, VehicleId),
    pub intersection: VertexId,
    pub interval_i: (f64, f64),
    pub interval_j: (f64, f64),
    /// `(t_enter, t_exit)`; `t_exit` is infinite when the trajectory never
    /// clears the interval. `None` when the vehicle never enters it.
    pub occupancy_i: Option<(f64, f64)>,
    pub occupancy_j: Option<(f64, f64)>,
    pub active: bool,
    /// Spatial inflation applied to both interval ends before evaluation.
    pub buffer: f64,
}

impl Interaction {
    /// Earliest entry time of either vehicle; infinity if neither enters.
    pub fn earliest_entry(&self) -> f64 {
        let e = |o: &Option<(f64, f64)>| o.map_or(f64::INFINITY, |(t, _)| t);
        e(&self.occupancy_i).min(e(&self.occupancy_j))
    }
}

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("no trajectory supplied for vehicle {0}")]
    MissingTrajectory(VehicleId),
}

/// Earliest time at which the trajectory position satisfies `pred` going up.
/// Positions are nondecreasing, so a bisection over the sampled time span is
/// exact up to solver tolerance.
fn first_time(traj: &Trajectory, pred: impl Fn(f64) -> bool) -> Option<f64> {
    let t_end = (traj.samples.len() - 1) as f64 * traj.dt;
    if pred(traj.position_at(0.0)) {
        return Some(0.0);
    }
    if !pred(traj.position_at(t_end)) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, t_end);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if pred(traj.position_at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Occupancy time window of a trajectory over a spatial interval.
///
/// Entry is the earliest time with `x >= start`; exit the earliest time with
/// `x > end` (infinite when the trajectory never clears the interval).
/// `None` when the trajectory never enters.
pub fn occupancy_window(traj: &Trajectory, interval: (f64, f64)) -> Option<(f64, f64)> {
    let (start, end) = interval;
    let t_enter = first_time(traj, |x| x >= start)?;
    let t_exit = first_time(traj, |x| x > end).unwrap_or(f64::INFINITY);
    Some((t_enter, t_exit))
}

/// Evaluates every crossing against the current trajectories.
///
/// Spatial intervals are inflated by `buffer` on both ends first. Results are
/// sorted by earliest entry time, ties by vehicle-id pair, so "the earliest
/// active interaction" is well defined.
pub fn detect_active(
    trajectories: &BTreeMap<VehicleId, Trajectory>,
    geometry: &[CrossingGeometry],
    buffer: f64,
) -> Result<Vec<Interaction>, InteractionError> {
    let mut out = Vec::with_capacity(geometry.len());
    for g in geometry {
        let traj_i = trajectories
            .get(&g.i)
            .ok_or(InteractionError::MissingTrajectory(g.i))?;
        let traj_j = trajectories
            .get(&g.j)
            .ok_or(InteractionError::MissingTrajectory(g.j))?;
        let inflate = |(a, b): (f64, f64)| (a - buffer, b + buffer);
        let iv_i = inflate(g.interval_i);
        let iv_j = inflate(g.interval_j);
        let occ_i = occupancy_window(traj_i, iv_i);
        let occ_j = occupancy_window(traj_j, iv_j);
        let active = match (occ_i, occ_j) {
            (Some((ei, xi)), Some((ej, xj))) => ei <= xj && ej <= xi,
            _ => false,
        };
        out.push(Interaction {
            vehicles: (g.i, g.j),
            intersection: g.intersection,
            interval_i: iv_i,
            interval_j: iv_j,
            occupancy_i: occ_i,
            occupancy_j: occ_j,
            active,
            buffer,
        });
    }
    out.sort_by(|a, b| {
        a.earliest_entry()
            .total_cmp(&b.earliest_entry())
            .then(a.vehicles.cmp(&b.vehicles))
            .then(a.intersection.cmp(&b.intersection))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::propagate;
    use proptest::prelude::*;

    fn constant_v(x0: f64, v: f64, steps: usize) -> Trajectory {
        propagate(x0, v, &vec![0.0; steps], 1.0)
    }

    #[test]
    fn window_constant_velocity() {
        let t = constant_v(0.0, 10.0, 20);
        let (enter, exit) = occupancy_window(&t, (95.0, 120.0)).unwrap();
        assert!((enter - 9.5).abs() < 1e-6);
        assert!((exit - 12.0).abs() < 1e-6);
    }

    #[test]
    fn window_never_enters() {
        let t = constant_v(0.0, 10.0, 5); // ends at x = 50
        assert!(occupancy_window(&t, (95.0, 120.0)).is_none());
    }

    #[test]
    fn window_starts_inside() {
        let t = constant_v(0.0, 10.0, 5);
        let (enter, _) = occupancy_window(&t, (0.0, 10.0)).unwrap();
        assert_eq!(enter, 0.0);
    }

    #[test]
    fn window_never_exits() {
        let t = constant_v(0.0, 10.0, 12); // ends at 120, never strictly past
        let (enter, exit) = occupancy_window(&t, (95.0, 120.0)).unwrap();
        assert!((enter - 9.5).abs() < 1e-6);
        assert!(exit.is_infinite());
    }

    fn pair_geometry() -> Vec<CrossingGeometry> {
        vec![CrossingGeometry {
            i: VehicleId(0),
            j: VehicleId(1),
            intersection: VertexId(7),
            interval_i: (95.0, 120.0),
            interval_j: (95.0, 120.0),
        }]
    }

    #[test]
    fn detect_overlapping_windows_active() {
        let mut trajs = BTreeMap::new();
        trajs.insert(VehicleId(0), constant_v(0.0, 10.0, 20));
        trajs.insert(VehicleId(1), constant_v(0.0, 10.0, 20));
        let out = detect_active(&trajs, &pair_geometry(), 0.0).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].active);
        let (e, x) = out[0].occupancy_i.unwrap();
        assert!((e - 9.5).abs() < 1e-6 && (x - 12.0).abs() < 1e-6);
    }

    #[test]
    fn detect_delayed_vehicle_inactive() {
        let mut trajs = BTreeMap::new();
        trajs.insert(VehicleId(0), constant_v(0.0, 10.0, 20));
        // Vehicle 1 runs the same speed 5 s behind.
        trajs.insert(VehicleId(1), constant_v(-50.0, 10.0, 25));
        let out = detect_active(&trajs, &pair_geometry(), 0.0).unwrap();
        assert!(!out[0].active);
        let (e, x) = out[0].occupancy_j.unwrap();
        assert!((e - 14.5).abs() < 1e-6 && (x - 17.0).abs() < 1e-6);
    }

    #[test]
    fn detect_missing_trajectory() {
        let mut trajs = BTreeMap::new();
        trajs.insert(VehicleId(0), constant_v(0.0, 10.0, 20));
        let err = detect_active(&trajs, &pair_geometry(), 0.0);
        assert!(matches!(
            err,
            Err(InteractionError::MissingTrajectory(VehicleId(1)))
        ));
    }

    #[test]
    fn detect_no_pairs() {
        let trajs = BTreeMap::new();
        assert!(detect_active(&trajs, &[], 0.0).unwrap().is_empty());
    }

    #[test]
    fn sorted_by_earliest_entry() {
        let mut trajs = BTreeMap::new();
        trajs.insert(VehicleId(0), constant_v(0.0, 10.0, 40));
        trajs.insert(VehicleId(1), constant_v(0.0, 10.0, 40));
        let geo = vec![
            CrossingGeometry {
                i: VehicleId(0),
                j: VehicleId(1),
                intersection: VertexId(2),
                interval_i: (195.0, 220.0),
                interval_j: (195.0, 220.0),
            },
            CrossingGeometry {
                i: VehicleId(0),
                j: VehicleId(1),
                intersection: VertexId(1),
                interval_i: (95.0, 120.0),
                interval_j: (95.0, 120.0),
            },
        ];
        let out = detect_active(&trajs, &geo, 0.0).unwrap();
        assert_eq!(out[0].intersection, VertexId(1));
        assert_eq!(out[1].intersection, VertexId(2));
    }

    #[test]
    fn interpolation_consistent_across_sampling() {
        // Same continuous motion sampled at dt = 1 and dt = 0.5.
        let coarse = propagate(0.0, 0.0, &[3.0, 3.0, 3.0, 0.0, 0.0, -3.0, -3.0, -3.0], 1.0);
        let fine_controls: Vec<f64> = [3.0, 3.0, 3.0, 0.0, 0.0, -3.0, -3.0, -3.0]
            .iter()
            .flat_map(|&u| [u, u])
            .collect();
        let fine = propagate(0.0, 0.0, &fine_controls, 0.5);
        for interval in [(5.0, 20.0), (10.0, 30.0), (0.0, 35.0)] {
            let (e1, x1) = occupancy_window(&coarse, interval).unwrap();
            let (e2, x2) = occupancy_window(&fine, interval).unwrap();
            assert!((e1 - e2).abs() < 1.0, "{e1} vs {e2}");
            if x1.is_finite() && x2.is_finite() {
                assert!((x1 - x2).abs() < 1.0);
            }
        }
    }

    proptest! {
        #[test]
        fn buffer_monotone(
            delay in 0.0..20.0,
            b1 in 0.0..10.0,
            extra in 0.0..10.0,
        ) {
            let b2 = b1 + extra;
            let mut trajs = BTreeMap::new();
            trajs.insert(VehicleId(0), constant_v(0.0, 10.0, 40));
            trajs.insert(VehicleId(1), constant_v(-10.0 * delay, 10.0, 60));
            let small = detect_active(&trajs, &pair_geometry(), b1).unwrap();
            let large = detect_active(&trajs, &pair_geometry(), b2).unwrap();
            prop_assert!(!small[0].active || large[0].active);
        }
    }
}
