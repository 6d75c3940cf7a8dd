//! SVG distance-time plots: one vehicle's front and rear position along its
//! path over time, with shaded bands for the intersection intervals on that
//! path and rectangles for the other vehicles' occupancy windows, colored by
//! conflict status.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::interaction::{detect_active, InteractionError};
use crate::kinematics::{Trajectory, VehicleId};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("vehicle {0} not present in the result")]
    UnknownVehicle(VehicleId),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 40.0;

/// Renders the distance-time SVG for `vehicle` from a set of final (or
/// relaxed) trajectories on `scenario`.
pub fn plot_trajectory(
    scenario: &Scenario,
    trajectories: &BTreeMap<VehicleId, Trajectory>,
    vehicle: VehicleId,
) -> Result<String, PlotError> {
    let traj = trajectories
        .get(&vehicle)
        .ok_or(PlotError::UnknownVehicle(vehicle))?;
    let params = scenario
        .params_of(vehicle)
        .ok_or(PlotError::UnknownVehicle(vehicle))?;
    let path = scenario
        .path_of(vehicle)
        .ok_or(PlotError::UnknownVehicle(vehicle))?;

    let x_max = path.total_length().max(1.0);
    let t_max = trajectories
        .values()
        .map(|t| (t.samples.len() - 1) as f64 * t.dt)
        .fold(1.0_f64, f64::max);
    let px = |t: f64| MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * (t / t_max);
    let py = |x: f64| HEIGHT - MARGIN_B - (HEIGHT - MARGIN_T - MARGIN_B) * (x / x_max);

    // This vehicle's crossings, each with its own interval and the other
    // vehicle's occupancy/activity.
    let interactions = detect_active(trajectories, &scenario.crossings(), 0.0)?;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = write!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    // Intersection bands across the full time axis.
    for n in &interactions {
        let (own, _) = match vehicle {
            v if v == n.vehicles.0 => (n.interval_i, n.interval_j),
            v if v == n.vehicles.1 => (n.interval_j, n.interval_i),
            _ => continue,
        };
        let (y_hi, y_lo) = (py(own.0), py(own.1.min(x_max)));
        let _ = write!(
            svg,
            "<rect class=\"band\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#7a4fb3\" fill-opacity=\"0.15\"/>",
            px(0.0),
            y_lo,
            px(t_max) - px(0.0),
            (y_hi - y_lo).abs()
        );
    }

    // Other vehicles' occupancy rectangles over this vehicle's interval.
    for n in &interactions {
        let (own, other_occ) = match vehicle {
            v if v == n.vehicles.0 => (n.interval_i, n.occupancy_j),
            v if v == n.vehicles.1 => (n.interval_j, n.occupancy_i),
            _ => continue,
        };
        let Some((te, tx)) = other_occ else { continue };
        let tx = tx.min(t_max);
        let (class, fill) = if n.active {
            ("occupancy active", "#c0392b")
        } else {
            ("occupancy inactive", "#27ae60")
        };
        let (y_hi, y_lo) = (py(own.0), py(own.1.min(x_max)));
        let _ = write!(
            svg,
            "<rect class=\"{class}\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" fill-opacity=\"0.35\"/>",
            px(te),
            y_lo,
            (px(tx) - px(te)).max(1.0),
            (y_hi - y_lo).abs()
        );
    }

    // Axes.
    let _ = write!(
        svg,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/><line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>",
        l = MARGIN_L,
        r = WIDTH - MARGIN_R,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B
    );
    let _ = write!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.0}\" font-size=\"13\">time s (0..{t_max:.0})</text>",
        WIDTH / 2.0 - 50.0,
        HEIGHT - 8.0
    );
    let _ = write!(
        svg,
        "<text x=\"14\" y=\"{:.0}\" font-size=\"13\" transform=\"rotate(-90 14 {:.0})\">distance m (0..{x_max:.0}) vehicle {vehicle}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    // Front and rear position polylines.
    for (class, offset) in [("front", 0.0), ("rear", -params.length)] {
        let points: Vec<String> = traj
            .samples
            .iter()
            .map(|s| {
                format!(
                    "{:.2},{:.2}",
                    px(s.k as f64 * traj.dt),
                    py((s.x + offset).clamp(0.0, x_max))
                )
            })
            .collect();
        let _ = write!(
            svg,
            "<polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"#2c5aa0\" stroke-width=\"1.5\"{}/>",
            points.join(" "),
            if class == "rear" {
                " stroke-dasharray=\"4 3\""
            } else {
                ""
            }
        );
    }
    svg.push_str("</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{make_grid, make_random_mine, make_toy_case};

    fn count(svg: &str, class: &str) -> usize {
        svg.matches(&format!("class=\"{class}\"")).count()
    }

    #[test]
    fn single_vehicle_no_bands() {
        let s = make_random_mine(7, 40, 1);
        let trajs = s.relaxed_trajectories().unwrap();
        let svg = plot_trajectory(&s, &trajs, VehicleId(0)).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&svg, "band"), 0);
        assert_eq!(count(&svg, "front"), 1);
        assert_eq!(count(&svg, "rear"), 1);
    }

    #[test]
    fn toy_case1_relaxed_three_active_rectangles() {
        let s = make_toy_case(1);
        let trajs = s.relaxed_trajectories().unwrap();
        let svg = plot_trajectory(&s, &trajs, VehicleId(1)).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(count(&svg, "band"), 3);
        assert_eq!(count(&svg, "occupancy active"), 3);
        assert_eq!(count(&svg, "occupancy inactive"), 0);
    }

    #[test]
    fn grid1_planned_rectangles_inactive() {
        let s = make_grid(1);
        let res = crate::planner::plan_full_range(&s, &Default::default()).unwrap();
        for id in [VehicleId(0), VehicleId(1)] {
            let svg = plot_trajectory(&s, &res.trajectories, id).unwrap();
            roxmltree::Document::parse(&svg).unwrap();
            assert_eq!(count(&svg, "occupancy active"), 0);
            assert_eq!(count(&svg, "occupancy inactive"), 1);
        }
    }

    #[test]
    fn unknown_vehicle_rejected() {
        let s = make_grid(1);
        let trajs = s.relaxed_trajectories().unwrap();
        assert!(matches!(
            plot_trajectory(&s, &trajs, VehicleId(99)),
            Err(PlotError::UnknownVehicle(_))
        ));
    }
}
