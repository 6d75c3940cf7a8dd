//! Minimum-time, collision-free trajectory planning for vehicle fleets on
//! fixed paths through a shared road network.
//!
//! Vehicles follow precomputed shortest paths and interact only where their
//! paths cross at intersections. Three planners resolve those interactions:
//!
//! * an exact MILP planner (monolithic, or iterative with lazily added
//!   avoidance constraints),
//! * a fast sequential avoidance heuristic that delays one vehicle of the
//!   earliest conflicting pair at a time,
//! * a reactive resolver that imitates stop-and-proceed driving.
//!
//! The [`bench`] module and the `fleet` binary run scenario/planner matrices
//! and emit CSV tables and SVG distance-time plots.

pub mod bench;
pub mod config;
pub mod interaction;
pub mod kinematics;
pub mod model;
pub mod network;
pub mod planner;
pub mod plot;
pub mod scenario;
pub mod solver;

pub use interaction::{detect_active, occupancy_window, Interaction};
pub use kinematics::{min_time_tpbvp, propagate, sample_tpbvp, MotionProfile, Trajectory, VehicleId, VehicleParams};
pub use network::{crossing_intervals, PathPlan, RoadNetwork, VertexId};
pub use planner::{
    plan_full_range, plan_heuristic, plan_iterative, plan_reactive, PlanError, PlanResult,
    PlannerConfig, TargetMode,
};
pub use scenario::Scenario;
