//! Double-integrator kinematics on a 1-D path coordinate.
//!
//! Discrete trajectories follow the trapezoidal update
//!
//! ```text
//! v_k = v_{k-1} + u_k * dt
//! x_k = x_{k-1} + (v_k + v_{k-1}) / 2 * dt
//! ```
//!
//! with controls constant within each step. The continuous minimum-time
//! trajectory between boundary states has a bang-off-bang structure
//! (accelerate, cruise, decelerate); [`min_time_tpbvp`] computes it in closed
//! form and [`sample_tpbvp`] re-profiles it onto the discrete grid so that the
//! update equations hold exactly at every step and the final sample lands
//! exactly on the goal state.

use std::fmt;

use thiserror::Error;

/// Identifier of a vehicle in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const GRAVITY: f64 = 9.81;

/// Physical limits and boundary velocities of one vehicle.
///
/// Mass and rolling resistance are stored configuration: they only enter the
/// dynamics when [`VehicleParams::apply_resistance`] is used, which shrinks
/// forward acceleration and deepens braking by `c_rr * g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Vehicle length in metres.
    pub length: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub a_min: f64,
    /// Velocity at the path start.
    pub v0: f64,
    /// Velocity required at the goal.
    pub vf: f64,
    /// Mass in tonnes.
    pub mass: f64,
    pub rolling_resistance: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        // Haul-truck defaults: 15 m long, +-3 m/s^2, 200 t, c_rr 0.08.
        VehicleParams {
            length: 15.0,
            v_max: 10.0,
            a_max: 3.0,
            a_min: -3.0,
            v0: 0.0,
            vf: 0.0,
            mass: 200.0,
            rolling_resistance: 0.08,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.a_min < 0.0 && self.a_max > 0.0) {
            return Err(KinematicsError::InvalidParams(format!(
                "acceleration bounds must satisfy a_min < 0 < a_max, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if !(self.v_max > 0.0) {
            return Err(KinematicsError::InvalidParams(format!(
                "v_max must be positive, got {}",
                self.v_max
            )));
        }
        for (name, v) in [("v0", self.v0), ("vf", self.vf)] {
            if !(0.0 <= v && v <= self.v_max) {
                return Err(KinematicsError::InvalidParams(format!(
                    "{name} = {v} outside [0, v_max = {}]",
                    self.v_max
                )));
            }
        }
        if !(self.length >= 0.0) {
            return Err(KinematicsError::InvalidParams(format!(
                "negative length {}",
                self.length
            )));
        }
        Ok(())
    }

    /// Returns a copy with rolling resistance folded into the acceleration
    /// bounds: `c_rr * g` is subtracted from forward acceleration and added to
    /// braking authority.
    pub fn apply_resistance(&self) -> VehicleParams {
        let drag = self.rolling_resistance * GRAVITY;
        VehicleParams {
            a_max: (self.a_max - drag).max(1e-6),
            a_min: self.a_min - drag,
            ..*self
        }
    }
}

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
    #[error("infeasible boundary value problem: {0}")]
    Infeasible(String),
}

/// One discrete trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub k: usize,
    pub x: f64,
    pub v: f64,
    /// Control applied over the step ending at this sample; 0 at sample 0.
    pub u: f64,
}

/// Sampled trajectory of one vehicle along its path coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// Arrival time at the goal in seconds.
    pub goal_time: f64,
}

impl Trajectory {
    /// Position at time `t` under the piecewise-constant-acceleration model.
    /// Before the first sample the start position is held; past the final
    /// sample the last position is held.
    pub fn position_at(&self, t: f64) -> f64 {
        let first = &self.samples[0];
        if t <= 0.0 {
            return first.x;
        }
        let last = self.samples.last().unwrap();
        if t >= (self.samples.len() - 1) as f64 * self.dt {
            return last.x;
        }
        let idx = (t / self.dt).floor() as usize;
        let idx = idx.min(self.samples.len() - 2);
        let s0 = &self.samples[idx];
        let s1 = &self.samples[idx + 1];
        let tau = t - idx as f64 * self.dt;
        s0.x + s0.v * tau + 0.5 * s1.u * tau * tau
    }

    pub fn velocity_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.samples[0].v;
        }
        let last = self.samples.last().unwrap();
        if t >= (self.samples.len() - 1) as f64 * self.dt {
            return last.v;
        }
        let idx = ((t / self.dt).floor() as usize).min(self.samples.len() - 2);
        let s0 = &self.samples[idx];
        let s1 = &self.samples[idx + 1];
        s0.v + s1.u * (t - idx as f64 * self.dt)
    }

    pub fn final_position(&self) -> f64 {
        self.samples.last().unwrap().x
    }

    /// Checks the discrete update equations and the velocity/acceleration
    /// bounds at every sample.
    pub fn validate(&self, params: &VehicleParams) -> Result<(), KinematicsError> {
        const EQ_TOL: f64 = 1e-9;
        const BOUND_TOL: f64 = 1e-6;
        for w in self.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let v_res = (b.v - (a.v + b.u * self.dt)).abs();
            let x_res = (b.x - (a.x + 0.5 * (a.v + b.v) * self.dt)).abs();
            if v_res > EQ_TOL || x_res > EQ_TOL {
                return Err(KinematicsError::Infeasible(format!(
                    "dynamics residual at step {}: dv {v_res:e}, dx {x_res:e}",
                    b.k
                )));
            }
            if b.u < params.a_min - BOUND_TOL || b.u > params.a_max + BOUND_TOL {
                return Err(KinematicsError::Infeasible(format!(
                    "control {} at step {} outside [{}, {}]",
                    b.u, b.k, params.a_min, params.a_max
                )));
            }
        }
        for s in &self.samples {
            if s.v < -BOUND_TOL || s.v > params.v_max + BOUND_TOL {
                return Err(KinematicsError::Infeasible(format!(
                    "velocity {} at step {} outside [0, {}]",
                    s.v, s.k, params.v_max
                )));
            }
        }
        Ok(())
    }
}

/// Applies the discrete update step by step. Sample 0 is `(0, x0, v0, 0)`.
pub fn propagate(x0: f64, v0: f64, controls: &[f64], dt: f64) -> Trajectory {
    assert!(dt > 0.0, "dt must be positive");
    let mut samples = Vec::with_capacity(controls.len() + 1);
    samples.push(Sample {
        k: 0,
        x: x0,
        v: v0,
        u: 0.0,
    });
    let (mut x, mut v) = (x0, v0);
    for (i, &u) in controls.iter().enumerate() {
        let v_next = v + u * dt;
        x += 0.5 * (v + v_next) * dt;
        v = v_next;
        samples.push(Sample {
            k: i + 1,
            x,
            v,
            u,
        });
    }
    let goal_time = controls.len() as f64 * dt;
    Trajectory {
        dt,
        samples,
        goal_time,
    }
}

/// One constant-acceleration phase of a continuous profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub accel: f64,
    pub duration: f64,
}

/// Continuous minimum-time profile between boundary states, with the limits it
/// was planned under (needed to re-profile onto a discrete grid).
#[derive(Debug, Clone, PartialEq)]
pub struct MotionProfile {
    pub x0: f64,
    pub v0: f64,
    pub vf: f64,
    /// Distance covered by the profile.
    pub distance: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub a_min: f64,
    pub phases: Vec<Phase>,
    pub total_time: f64,
}

impl MotionProfile {
    pub fn position_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.x0;
        }
        let (mut x, mut v, mut elapsed) = (self.x0, self.v0, 0.0);
        for p in &self.phases {
            if t < elapsed + p.duration {
                let tau = t - elapsed;
                return x + v * tau + 0.5 * p.accel * tau * tau;
            }
            x += v * p.duration + 0.5 * p.accel * p.duration * p.duration;
            v += p.accel * p.duration;
            elapsed += p.duration;
        }
        x
    }

    pub fn velocity_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.v0;
        }
        let (mut v, mut elapsed) = (self.v0, 0.0);
        for p in &self.phases {
            if t < elapsed + p.duration {
                return v + p.accel * (t - elapsed);
            }
            v += p.accel * p.duration;
            elapsed += p.duration;
        }
        v
    }

    /// Earliest time at which the profile reaches position `x` (positions are
    /// nondecreasing). `None` if the profile ends before `x`.
    pub fn time_at_position(&self, x: f64) -> Option<f64> {
        if x <= self.x0 {
            return Some(0.0);
        }
        if x > self.x0 + self.distance + 1e-9 {
            return None;
        }
        let (mut px, mut v, mut elapsed) = (self.x0, self.v0, 0.0);
        for p in &self.phases {
            let end_x = px + v * p.duration + 0.5 * p.accel * p.duration * p.duration;
            if x <= end_x + 1e-12 {
                // Solve px + v*tau + a/2*tau^2 = x for the smallest tau >= 0.
                let d = x - px;
                let tau = if p.accel.abs() < 1e-12 {
                    if v.abs() < 1e-12 {
                        0.0
                    } else {
                        d / v
                    }
                } else {
                    let disc = (v * v + 2.0 * p.accel * d).max(0.0);
                    if p.accel > 0.0 {
                        (disc.sqrt() - v) / p.accel
                    } else {
                        // Decelerating: the first root is the crossing.
                        (v - disc.sqrt()) / (-p.accel)
                    }
                };
                return Some(elapsed + tau.clamp(0.0, p.duration));
            }
            px = end_x;
            v += p.accel * p.duration;
            elapsed += p.duration;
        }
        Some(self.total_time)
    }
}

/// Minimum-time bang-off-bang profile from rest position 0 to `x_f`, from
/// velocity `v0` to `vf`, under the limits in `params`.
pub fn min_time_tpbvp(
    x_f: f64,
    v0: f64,
    vf: f64,
    params: &VehicleParams,
) -> Result<MotionProfile, KinematicsError> {
    params.validate()?;
    let check = VehicleParams {
        v0,
        vf,
        ..*params
    };
    check.validate()?;
    if x_f < 0.0 {
        return Err(KinematicsError::Infeasible(format!(
            "negative distance {x_f}"
        )));
    }
    let a_up = params.a_max;
    let a_down = -params.a_min;
    const TOL: f64 = 1e-9;

    // Minimum distances for pure acceleration / braking between v0 and vf.
    if vf > v0 {
        let d_need = (vf * vf - v0 * v0) / (2.0 * a_up);
        if x_f < d_need - TOL {
            return Err(KinematicsError::Infeasible(format!(
                "cannot reach vf {vf} from v0 {v0} within {x_f} m"
            )));
        }
    } else if v0 > vf {
        let d_need = (v0 * v0 - vf * vf) / (2.0 * a_down);
        if x_f < d_need - TOL {
            return Err(KinematicsError::Infeasible(format!(
                "cannot brake to vf {vf} from v0 {v0} within {x_f} m"
            )));
        }
    }

    let mut phases = Vec::new();
    let vp2 = (2.0 * a_up * a_down * x_f + a_down * v0 * v0 + a_up * vf * vf) / (a_up + a_down);
    let vp = vp2.max(0.0).sqrt().max(v0.max(vf));
    if vp <= params.v_max + TOL {
        // Triangular (or degenerate) profile.
        let t1 = (vp - v0) / a_up;
        let t2 = (vp - vf) / a_down;
        if t1 > TOL {
            phases.push(Phase {
                accel: a_up,
                duration: t1,
            });
        }
        if t2 > TOL {
            phases.push(Phase {
                accel: -a_down,
                duration: t2,
            });
        }
    } else {
        // Trapezoidal profile with a cruise at v_max.
        let vm = params.v_max;
        let d1 = (vm * vm - v0 * v0) / (2.0 * a_up);
        let d3 = (vm * vm - vf * vf) / (2.0 * a_down);
        let d2 = (x_f - d1 - d3).max(0.0);
        let t1 = (vm - v0) / a_up;
        let t3 = (vm - vf) / a_down;
        if t1 > TOL {
            phases.push(Phase {
                accel: a_up,
                duration: t1,
            });
        }
        if d2 > TOL {
            phases.push(Phase {
                accel: 0.0,
                duration: d2 / vm,
            });
        }
        if t3 > TOL {
            phases.push(Phase {
                accel: -a_down,
                duration: t3,
            });
        }
    }
    // Degenerate constant-velocity case (v0 == vf == vp).
    if phases.is_empty() && x_f > TOL {
        if v0 <= TOL {
            return Err(KinematicsError::Infeasible(format!(
                "zero-velocity profile cannot cover {x_f} m"
            )));
        }
        phases.push(Phase {
            accel: 0.0,
            duration: x_f / v0,
        });
    }
    let total_time = phases.iter().map(|p| p.duration).sum();
    Ok(MotionProfile {
        x0: 0.0,
        v0,
        vf,
        distance: x_f,
        v_max: params.v_max,
        a_max: params.a_max,
        a_min: params.a_min,
        phases,
        total_time,
    })
}

/// Discrete minimum-time segment between boundary states.
///
/// Returns the velocity sequence `v_0..v_N` for the smallest horizon `N` such
/// that distance `d` is coverable exactly under the discrete dynamics. The
/// shape is the velocity upper envelope clamped at a cruise value chosen so
/// the trapezoidal sum lands exactly on `d`.
pub(crate) fn discrete_min_time_velocities(
    d: f64,
    v0: f64,
    vf: f64,
    v_max: f64,
    a_max: f64,
    a_min: f64,
    dt: f64,
) -> Result<Vec<f64>, KinematicsError> {
    assert!(dt > 0.0);
    let a_up = a_max * dt;
    let a_down = -a_min * dt;
    const TOL: f64 = 1e-9;
    if d < -TOL {
        return Err(KinematicsError::Infeasible(format!("negative distance {d}")));
    }
    let d = d.max(0.0);
    if d <= TOL && (v0 - vf).abs() <= TOL {
        return Ok(vec![v0]);
    }
    let upper = |n: usize, k: usize| -> f64 {
        (v0 + k as f64 * a_up)
            .min(vf + (n - k) as f64 * a_down)
            .min(v_max)
    };
    let lower = |n: usize, k: usize| -> f64 {
        (v0 - k as f64 * a_down)
            .max(vf - (n - k) as f64 * a_up)
            .max(0.0)
    };
    let trapezoid = |vs: &[f64]| -> f64 {
        vs.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
    };

    let n_cap = 16 + 4.0_f64.max(2.0 * d / (v_max * dt) + 2.0 * v_max / (a_up.min(a_down)))
        .ceil() as usize;
    let mut horizon = None;
    for n in 1..=n_cap {
        // Boundary velocities must be mutually reachable in n steps.
        if vf > v0 + n as f64 * a_up + TOL || vf < v0 - n as f64 * a_down - TOL {
            continue;
        }
        let up: Vec<f64> = (0..=n).map(|k| upper(n, k)).collect();
        let lo: Vec<f64> = (0..=n).map(|k| lower(n, k)).collect();
        if up
            .iter()
            .zip(&lo)
            .any(|(u, l)| u + TOL < *l)
        {
            continue;
        }
        let d_max = trapezoid(&up);
        let d_min = trapezoid(&lo);
        if d_min <= d + TOL && d <= d_max + TOL {
            horizon = Some((n, up, lo));
            break;
        }
    }
    let Some((n, up, lo)) = horizon else {
        return Err(KinematicsError::Infeasible(format!(
            "no horizon up to {n_cap} steps covers distance {d}"
        )));
    };

    // Clamp the envelope at cruise value c; the covered distance is piecewise
    // linear and nondecreasing in c, so bisection plus one Newton polish pins
    // the landing error near machine precision.
    let shape = |c: f64| -> Vec<f64> {
        (0..=n).map(|k| c.clamp(lo[k], up[k])).collect()
    };
    let (mut clo, mut chi) = (0.0, v_max);
    for _ in 0..100 {
        let mid = 0.5 * (clo + chi);
        if trapezoid(&shape(mid)) < d {
            clo = mid;
        } else {
            chi = mid;
        }
    }
    let mut c = 0.5 * (clo + chi);
    for _ in 0..3 {
        let vs = shape(c);
        let err = d - trapezoid(&vs);
        if err.abs() < 1e-12 {
            break;
        }
        let slope: f64 = (0..=n)
            .map(|k| {
                let active = lo[k] < c && c < up[k];
                if !active {
                    return 0.0;
                }
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * dt
            })
            .sum();
        if slope <= 0.0 {
            break;
        }
        c = (c + err / slope).clamp(0.0, v_max);
    }
    Ok(shape(c))
}

/// Re-profiles a continuous minimum-time profile onto the discrete grid.
///
/// The result satisfies the discrete update equations exactly, lands exactly
/// on the goal state at the final sample, and uses the smallest horizon the
/// discrete dynamics permit (at most one step beyond the continuous optimum).
pub fn sample_tpbvp(profile: &MotionProfile, dt: f64) -> Result<Trajectory, KinematicsError> {
    let vs = discrete_min_time_velocities(
        profile.distance,
        profile.v0,
        profile.vf,
        profile.v_max,
        profile.a_max,
        profile.a_min,
        dt,
    )?;
    let controls: Vec<f64> = vs.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    let mut traj = propagate(profile.x0, profile.v0, &controls, dt);
    traj.goal_time = (vs.len() - 1) as f64 * dt;
    Ok(traj)
}
