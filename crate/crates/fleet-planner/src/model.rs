//! Solver-agnostic MILP construction.
//!
//! The model for one vehicle over horizon `K` contains states `x_k, v_k`
//! (k = 0..K), controls `u_k` (k = 1..K), the trapezoidal dynamics as
//! equality rows, and goal binaries `b_k` with big-M rows that force
//! `x_k = x_f, v_k = v_f` at the selected arrival step. The time objective is
//! `sum dt*k*b_k`. Pairwise intersection avoidance adds, per targeted step,
//! four binaries `c_1..c_4` with big-M rows keeping at least one vehicle
//! outside its occupancy interval.
//!
//! Avoidance and waypoint rows are tightened by a small epsilon so that a
//! vehicle sitting exactly on an interval boundary in an LP vertex solution
//! does not register as still occupying the interval under the closed-interval
//! overlap test used by detection.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::interaction::CrossingGeometry;
use crate::kinematics::{min_time_tpbvp, propagate, Trajectory, VehicleId, VehicleParams};
use crate::network::VertexId;

/// Spatial tightening applied to avoidance and waypoint rows, in metres.
pub const AVOIDANCE_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub obj: f64,
    pub binary: bool,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    /// Sparse `(variable index, coefficient)` terms.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Per-vehicle variable index maps.
#[derive(Debug, Clone)]
pub struct VehicleVars {
    /// `x_0..x_K`.
    pub x: Vec<usize>,
    /// `v_0..v_K`.
    pub v: Vec<usize>,
    /// `u_1..u_K` (index `k-1`).
    pub u: Vec<usize>,
    /// `b_1..b_K` (index `k-1`); empty under the distance objective.
    pub b: Vec<usize>,
    pub x_f: f64,
    pub params: VehicleParams,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("horizon {got} steps * dt is below the minimum-time bound {needed:.3} s")]
    HorizonTooShort { needed: f64, got: usize
    },
    #[error("vehicle {0} not in model")]
    UnknownVehicle(VehicleId),
    #[error("vehicle {0} already in model")]
    DuplicateVehicle(VehicleId),
    #[error("goal window for vehicle {0} leaves no arrival step free")]
    EmptyWindow(VehicleId),
    #[error("distance objective requires zero final velocity, vehicle {0} has vf != 0")]
    NonzeroFinalVelocity(VehicleId),
    #[error("step {step} outside horizon {horizon}")]
    StepOutOfRange { step: usize, horizon: usize },
    #[error(transparent)]
    Kinematics(#[from] crate::kinematics::KinematicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Eq-style time objective `sum dt*k*b_k`.
    Time,
    /// Distance-to-goal objective `sum (x_f - x_k)`.
    Distance,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub dt: f64,
    pub horizon: usize,
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    /// Constant added to the linear objective.
    pub objective_offset: f64,
    /// All attainable objective values are multiples of this (used by
    /// branch-and-bound to round bounds up); `None` when no such granularity
    /// holds.
    pub objective_granularity: Option<f64>,
    pub objective: Objective,
    vehicles: BTreeMap<VehicleId, VehicleVars>,
    /// `(i, j, intersection, step)` tuples already covered by avoidance rows.
    avoidance_steps: BTreeSet<(VehicleId, VehicleId, VertexId, usize)>,
    /// Per-crossing step -> the step's four selector binaries, used to link
    /// consecutive steps with monotonicity rows.
    avoidance_cvars: BTreeMap<(VehicleId, VehicleId, VertexId), BTreeMap<usize, [usize; 4]>>,
}

impl MilpModel {
    pub fn new(dt: f64, horizon: usize) -> Self {
        assert!(dt > 0.0 && horizon >= 1);
        MilpModel {
            dt,
            horizon,
            vars: Vec::new(),
            rows: Vec::new(),
            objective_offset: 0.0,
            objective_granularity: Some(dt),
            objective: Objective::Time,
            vehicles: BTreeMap::new(),
            avoidance_steps: BTreeSet::new(),
            avoidance_cvars: BTreeMap::new(),
        }
    }

    pub fn vehicle(&self, id: VehicleId) -> Result<&VehicleVars, ModelError> {
        self.vehicles.get(&id).ok_or(ModelError::UnknownVehicle(id))
    }

    pub fn vehicle_ids(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.vehicles.keys().copied()
    }

    fn add_var(&mut self, name: String, lb: f64, ub: f64, obj: f64, binary: bool) -> usize {
        self.vars.push(Variable {
            name,
            lb,
            ub,
            obj,
            binary,
        });
        self.vars.len() - 1
    }

    fn add_row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row {
            name,
            terms,
            sense,
            rhs,
        });
    }

    /// Adds one vehicle's dynamics, bounds, goal binaries, and time-objective
    /// terms. `x_f` is the vehicle's path length.
    pub fn add_vehicle(
        &mut self,
        id: VehicleId,
        x_f: f64,
        params: &VehicleParams,
    ) -> Result<(), ModelError> {
        if self.vehicles.contains_key(&id) {
            return Err(ModelError::DuplicateVehicle(id));
        }
        params.validate()?;
        let t_min = min_time_tpbvp(x_f, params.v0, params.vf, params)?.total_time;
        let horizon_s = self.horizon as f64 * self.dt;
        if horizon_s < t_min {
            return Err(ModelError::HorizonTooShort {
                needed: t_min,
                got: self.horizon,
            });
        }
        let k_max = self.horizon;
        let mut vv = VehicleVars {
            x: Vec::with_capacity(k_max + 1),
            v: Vec::with_capacity(k_max + 1),
            u: Vec::with_capacity(k_max),
            b: Vec::with_capacity(k_max),
            x_f,
            params: *params,
        };
        // Discrete reachability envelopes tighten the variable bounds (and
        // with them the LP relaxation): at step k the vehicle can be no
        // further than the max-acceleration envelope allows, and no nearer to
        // the start than what still lets it cover the rest by step K.
        let dt = self.dt;
        let v_fwd: Vec<f64> = (0..=k_max)
            .map(|k| (params.v0 + k as f64 * params.a_max * dt).min(params.v_max))
            .collect();
        let mut d_fwd = vec![0.0];
        for k in 1..=k_max {
            d_fwd.push(d_fwd[k - 1] + 0.5 * (v_fwd[k - 1] + v_fwd[k]) * dt);
        }
        let v_rev: Vec<f64> = (0..=k_max)
            .map(|m| (params.vf - m as f64 * params.a_min * dt).min(params.v_max))
            .collect();
        let mut d_rev = vec![0.0];
        for m in 1..=k_max {
            d_rev.push(d_rev[m - 1] + 0.5 * (v_rev[m - 1] + v_rev[m]) * dt);
        }
        for k in 0..=k_max {
            let (xlb, xub) = if k == 0 {
                (0.0, 0.0)
            } else {
                (
                    (x_f - d_rev[k_max - k]).max(0.0),
                    d_fwd[k].min(x_f),
                )
            };
            vv.x
                .push(self.add_var(format!("x_{id}_{k}"), xlb, xub, 0.0, false));
        }
        for k in 0..=k_max {
            let (vlb, vub) = if k == 0 {
                (params.v0, params.v0)
            } else {
                (0.0, v_fwd[k].min(v_rev[k_max - k]))
            };
            vv.v
                .push(self.add_var(format!("v_{id}_{k}"), vlb, vub, 0.0, false));
        }
        for k in 1..=k_max {
            vv.u.push(self.add_var(
                format!("u_{id}_{k}"),
                params.a_min,
                params.a_max,
                0.0,
                false,
            ));
        }
        for k in 1..=k_max {
            vv.b.push(self.add_var(
                format!("b_{id}_{k}"),
                0.0,
                1.0,
                self.dt * k as f64,
                true,
            ));
        }

        // Dynamics.
        for k in 1..=k_max {
            self.add_row(
                format!("dynv_{id}_{k}"),
                vec![(vv.v[k], 1.0), (vv.v[k - 1], -1.0), (vv.u[k - 1], -self.dt)],
                Sense::Eq,
                0.0,
            );
            self.add_row(
                format!("dynx_{id}_{k}"),
                vec![
                    (vv.x[k], 1.0),
                    (vv.x[k - 1], -1.0),
                    (vv.v[k], -0.5 * self.dt),
                    (vv.v[k - 1], -0.5 * self.dt),
                ],
                Sense::Eq,
                0.0,
            );
        }

        // Goal big-M rows: when b_k = 1 the state at k equals the goal state.
        let m_x = x_f.max(1.0);
        let m_v = params.v_max;
        for k in 1..=k_max {
            let b = vv.b[k - 1];
            self.add_row(
                format!("goalxlo_{id}_{k}"),
                vec![(vv.x[k], 1.0), (b, -m_x)],
                Sense::Ge,
                x_f - m_x,
            );
            self.add_row(
                format!("goalxhi_{id}_{k}"),
                vec![(vv.x[k], 1.0), (b, m_x)],
                Sense::Le,
                x_f + m_x,
            );
            self.add_row(
                format!("goalvlo_{id}_{k}"),
                vec![(vv.v[k], 1.0), (b, -m_v)],
                Sense::Ge,
                params.vf - m_v,
            );
            self.add_row(
                format!("goalvhi_{id}_{k}"),
                vec![(vv.v[k], 1.0), (b, m_v)],
                Sense::Le,
                params.vf + m_v,
            );
        }
        // Exactly one arrival step.
        self.add_row(
            format!("goalsel_{id}"),
            vv.b.iter().map(|&i| (i, 1.0)).collect(),
            Sense::Eq,
            1.0,
        );
        // The vehicle holds the goal state after arrival (otherwise occupancy
        // past the arrival step would be unconstrained).
        for k in 1..=k_max {
            // With S = sum of b up to k: x_k >= x_f - M(1-S), v_k within
            // vf -+ M(1-S). Rows bind only once the vehicle has arrived.
            let mut terms = vec![(vv.x[k], 1.0)];
            terms.extend(vv.b[..k].iter().map(|&i| (i, -m_x)));
            self.add_row(format!("holdx_{id}_{k}"), terms, Sense::Ge, x_f - m_x);
            let mut terms = vec![(vv.v[k], 1.0)];
            terms.extend(vv.b[..k].iter().map(|&i| (i, m_v)));
            self.add_row(
                format!("holdvhi_{id}_{k}"),
                terms,
                Sense::Le,
                params.vf + m_v,
            );
            let mut terms = vec![(vv.v[k], 1.0)];
            terms.extend(vv.b[..k].iter().map(|&i| (i, -m_v)));
            self.add_row(
                format!("holdvlo_{id}_{k}"),
                terms,
                Sense::Ge,
                params.vf - m_v,
            );
        }

        self.vehicles.insert(id, vv);
        Ok(())
    }

    /// Adds the avoidance disjunction for one crossing at the given steps:
    /// per step, four binaries and four big-M rows plus the row forbidding
    /// all four escapes to be relaxed at once. Steps already covered for this
    /// crossing are skipped. Returns the number of steps newly covered.
    ///
    /// Each escape certifies the vehicle clear of its interval for the whole
    /// segment `(k-1, k]`, not just at the sample: "before" rows bound
    /// `x_k` (positions are nondecreasing, so the whole segment is before the
    /// interval) and "after" rows bound `x_{k-1}`. Purely per-sample escapes
    /// would let two vehicles swap through an intersection between samples —
    /// continuously overlapping while separated at every sampled instant —
    /// which the shared continuous-time safety check rightly rejects.
    pub fn add_avoidance(
        &mut self,
        geo: &CrossingGeometry,
        steps: &[usize],
    ) -> Result<usize, ModelError> {
        let vi = self.vehicle(geo.i)?.clone();
        let vj = self.vehicle(geo.j)?.clone();
        let (xis, xie) = geo.interval_i;
        let (xjs, xje) = geo.interval_j;
        // Per-row tight big-M: the "before" row needs to absorb at most the
        // distance from the interval start to the path end, the "after" row
        // at most the interval end itself.
        let m_i_before = (vi.x_f - xis + AVOIDANCE_EPS).max(1.0);
        let m_i_after = (xie + AVOIDANCE_EPS).max(1.0);
        let m_j_before = (vj.x_f - xjs + AVOIDANCE_EPS).max(1.0);
        let m_j_after = (xje + AVOIDANCE_EPS).max(1.0);
        let mut added = 0;
        for &k in steps {
            if k < 1 || k > self.horizon {
                return Err(ModelError::StepOutOfRange {
                    step: k,
                    horizon: self.horizon,
                });
            }
            // Presolve: if the variable bounds already prove one vehicle
            // clear of its interval throughout segment (k-1, k], the
            // disjunction is satisfied by every feasible solution and the
            // step's rows are redundant.
            let implied = self.vars[vi.x[k]].ub <= xis - AVOIDANCE_EPS + 1e-9
                || self.vars[vi.x[k - 1]].lb >= xie + AVOIDANCE_EPS - 1e-9
                || self.vars[vj.x[k]].ub <= xjs - AVOIDANCE_EPS + 1e-9
                || self.vars[vj.x[k - 1]].lb >= xje + AVOIDANCE_EPS - 1e-9;
            if implied {
                continue;
            }
            let key = (geo.i, geo.j, geo.intersection, k);
            if !self.avoidance_steps.insert(key) {
                continue;
            }
            added += 1;
            let tag = format!("{}_{}_{}_{}", geo.i, geo.j, geo.intersection, k);
            let c: Vec<usize> = (1..=4)
                .map(|l| self.add_var(format!("c_{tag}_{l}"), 0.0, 1.0, 0.0, true))
                .collect();
            // c_l = 0 enforces the corresponding escape; c_l = 1 relaxes it.
            self.add_row(
                format!("avibefore_{tag}"),
                vec![(vi.x[k], 1.0), (c[0], -m_i_before)],
                Sense::Le,
                xis - AVOIDANCE_EPS,
            );
            self.add_row(
                format!("aviafter_{tag}"),
                vec![(vi.x[k - 1], 1.0), (c[1], m_i_after)],
                Sense::Ge,
                xie + AVOIDANCE_EPS,
            );
            self.add_row(
                format!("avjbefore_{tag}"),
                vec![(vj.x[k], 1.0), (c[2], -m_j_before)],
                Sense::Le,
                xjs - AVOIDANCE_EPS,
            );
            self.add_row(
                format!("avjafter_{tag}"),
                vec![(vj.x[k - 1], 1.0), (c[3], m_j_after)],
                Sense::Ge,
                xje + AVOIDANCE_EPS,
            );
            self.add_row(
                format!("avsel_{tag}"),
                c.iter().map(|&i| (i, 1.0)).collect(),
                Sense::Le,
                3.0,
            );
            // Positions are nondecreasing (v >= 0), so "still before the
            // interval" can only switch off over time and "already past it"
            // can only switch on. Linking consecutive covered steps with
            // these implications never cuts an integer trajectory but
            // tightens the relaxation considerably.
            let cmap = self
                .avoidance_cvars
                .entry((geo.i, geo.j, geo.intersection))
                .or_default();
            let carr = [c[0], c[1], c[2], c[3]];
            let prev = cmap.range(..k).next_back().map(|(&kp, &cs)| (kp, cs));
            let next = cmap.range(k + 1..).next().map(|(&kn, &cs)| (kn, cs));
            cmap.insert(k, carr);
            let mut link = |lo: [usize; 4], lo_k: usize, hi: [usize; 4], hi_k: usize| {
                // before-rows relax monotonically: c_before(lo) <= c_before(hi)
                for l in [0, 2] {
                    self.rows.push(Row {
                        name: format!("avchain{l}_{}_{}_{}_{}_{}", geo.i, geo.j, geo.intersection, lo_k, hi_k),
                        terms: vec![(lo[l], 1.0), (hi[l], -1.0)],
                        sense: Sense::Le,
                        rhs: 0.0,
                    });
                }
                // after-rows enforce monotonically: c_after(hi) <= c_after(lo)
                for l in [1, 3] {
                    self.rows.push(Row {
                        name: format!("avchain{l}_{}_{}_{}_{}_{}", geo.i, geo.j, geo.intersection, lo_k, hi_k),
                        terms: vec![(hi[l], 1.0), (lo[l], -1.0)],
                        sense: Sense::Le,
                        rhs: 0.0,
                    });
                }
            };
            if let Some((kp, cs)) = prev {
                link(cs, kp, carr, k);
            }
            if let Some((kn, cs)) = next {
                link(carr, k, cs, kn);
            }
        }
        Ok(added)
    }

    /// Number of distinct (crossing, step) tuples covered by avoidance rows.
    pub fn avoidance_step_count(&self) -> usize {
        self.avoidance_steps.len()
    }

    /// Fixes goal binaries to zero outside `[lb_step, ub_step]`.
    pub fn apply_goal_window(
        &mut self,
        vehicle: VehicleId,
        lb_step: usize,
        ub_step: usize,
    ) -> Result<(), ModelError> {
        let vv = self.vehicle(vehicle)?.clone();
        if vv.b.is_empty() {
            return Err(ModelError::UnknownVehicle(vehicle));
        }
        let mut free = 0;
        for (idx, &var) in vv.b.iter().enumerate() {
            let k = idx + 1;
            if k < lb_step || k > ub_step {
                self.vars[var].ub = 0.0;
            } else if self.vars[var].ub > 0.0 {
                free += 1;
            }
        }
        if free == 0 {
            return Err(ModelError::EmptyWindow(vehicle));
        }
        // Arrival by ub_step lets the reachability envelopes anchor there
        // instead of at the horizon, tightening the variable bounds: after
        // ub_step the vehicle holds the goal state, and before it the vehicle
        // must stay close enough to the goal to still arrive in time.
        let anchor = ub_step.min(self.horizon);
        let p = vv.params;
        let dt = self.dt;
        let v_rev: Vec<f64> = (0..=anchor)
            .map(|m| (p.vf - m as f64 * p.a_min * dt).min(p.v_max))
            .collect();
        let mut d_rev = vec![0.0];
        for m in 1..=anchor {
            d_rev.push(d_rev[m - 1] + 0.5 * (v_rev[m - 1] + v_rev[m]) * dt);
        }
        for k in 1..=self.horizon {
            let (xv, vv_var) = (vv.x[k], vv.v[k]);
            if k >= anchor {
                self.vars[xv].lb = self.vars[xv].lb.max(vv.x_f);
                self.vars[xv].ub = self.vars[xv].ub.min(vv.x_f);
                self.vars[vv_var].lb = self.vars[vv_var].lb.max(p.vf);
                self.vars[vv_var].ub = self.vars[vv_var].ub.min(p.vf);
            } else {
                let m = anchor - k;
                self.vars[xv].lb = self.vars[xv].lb.max((vv.x_f - d_rev[m]).max(0.0));
                self.vars[vv_var].ub = self.vars[vv_var].ub.min(v_rev[m]);
            }
        }
        Ok(())
    }

    /// Number of goal binaries not fixed to zero.
    pub fn free_goal_binaries(&self) -> usize {
        self.vehicles
            .values()
            .flat_map(|vv| &vv.b)
            .filter(|&&i| self.vars[i].ub > 0.0)
            .count()
    }

    pub fn binary_count(&self) -> usize {
        self.vars.iter().filter(|v| v.binary).count()
    }

    /// Replaces the time objective with the distance-to-goal objective
    /// `sum_i sum_k (x_f - x_k)`: goal binaries and their rows are removed
    /// and terminal rows pin the goal state at the horizon. When `windows`
    /// is given, the penalty only covers each vehicle's window steps.
    pub fn build_distance_objective(
        &mut self,
        windows: Option<&BTreeMap<VehicleId, (usize, usize)>>,
    ) -> Result<(), ModelError> {
        for (&id, vv) in &self.vehicles {
            if vv.params.vf.abs() > 1e-12 {
                return Err(ModelError::NonzeroFinalVelocity(id));
            }
        }
        // Drop every goal binary and every row referencing one.
        let b_vars: BTreeSet<usize> = self
            .vehicles
            .values()
            .flat_map(|vv| vv.b.iter().copied())
            .collect();
        self.rows
            .retain(|r| !r.terms.iter().any(|(i, _)| b_vars.contains(i)));
        let mut new_index = vec![usize::MAX; self.vars.len()];
        let mut kept = Vec::with_capacity(self.vars.len() - b_vars.len());
        for (i, var) in self.vars.drain(..).enumerate() {
            if !b_vars.contains(&i) {
                new_index[i] = kept.len();
                kept.push(var);
            }
        }
        self.vars = kept;
        for row in &mut self.rows {
            for term in &mut row.terms {
                term.0 = new_index[term.0];
            }
        }
        for vv in self.vehicles.values_mut() {
            vv.b.clear();
            for idx in vv.x.iter_mut().chain(&mut vv.v).chain(&mut vv.u) {
                *idx = new_index[*idx];
            }
        }
        for var in &mut self.vars {
            var.obj = 0.0;
        }
        self.objective_offset = 0.0;

        let vehicles: Vec<(VehicleId, VehicleVars)> =
            self.vehicles.iter().map(|(k, v)| (*k, v.clone())).collect();
        for (id, vv) in vehicles {
            let (lo, hi) = windows
                .and_then(|w| w.get(&id).copied())
                .unwrap_or((1, self.horizon));
            for k in lo..=hi.min(self.horizon) {
                self.vars[vv.x[k]].obj = -1.0;
                self.objective_offset += vv.x_f;
            }
            // Terminal pinning keeps arrival within the horizon well defined.
            self.add_row(
                format!("term_x_{id}"),
                vec![(vv.x[self.horizon], 1.0)],
                Sense::Eq,
                vv.x_f,
            );
            self.add_row(
                format!("term_v_{id}"),
                vec![(vv.v[self.horizon], 1.0)],
                Sense::Eq,
                0.0,
            );
        }
        self.objective = Objective::Distance;
        self.objective_granularity = None;
        Ok(())
    }

    /// Adds a single waypoint row `x_{vehicle,k} <= x_limit` (or `=`),
    /// tightened by the avoidance epsilon for the `<=` sense.
    pub fn add_waypoint(
        &mut self,
        vehicle: VehicleId,
        k: usize,
        x_limit: f64,
        sense: Sense,
    ) -> Result<(), ModelError> {
        let vv = self.vehicle(vehicle)?;
        if k > self.horizon {
            return Err(ModelError::StepOutOfRange {
                step: k,
                horizon: self.horizon,
            });
        }
        let var = vv.x[k];
        let rhs = match sense {
            Sense::Le => x_limit - AVOIDANCE_EPS,
            _ => x_limit,
        };
        self.add_row(
            format!("wp_{vehicle}_{k}_{}", self.rows.len()),
            vec![(var, 1.0)],
            sense,
            rhs,
        );
        Ok(())
    }

    /// Rebuilds a vehicle's trajectory from a solved assignment by
    /// re-propagating the controls, so the discrete dynamics hold exactly.
    pub fn decode_trajectory(
        &self,
        vehicle: VehicleId,
        assignment: &[f64],
    ) -> Result<Trajectory, ModelError> {
        let vv = self.vehicle(vehicle)?;
        let controls: Vec<f64> = vv.u.iter().map(|&i| assignment[i]).collect();
        let mut traj = propagate(0.0, vv.params.v0, &controls, self.dt);
        traj.goal_time = self.arrival_step(vehicle, assignment)? as f64 * self.dt;
        Ok(traj)
    }

    /// Arrival step decoded from the goal binaries, or, under the distance
    /// objective, the first step at the goal state.
    pub fn arrival_step(
        &self,
        vehicle: VehicleId,
        assignment: &[f64],
    ) -> Result<usize, ModelError> {
        let vv = self.vehicle(vehicle)?;
        if !vv.b.is_empty() {
            for (idx, &var) in vv.b.iter().enumerate() {
                if assignment[var] > 0.5 {
                    return Ok(idx + 1);
                }
            }
        }
        for k in 0..=self.horizon {
            if (assignment[vv.x[k]] - vv.x_f).abs() < 1e-5 && assignment[vv.v[k]].abs() < 1e-5 {
                return Ok(k);
            }
        }
        Ok(self.horizon)
    }

    /// LP-format text export (CPLEX LP dialect) for external cross-checking.
    pub fn to_lp_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        s.push_str("Minimize\n obj:");
        for v in &self.vars {
            if v.obj != 0.0 {
                let _ = write!(s, " {}{} {}", if v.obj >= 0.0 { "+" } else { "-" }, v.obj.abs(), v.name);
            }
        }
        s.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(s, " {}:", r.name);
            for (i, c) in &r.terms {
                let _ = write!(
                    s,
                    " {}{} {}",
                    if *c >= 0.0 { "+" } else { "-" },
                    c.abs(),
                    self.vars[*i].name
                );
            }
            let sense = match r.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(s, " {} {}", sense, r.rhs);
        }
        s.push_str("Bounds\n");
        for v in &self.vars {
            let _ = writeln!(s, " {} <= {} <= {}", v.lb, v.name, v.ub);
        }
        s.push_str("Binaries\n");
        for v in &self.vars {
            if v.binary {
                let _ = writeln!(s, " {}", v.name);
            }
        }
        s.push_str("End\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_params() -> VehicleParams {
        VehicleParams::default()
    }

    fn single_vehicle_model(x_f: f64, horizon: usize) -> MilpModel {
        let mut m = MilpModel::new(1.0, horizon);
        m.add_vehicle(VehicleId(0), x_f, &default_params()).unwrap();
        m
    }

    fn geometry() -> CrossingGeometry {
        CrossingGeometry {
            i: VehicleId(0),
            j: VehicleId(1),
            intersection: VertexId(9),
            interval_i: (95.0, 120.0),
            interval_j: (95.0, 120.0),
        }
    }

    #[test]
    fn single_vehicle_counts() {
        let m = single_vehicle_model(100.0, 20);
        assert_eq!(m.binary_count(), 20);
        let continuous = m.vars.iter().filter(|v| !v.binary).count();
        assert_eq!(continuous, 21 + 21 + 20); // x, v, u
        // dynamics 2K + goal 4K + selection 1 + hold 3K
        assert_eq!(m.rows.len(), 2 * 20 + 4 * 20 + 1 + 3 * 20);
    }

    #[test]
    fn horizon_too_short() {
        let mut m = MilpModel::new(1.0, 5);
        let err = m.add_vehicle(VehicleId(0), 100.0, &default_params());
        assert!(matches!(err, Err(ModelError::HorizonTooShort { .. })));
    }

    #[test]
    fn invalid_boundary_velocity_rejected() {
        let mut m = MilpModel::new(1.0, 20);
        let params = VehicleParams {
            vf: 99.0,
            ..default_params()
        };
        assert!(m.add_vehicle(VehicleId(0), 100.0, &params).is_err());
    }

    #[test]
    fn avoidance_empty_steps_noop() {
        let mut m = MilpModel::new(1.0, 40);
        m.add_vehicle(VehicleId(0), 300.0, &default_params()).unwrap();
        m.add_vehicle(VehicleId(1), 300.0, &default_params()).unwrap();
        let (nv, nr) = (m.vars.len(), m.rows.len());
        assert_eq!(m.add_avoidance(&geometry(), &[]).unwrap(), 0);
        assert_eq!((m.vars.len(), m.rows.len()), (nv, nr));
    }

    #[test]
    fn avoidance_one_step_adds_rows() {
        let mut m = MilpModel::new(1.0, 40);
        m.add_vehicle(VehicleId(0), 300.0, &default_params()).unwrap();
        m.add_vehicle(VehicleId(1), 300.0, &default_params()).unwrap();
        let (nv, nr) = (m.vars.len(), m.rows.len());
        // Step 10 is presolved away: neither vehicle can reach the interval
        // start (95 m) by then, so the disjunction is vacuous.
        assert_eq!(m.add_avoidance(&geometry(), &[10]).unwrap(), 0);
        assert_eq!((m.vars.len(), m.rows.len()), (nv, nr));
        assert_eq!(m.add_avoidance(&geometry(), &[14]).unwrap(), 1);
        assert_eq!(m.vars.len(), nv + 4);
        assert_eq!(m.rows.len(), nr + 5);
        // Re-adding the same step is a no-op.
        assert_eq!(m.add_avoidance(&geometry(), &[14]).unwrap(), 0);
        assert_eq!(m.vars.len(), nv + 4);
        assert_eq!(m.avoidance_step_count(), 1);
    }

    #[test]
    fn avoidance_disjunction_structure() {
        // For every admissible assignment of the four escape binaries (all
        // but 1,1,1,1), at least one big-M row stays active and excludes one
        // vehicle from its interval.
        let mut m = MilpModel::new(1.0, 40);
        m.add_vehicle(VehicleId(0), 300.0, &default_params()).unwrap();
        m.add_vehicle(VehicleId(1), 300.0, &default_params()).unwrap();
        m.add_avoidance(&geometry(), &[14]).unwrap();
        let c_vars: Vec<usize> = m
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.binary && v.name.starts_with("c_"))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(c_vars.len(), 4);
        let av_rows: Vec<&Row> = m
            .rows
            .iter()
            .filter(|r| r.name.starts_with("avi") || r.name.starts_with("avj"))
            .collect();
        assert_eq!(av_rows.len(), 4);
        for mask in 0..16u32 {
            if mask == 0b1111 {
                continue;
            }
            // Some binary is 0 => its row binds the matching x variable.
            let active = (0..4).any(|l| mask & (1 << l) == 0);
            assert!(active);
            for l in 0..4 {
                if mask & (1 << l) == 0 {
                    let row = av_rows
                        .iter()
                        .find(|r| r.terms.iter().any(|(i, _)| *i == c_vars[l]))
                        .unwrap();
                    // With the binary at 0 the row reduces to a bound pushing
                    // x outside [95,120] (tightened by eps).
                    let (_, xcoef) = row.terms.iter().find(|(i, _)| *i != c_vars[l]).unwrap();
                    assert_eq!(*xcoef, 1.0);
                    match row.sense {
                        Sense::Le => assert!(row.rhs <= 95.0),
                        Sense::Ge => assert!(row.rhs >= 120.0),
                        Sense::Eq => panic!("unexpected equality"),
                    }
                }
            }
        }
    }

    #[test]
    fn goal_window_fixings() {
        let mut m = single_vehicle_model(100.0, 20);
        assert_eq!(m.free_goal_binaries(), 20);
        m.apply_goal_window(VehicleId(0), 14, 14).unwrap();
        assert_eq!(m.free_goal_binaries(), 1);
        // Vacuous window changes nothing further.
        m.apply_goal_window(VehicleId(0), 1, 20).unwrap();
        assert_eq!(m.free_goal_binaries(), 1);
        // Disjoint window empties the model.
        let err = m.apply_goal_window(VehicleId(0), 15, 20);
        assert!(matches!(err, Err(ModelError::EmptyWindow(_))));
    }

    #[test]
    fn distance_objective_removes_binaries() {
        let mut m = single_vehicle_model(100.0, 20);
        m.build_distance_objective(None).unwrap();
        assert_eq!(m.binary_count(), 0);
        assert_eq!(m.objective, Objective::Distance);
        // x variables in the penalty carry coefficient -1 and the offset
        // accumulates K * x_f.
        assert!((m.objective_offset - 20.0 * 100.0).abs() < 1e-9);
        // All rows reference valid variables.
        for r in &m.rows {
            for (i, _) in &r.terms {
                assert!(*i < m.vars.len());
            }
        }
    }

    #[test]
    fn distance_objective_rejects_nonzero_vf() {
        let mut m = MilpModel::new(1.0, 30);
        let params = VehicleParams {
            vf: 5.0,
            ..default_params()
        };
        m.add_vehicle(VehicleId(0), 100.0, &params).unwrap();
        let err = m.build_distance_objective(None);
        assert!(matches!(err, Err(ModelError::NonzeroFinalVelocity(_))));
    }

    #[test]
    fn waypoint_row() {
        let mut m = single_vehicle_model(100.0, 20);
        let n = m.rows.len();
        m.add_waypoint(VehicleId(0), 5, 0.0, Sense::Le).unwrap();
        assert_eq!(m.rows.len(), n + 1);
        let row = m.rows.last().unwrap();
        assert_eq!(row.sense, Sense::Le);
        assert!(row.rhs < 0.0); // eps-tightened
        assert!(m.add_waypoint(VehicleId(1), 5, 0.0, Sense::Le).is_err());
    }

    #[test]
    fn lp_export_sections() {
        let mut m = single_vehicle_model(100.0, 16);
        m.add_waypoint(VehicleId(0), 3, 50.0, Sense::Le).unwrap();
        let text = m.to_lp_text();
        for section in ["Minimize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(text.contains(section), "missing {section}");
        }
        assert!(text.contains("b_0_16"));
    }
}
