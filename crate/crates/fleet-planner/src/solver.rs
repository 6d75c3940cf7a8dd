//! MILP solving: LP relaxations plus deterministic best-first
//! branch-and-bound on the binary variables.
//!
//! The built-in backend branches on the most fractional binary (ties by
//! variable index) and explores nodes in increasing bound order (ties by
//! creation order), so results are reproducible bit for bit. When the model
//! declares an objective granularity (the time objective only takes values
//! that are multiples of `dt`), node bounds are rounded up to the next
//! attainable value before pruning.
//!
//! Two further backends delegate the integer solve to external libraries:
//! HiGHS (`solver.backend = "highs"`, the default — much faster on
//! multi-vehicle fleet models) and microlp (`"microlp"`, a pure-Rust
//! cross-check). All backends solve the same [`MilpModel`] and are
//! interchangeable through [`backend_from_name`].

use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::model::{MilpModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    /// Internal solver failure (numerical breakdown); never expected on
    /// well-formed bounded models.
    Error,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    /// Branch-and-bound nodes expanded.
    pub nodes: usize,
    /// LP relaxations solved (0 for planners that never touch the solver).
    pub lp_solves: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective value including the model's constant offset.
    pub objective: f64,
    /// Values for every model variable; empty unless status is Optimal.
    pub assignment: Vec<f64>,
    pub stats: SolveStats,
}

impl SolveResult {
    fn failed(status: SolveStatus, stats: SolveStats) -> Self {
        SolveResult {
            status,
            objective: f64::INFINITY,
            assignment: Vec::new(),
            stats,
        }
    }
}

pub const INTEGRALITY_TOL: f64 = 1e-6;

/// A MILP solving strategy.
pub trait Backend {
    fn name(&self) -> &str;
    fn solve(&self, model: &MilpModel) -> SolveResult;
}

/// Returns the backend for a config name, if known.
pub fn backend_from_name(name: &str) -> Option<Box<dyn Backend>> {
    match name {
        "built-in" | "builtin" => Some(Box::new(BuiltinBackend::default())),
        "microlp" => Some(Box::new(MicrolpBackend)),
        "highs" => Some(Box::new(HighsBackend)),
        _ => None,
    }
}

fn build_problem(
    model: &MilpModel,
    fixings: &[(usize, f64)],
) -> (Problem, Vec<microlp::Variable>) {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut bounds: Vec<(f64, f64)> = model.vars.iter().map(|v| (v.lb, v.ub)).collect();
    for &(idx, val) in fixings {
        bounds[idx] = (val, val);
    }
    let vars: Vec<microlp::Variable> = model
        .vars
        .iter()
        .zip(&bounds)
        .map(|(v, &(lb, ub))| problem.add_var(v.obj, (lb, ub)))
        .collect();
    for row in &model.rows {
        let terms: Vec<(microlp::Variable, f64)> =
            row.terms.iter().map(|&(i, c)| (vars[i], c)).collect();
        let op = match row.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Eq => ComparisonOp::Eq,
            Sense::Ge => ComparisonOp::Ge,
        };
        problem.add_constraint(terms.as_slice(), op, row.rhs);
    }
    (problem, vars)
}

enum LpOutcome {
    Optimal { objective: f64, assignment: Vec<f64> },
    Infeasible,
    Error,
}

/// Solves the LP relaxation (binaries relaxed to their bounds) with the given
/// variable fixings.
fn solve_lp(model: &MilpModel, fixings: &[(usize, f64)]) -> LpOutcome {
    let (problem, vars) = build_problem(model, fixings);
    match problem.solve() {
        Ok(sol) => {
            let assignment: Vec<f64> = vars.iter().map(|&v| *sol.var_value(v)).collect();
            LpOutcome::Optimal {
                objective: sol.objective() + model.objective_offset,
                assignment,
            }
        }
        Err(microlp::Error::Infeasible) => LpOutcome::Infeasible,
        Err(_) => LpOutcome::Error,
    }
}

/// Public relaxation solve, used by tests and diagnostics.
pub fn solve_relaxation(model: &MilpModel) -> SolveResult {
    let start = Instant::now();
    let stats = |lp| SolveStats {
        nodes: 0,
        lp_solves: lp,
        wall_time: start.elapsed(),
    };
    match solve_lp(model, &[]) {
        LpOutcome::Optimal {
            objective,
            assignment,
        } => SolveResult {
            status: SolveStatus::Optimal,
            objective,
            assignment,
            stats: stats(1),
        },
        LpOutcome::Infeasible => SolveResult::failed(SolveStatus::Infeasible, stats(1)),
        LpOutcome::Error => SolveResult::failed(SolveStatus::Error, stats(1)),
    }
}

/// Best-first branch-and-bound over the model's binary variables.
#[derive(Debug, Clone)]
pub struct BuiltinBackend {
    pub node_limit: usize,
    /// Objective value of a known feasible solution (e.g. from the
    /// heuristic planner). Nodes whose bound exceeds it are pruned even
    /// before an incumbent is found; the optimum is never cut off because
    /// optimum <= cutoff by construction.
    pub cutoff: Option<f64>,
}

impl Default for BuiltinBackend {
    fn default() -> Self {
        BuiltinBackend {
            node_limit: 1_000_000,
            cutoff: None,
        }
    }
}

struct Node {
    /// Valid lower bound inherited from the parent's LP value.
    bound: f64,
    seq: u64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; invert for lowest-bound-first, breaking
        // ties by earliest creation.
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Rounds a relaxation bound up to the next attainable objective value.
fn round_bound(model: &MilpModel, bound: f64) -> f64 {
    match model.objective_granularity {
        Some(g) if g > 0.0 => {
            let off = model.objective_offset;
            ((bound - off) / g - 1e-6).ceil() * g + off
        }
        _ => bound,
    }
}

/// Most fractional binary variable, ties by lowest index.
fn pick_branch_var(model: &MilpModel, assignment: &[f64]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (idx, var) in model.vars.iter().enumerate() {
        if !var.binary {
            continue;
        }
        let frac = assignment[idx].clamp(0.0, 1.0);
        let score = frac.min(1.0 - frac);
        if score <= INTEGRALITY_TOL {
            continue;
        }
        if best.map_or(true, |(s, _)| score > s) {
            best = Some((score, idx));
        }
    }
    best.map(|(_, idx)| idx)
}

impl Backend for BuiltinBackend {
    fn name(&self) -> &str {
        "built-in"
    }

    fn solve(&self, model: &MilpModel) -> SolveResult {
        let start = Instant::now();
        let mut stats = SolveStats::default();
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Node {
            bound: f64::NEG_INFINITY,
            seq,
            fixings: Vec::new(),
        });
        let mut incumbent: Option<(f64, Vec<f64>)> = None;
        let mut hit_limit = false;
        let prunable = |incumbent: &Option<(f64, Vec<f64>)>, bound: f64| {
            let rounded = round_bound(model, bound);
            if let Some((best_obj, _)) = incumbent {
                if rounded >= best_obj - 1e-9 {
                    return true;
                }
            }
            matches!(self.cutoff, Some(c) if rounded > c + 1e-9)
        };

        'outer: while let Some(node) = heap.pop() {
            if prunable(&incumbent, node.bound) {
                continue; // prunable without an LP solve
            }
            // Dive from this node: repeatedly follow the child suggested by
            // the LP value of the branch variable and push the sibling onto
            // the best-first heap. The dive bottoms out at an integer-feasible
            // leaf (giving an incumbent early, which is what makes pruning
            // effective), an infeasible leaf, or a pruned bound.
            let mut fixings = node.fixings;
            loop {
                if stats.nodes >= self.node_limit {
                    hit_limit = true;
                    break 'outer;
                }
                stats.nodes += 1;
                stats.lp_solves += 1;
                let (objective, assignment) = match solve_lp(model, &fixings) {
                    LpOutcome::Optimal {
                        objective,
                        assignment,
                    } => (objective, assignment),
                    LpOutcome::Infeasible => break,
                    LpOutcome::Error => {
                        stats.wall_time = start.elapsed();
                        return SolveResult::failed(SolveStatus::Error, stats);
                    }
                };
                if prunable(&incumbent, objective) {
                    break;
                }
                match pick_branch_var(model, &assignment) {
                    None => {
                        // Integer feasible; strictly better than the incumbent.
                        incumbent = Some((objective, assignment));
                        break;
                    }
                    Some(var) => {
                        let natural = if assignment[var] >= 0.5 { 1.0 } else { 0.0 };
                        seq += 1;
                        let mut sibling = fixings.clone();
                        sibling.push((var, 1.0 - natural));
                        heap.push(Node {
                            bound: objective,
                            seq,
                            fixings: sibling,
                        });
                        fixings.push((var, natural));
                    }
                }
            }
        }
        stats.wall_time = start.elapsed();
        if hit_limit {
            return SolveResult::failed(SolveStatus::IterationLimit, stats);
        }
        match incumbent {
            Some((objective, assignment)) => SolveResult {
                status: SolveStatus::Optimal,
                objective,
                assignment,
                stats,
            },
            None => SolveResult::failed(SolveStatus::Infeasible, stats),
        }
    }
}

/// Backend delegating integer branching to the LP library.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicrolpBackend;

impl Backend for MicrolpBackend {
    fn name(&self) -> &str {
        "microlp"
    }

    fn solve(&self, model: &MilpModel) -> SolveResult {
        let start = Instant::now();
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<microlp::Variable> = model
            .vars
            .iter()
            .map(|v| {
                if v.binary {
                    problem.add_integer_var(v.obj, (v.lb.round() as i32, v.ub.round() as i32))
                } else {
                    problem.add_var(v.obj, (v.lb, v.ub))
                }
            })
            .collect();
        for row in &model.rows {
            let terms: Vec<(microlp::Variable, f64)> =
                row.terms.iter().map(|&(i, c)| (vars[i], c)).collect();
            let op = match row.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Eq => ComparisonOp::Eq,
                Sense::Ge => ComparisonOp::Ge,
            };
            problem.add_constraint(terms.as_slice(), op, row.rhs);
        }
        let stats = |t: Instant| SolveStats {
            nodes: 0,
            lp_solves: 1,
            wall_time: t.elapsed(),
        };
        match problem.solve() {
            Ok(sol) => SolveResult {
                status: SolveStatus::Optimal,
                objective: sol.objective() + model.objective_offset,
                assignment: vars.iter().map(|&v| *sol.var_value(v)).collect(),
                stats: stats(start),
            },
            Err(microlp::Error::Infeasible) => {
                SolveResult::failed(SolveStatus::Infeasible, stats(start))
            }
            Err(_) => SolveResult::failed(SolveStatus::Error, stats(start)),
        }
    }
}

/// Backend delegating the whole solve to the HiGHS library (single-threaded
/// for reproducibility). The fastest option for large full-range models.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl Backend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, model: &MilpModel) -> SolveResult {
        let start = Instant::now();
        let mut pb = highs::RowProblem::default();
        let cols: Vec<highs::Col> = model
            .vars
            .iter()
            .map(|v| {
                if v.binary {
                    pb.add_integer_column(v.obj, v.lb..=v.ub)
                } else {
                    pb.add_column(v.obj, v.lb..=v.ub)
                }
            })
            .collect();
        for row in &model.rows {
            let terms: Vec<(highs::Col, f64)> =
                row.terms.iter().map(|&(i, c)| (cols[i], c)).collect();
            match row.sense {
                Sense::Le => pb.add_row(..=row.rhs, terms),
                Sense::Eq => pb.add_row(row.rhs..=row.rhs, terms),
                Sense::Ge => pb.add_row(row.rhs.., terms),
            }
        }
        let mut m = pb.optimise(highs::Sense::Minimise);
        m.make_quiet();
        m.set_option("threads", 1);
        m.set_option("random_seed", 0);
        let solved = m.solve();
        let stats = |t: Instant| SolveStats {
            nodes: 0,
            lp_solves: 1,
            wall_time: t.elapsed(),
        };
        match solved.status() {
            highs::HighsModelStatus::Optimal => {
                let assignment = solved.get_solution().columns().to_vec();
                let objective = model.objective_offset
                    + model
                        .vars
                        .iter()
                        .zip(&assignment)
                        .map(|(v, &x)| v.obj * x)
                        .sum::<f64>();
                SolveResult {
                    status: SolveStatus::Optimal,
                    objective,
                    assignment,
                    stats: stats(start),
                }
            }
            highs::HighsModelStatus::Infeasible => {
                SolveResult::failed(SolveStatus::Infeasible, stats(start))
            }
            _ => SolveResult::failed(SolveStatus::Error, stats(start)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::CrossingGeometry;
    use crate::kinematics::{VehicleId, VehicleParams};
    use crate::model::{MilpModel, Row, Sense, Variable};
    use crate::network::VertexId;

    fn tiny_model(rows: Vec<Row>) -> MilpModel {
        let mut m = MilpModel::new(1.0, 1);
        m.objective_granularity = None;
        m.vars.push(Variable {
            name: "x".into(),
            lb: 0.0,
            ub: 10.0,
            obj: 1.0,
            binary: false,
        });
        m.rows = rows;
        m
    }

    #[test]
    fn lp_simple_bound() {
        let m = tiny_model(vec![Row {
            name: "r".into(),
            terms: vec![(0, 1.0)],
            sense: Sense::Ge,
            rhs: 3.0,
        }]);
        let r = solve_relaxation(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn lp_infeasible_rows() {
        let m = tiny_model(vec![
            Row {
                name: "a".into(),
                terms: vec![(0, 1.0)],
                sense: Sense::Le,
                rhs: 1.0,
            },
            Row {
                name: "b".into(),
                terms: vec![(0, 1.0)],
                sense: Sense::Ge,
                rhs: 2.0,
            },
        ]);
        assert_eq!(solve_relaxation(&m).status, SolveStatus::Infeasible);
    }

    fn single_vehicle(x_f: f64, horizon: usize) -> MilpModel {
        let mut m = MilpModel::new(1.0, horizon);
        m.add_vehicle(VehicleId(0), x_f, &VehicleParams::default())
            .unwrap();
        m
    }

    #[test]
    fn milp_single_vehicle_arrival() {
        // 100 m at +-3 m/s^2, v_max 10: continuous optimum 13.33 s; the
        // discrete dynamics need 14 steps.
        let m = single_vehicle(100.0, 20);
        let r = BuiltinBackend::default().solve(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 14.0).abs() < 1e-6, "objective {}", r.objective);
        assert_eq!(m.arrival_step(VehicleId(0), &r.assignment).unwrap(), 14);
        let traj = m.decode_trajectory(VehicleId(0), &r.assignment).unwrap();
        traj.validate(&VehicleParams::default()).unwrap();
        assert!((traj.final_position() - 100.0).abs() < 1e-4);
    }

    #[test]
    fn milp_zero_distance() {
        let m = single_vehicle(0.0, 5);
        let r = BuiltinBackend::default().solve(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn relaxation_bounds_integer_optimum() {
        let m = single_vehicle(100.0, 20);
        let lp = solve_relaxation(&m);
        let ip = BuiltinBackend::default().solve(&m);
        assert!(lp.objective <= ip.objective + 1e-9);
    }

    #[test]
    fn fixed_binaries_equal_lp() {
        let mut m = single_vehicle(100.0, 20);
        // Fix the arrival to step 15 by bounds.
        let vv = m.vehicle(VehicleId(0)).unwrap().clone();
        for (idx, &var) in vv.b.iter().enumerate() {
            let val = if idx + 1 == 15 { 1.0 } else { 0.0 };
            m.vars[var].lb = val;
            m.vars[var].ub = val;
        }
        let lp = solve_relaxation(&m);
        let ip = BuiltinBackend::default().solve(&m);
        assert_eq!(ip.stats.nodes, 1);
        assert!((lp.objective - ip.objective).abs() < 1e-9);
        assert!((ip.objective - 15.0).abs() < 1e-6);
    }

    #[test]
    fn backend_equivalence() {
        let mut m = MilpModel::new(1.0, 30);
        let params = VehicleParams::default();
        m.add_vehicle(VehicleId(0), 150.0, &params).unwrap();
        m.add_vehicle(VehicleId(1), 150.0, &params).unwrap();
        let geo = CrossingGeometry {
            i: VehicleId(0),
            j: VehicleId(1),
            intersection: VertexId(3),
            interval_i: (70.0, 95.0),
            interval_j: (70.0, 95.0),
        };
        m.add_avoidance(&geo, &(1..=30).collect::<Vec<_>>()).unwrap();
        let a = BuiltinBackend::default().solve(&m);
        let b = MicrolpBackend.solve(&m);
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(b.status, SolveStatus::Optimal);
        assert!(
            (a.objective - b.objective).abs() < 1e-6,
            "{} vs {}",
            a.objective,
            b.objective
        );
    }

    #[test]
    fn deterministic_resolve() {
        let m = single_vehicle(100.0, 20);
        let backend = BuiltinBackend::default();
        let a = backend.solve(&m);
        let b = backend.solve(&m);
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.stats.nodes, b.stats.nodes);
    }

    #[test]
    fn backend_names() {
        assert!(backend_from_name("built-in").is_some());
        assert!(backend_from_name("microlp").is_some());
        assert!(backend_from_name("gurobi").is_none());
    }
}
