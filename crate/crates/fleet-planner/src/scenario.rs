//! Scenario construction: a road network plus a fleet with fixed paths.
//!
//! Three generated families are provided:
//!
//! * toy cases — one vehicle crossing several others at consecutive
//!   intersections, with approach lengths solved numerically so the relaxed
//!   (interaction-free) solution exhibits a prescribed conflict pattern;
//! * `n`-by-`n` grids — `n` horizontal and `n` vertical vehicles over a
//!   100 m lattice, arriving at intersections simultaneously by symmetry;
//! * seeded random mine-like networks — sparse graphs with long corridor
//!   segments and Dijkstra paths between random start/goal vertices.
//!
//! Toy generators are self-validating: after construction they run the
//! relaxed solve and panic if the intended active-interaction pattern did not
//! materialize.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::interaction::{detect_active, occupancy_window, CrossingGeometry, Interaction};
use crate::kinematics::{
    min_time_tpbvp, sample_tpbvp, KinematicsError, Trajectory, VehicleId, VehicleParams,
};
use crate::network::{crossing_intervals, NetworkError, PathPlan, RoadNetwork, VertexId};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("scenario parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A road network, a fleet with fixed paths, and the sampling period.
/// All vehicles start simultaneously at t = 0.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: RoadNetwork,
    /// Sorted by vehicle id.
    pub fleet: Vec<(VehicleId, PathPlan, VehicleParams)>,
    pub dt: f64,
    pub label: String,
}

impl Scenario {
    pub fn path_of(&self, id: VehicleId) -> Option<&PathPlan> {
        self.fleet
            .iter()
            .find(|(v, _, _)| *v == id)
            .map(|(_, p, _)| p)
    }

    pub fn params_of(&self, id: VehicleId) -> Option<&VehicleParams> {
        self.fleet
            .iter()
            .find(|(v, _, _)| *v == id)
            .map(|(_, _, p)| p)
    }

    /// All pairwise crossing geometries, ordered by fleet position.
    pub fn crossings(&self) -> Vec<CrossingGeometry> {
        let mut out = Vec::new();
        for (ai, (ia, pa, prma)) in self.fleet.iter().enumerate() {
            for (ib, pb, prmb) in self.fleet.iter().skip(ai + 1) {
                let report = crossing_intervals(pa, pb, prma, prmb, &self.network);
                for c in report.crossings {
                    out.push(CrossingGeometry {
                        i: *ia,
                        j: *ib,
                        intersection: c.intersection,
                        interval_i: c.interval_a,
                        interval_j: c.interval_b,
                    });
                }
            }
        }
        out
    }

    /// Minimum-time trajectories with all interactions ignored; the per-vehicle
    /// lower bound used for delay accounting.
    pub fn relaxed_trajectories(
        &self,
    ) -> Result<BTreeMap<VehicleId, Trajectory>, KinematicsError> {
        let mut out = BTreeMap::new();
        for (id, path, params) in &self.fleet {
            let profile = min_time_tpbvp(path.total_length(), params.v0, params.vf, params)?;
            out.insert(*id, sample_tpbvp(&profile, self.dt)?);
        }
        Ok(out)
    }

    /// Serializes to the network text format plus one `task` line per vehicle
    /// (`task <vehicle> <start> <goal>`); dt and label ride along as comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# label {}\n", self.label));
        out.push_str(&format!("# dt {}\n", self.dt));
        out.push_str(&self.network.to_text());
        for (id, path, _) in &self.fleet {
            let vs = path.vertices();
            out.push_str(&format!(
                "task {} {} {}\n",
                id.0,
                vs[0],
                vs[vs.len() - 1]
            ));
        }
        out
    }

    /// Parses the scenario text format; vehicle paths are recomputed as
    /// shortest paths and parameters take their defaults.
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let network = RoadNetwork::parse(text)?;
        let mut dt = 1.0;
        let mut label = String::from("loaded");
        let mut fleet = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: String| ScenarioError::Parse {
                line: idx + 1,
                message,
            };
            if let Some(rest) = line.strip_prefix("# dt ") {
                dt = rest
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad dt {rest:?}")))?;
                continue;
            }
            if let Some(rest) = line.strip_prefix("# label ") {
                label = rest.trim().to_string();
                continue;
            }
            let Some(rest) = line.split('#').next().unwrap().trim().strip_prefix("task ") else {
                continue;
            };
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err("expected `task <vehicle> <start> <goal>`".into()));
            }
            let id: u32 = fields[0]
                .parse()
                .map_err(|_| err(format!("bad vehicle id {:?}", fields[0])))?;
            let start: u32 = fields[1]
                .parse()
                .map_err(|_| err(format!("bad vertex id {:?}", fields[1])))?;
            let goal: u32 = fields[2]
                .parse()
                .map_err(|_| err(format!("bad vertex id {:?}", fields[2])))?;
            let path = network.shortest_path(VertexId(start), VertexId(goal))?;
            fleet.push((VehicleId(id), path, VehicleParams::default()));
        }
        fleet.sort_by_key(|(id, _, _)| *id);
        Ok(Scenario {
            network,
            fleet,
            dt,
            label,
        })
    }
}

const DEFAULT_DT: f64 = 1.0;
const HALF_WIDTH: f64 = 5.0;

/// Finds the approach length `d` (intersection distance along a crosser's
/// path) such that the crosser's relaxed discrete trajectory first enters the
/// intersection interval `[d - r, d + r + length]` at `target_entry` seconds.
/// Entry time is evaluated on the discrete trajectory itself, so generated
/// conflict patterns do not drift with the sampling period.
fn approach_for_entry(
    target_entry: f64,
    exit_len: f64,
    params: &VehicleParams,
    dt: f64,
) -> f64 {
    let entry = |d: f64| -> f64 {
        let profile = min_time_tpbvp(d + exit_len, params.v0, params.vf, params)
            .expect("toy geometry TPBVP");
        let traj = sample_tpbvp(&profile, dt).expect("toy geometry sampling");
        occupancy_window(&traj, (d - HALF_WIDTH, d + HALF_WIDTH + params.length))
            .expect("crosser always reaches its intersection")
            .0
    };
    let mut lo = HALF_WIDTH + 5.0;
    let mut hi = lo.max(params.v_max * target_entry + 10.0);
    while entry(hi) < target_entry {
        hi *= 2.0;
        assert!(hi < 1e7, "toy geometry inversion diverged");
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if entry(mid) < target_entry {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Shared skeleton of the toy cases: vehicle 1 runs through `m` consecutive
/// intersections (100 m approach, 50 m spacing, 100 m exit); crosser `l`
/// (vehicle `l + 2`) runs start -> intersection `l` -> goal with an approach
/// solved so its interval entry hits `entry_targets[l]`.
fn toy_scenario(entry_targets: &[f64], label: &str) -> Scenario {
    let m = entry_targets.len();
    let params = VehicleParams::default();
    let dt = DEFAULT_DT;
    let exit_len = 100.0;

    // Vertex ids: intersections 0..m, then vehicle-1 endpoints, then one
    // (start, goal) pair per crosser.
    let inter = |l: usize| VertexId(l as u32);
    let v1_start = VertexId(m as u32);
    let v1_goal = VertexId(m as u32 + 1);
    let c_start = |l: usize| VertexId((m + 2 + 2 * l) as u32);
    let c_goal = |l: usize| VertexId((m + 3 + 2 * l) as u32);

    let mut vertices = vec![v1_start, v1_goal];
    vertices.extend((0..m).map(inter));
    let mut edges = vec![(v1_start, inter(0), 100.0)];
    for l in 1..m {
        edges.push((inter(l - 1), inter(l), 50.0));
    }
    edges.push((inter(m - 1), v1_goal, exit_len));
    let approaches: Vec<f64> = entry_targets
        .iter()
        .map(|&t| approach_for_entry(t, exit_len, &params, dt))
        .collect();
    for l in 0..m {
        vertices.push(c_start(l));
        vertices.push(c_goal(l));
        edges.push((c_start(l), inter(l), approaches[l]));
        edges.push((inter(l), c_goal(l), exit_len));
    }
    let network =
        RoadNetwork::new(vertices, edges, HALF_WIDTH).expect("toy network construction");

    let mut fleet = Vec::new();
    let mut v1_vertices = vec![v1_start];
    v1_vertices.extend((0..m).map(inter));
    v1_vertices.push(v1_goal);
    fleet.push((
        VehicleId(1),
        network
            .path_from_vertices(v1_vertices)
            .expect("vehicle 1 path"),
        params,
    ));
    for l in 0..m {
        fleet.push((
            VehicleId(l as u32 + 2),
            network
                .path_from_vertices(vec![c_start(l), inter(l), c_goal(l)])
                .expect("crosser path"),
            params,
        ));
    }
    Scenario {
        network,
        fleet,
        dt,
        label: label.to_string(),
    }
}

/// Relaxed interactions of a scenario (panics on kinematic failure; the
/// generators only build feasible geometry).
fn relaxed_interactions(s: &Scenario) -> Vec<Interaction> {
    let trajs = s.relaxed_trajectories().expect("relaxed trajectories");
    detect_active(&trajs, &s.crossings(), 0.0).expect("detection")
}

/// Interval entry/exit times of vehicle 1 at each of its intersections, from
/// its relaxed discrete trajectory.
fn vehicle1_windows(s: &Scenario, m: usize) -> Vec<(f64, f64)> {
    let (_, path, params) = &s.fleet[0];
    let profile =
        min_time_tpbvp(path.total_length(), params.v0, params.vf, params).expect("v1 TPBVP");
    let traj = sample_tpbvp(&profile, s.dt).expect("v1 sampling");
    (0..m)
        .map(|l| {
            let d = path
                .distance_of(VertexId(l as u32))
                .expect("intersection on path");
            occupancy_window(&traj, (d - HALF_WIDTH, d + HALF_WIDTH + params.length))
                .expect("v1 traverses its intersections")
        })
        .collect()
}

/// Case-1 family: `m` crossers each arriving at their intersection `eps`
/// seconds after vehicle 1, so all `m` interactions are active with vehicle 1
/// entering first.
fn case1(m: usize, eps: f64, label: &str) -> Scenario {
    assert!(m >= 1);
    // First pass with dummy targets to fix vehicle 1's geometry, then retarget
    // the crossers against vehicle 1's actual discrete entry times.
    let skeleton = toy_scenario(&vec![20.0; m], label);
    let windows = vehicle1_windows(&skeleton, m);
    let targets: Vec<f64> = windows.iter().map(|(enter, _)| enter + eps).collect();
    let s = toy_scenario(&targets, label);

    let interactions = relaxed_interactions(&s);
    let active: Vec<&Interaction> = interactions.iter().filter(|n| n.active).collect();
    assert_eq!(
        active.len(),
        m,
        "case-1 family: expected every crossing active"
    );
    for n in &active {
        assert_eq!(n.vehicles.0, VehicleId(1), "case-1: all conflicts involve vehicle 1");
        let (ei, _) = n.occupancy_i.expect("vehicle 1 occupancy");
        let (ej, _) = n.occupancy_j.expect("crosser occupancy");
        assert!(
            ei < ej,
            "case-1: vehicle 1 must enter first at {:?} ({ei} vs {ej})",
            n.intersection
        );
    }
    s
}

/// Case 2: only the first intersection is in conflict in the relaxed
/// solution, with the crosser (vehicle 2) entering first; the second
/// crosser's window sits just past vehicle 1's, so delaying vehicle 1 at the
/// first intersection chains into a new conflict downstream.
fn case2(label: &str) -> Scenario {
    let m = 3;
    let skeleton = toy_scenario(&vec![20.0; m], label);
    let windows = vehicle1_windows(&skeleton, m);
    let targets = vec![
        windows[0].0 - 0.7, // vehicle 2 slightly ahead of vehicle 1 at A
        windows[1].1 + 0.5, // vehicle 3 just clear of relaxed vehicle 1 at B
        windows[2].1 + 6.0, // vehicle 4 well clear at C
    ];
    let s = toy_scenario(&targets, label);

    let interactions = relaxed_interactions(&s);
    let active: Vec<&Interaction> = interactions.iter().filter(|n| n.active).collect();
    assert_eq!(active.len(), 1, "case 2: exactly one relaxed conflict");
    let n = active[0];
    assert_eq!(n.intersection, VertexId(0), "case 2: conflict at the first intersection");
    assert_eq!(n.vehicles, (VehicleId(1), VehicleId(2)));
    let (e1, _) = n.occupancy_i.expect("vehicle 1 occupancy");
    let (e2, _) = n.occupancy_j.expect("vehicle 2 occupancy");
    assert!(e2 < e1, "case 2: vehicle 2 enters first ({e2} vs {e1})");
    s
}

/// The two toy cases: 4 vehicles, vehicle 1 crossing three consecutive
/// intersections each shared with one other vehicle.
///
/// Variant 1: all three interactions active, vehicle 1 entering each
/// intersection 1 s before the crosser. Variant 2: only the first interaction
/// active with vehicle 2 first; resolving it by delaying vehicle 1 creates a
/// follow-on conflict at the second intersection.
pub fn make_toy_case(variant: u8) -> Scenario {
    match variant {
        1 => case1(3, 1.0, "toy-case-1"),
        2 => case2("toy-case-2"),
        other => panic!("unknown toy case variant {other}"),
    }
}

/// Case-1 generalization with `m` crossing vehicles (entry offset 0.5 s),
/// used to study how delay grows with the number of conflicts.
pub fn make_case1_family(m: usize) -> Scenario {
    case1(m, 0.5, &format!("toy-case-1-m{m}"))
}

/// `n`-by-`n` grid: `n` horizontal and `n` vertical vehicles over a lattice
/// with 100 m segments, 100 m approach and 100 m exit. Symmetric geometry
/// makes all vehicles arrive at intersections simultaneously in the relaxed
/// solution.
pub fn make_grid(n: usize) -> Scenario {
    assert!(n >= 1);
    let params = VehicleParams::default();
    let nn = (n * n) as u32;
    let inter = |i: usize, j: usize| VertexId((i * n + j) as u32);
    let h_start = |i: usize| VertexId(nn + i as u32);
    let h_goal = |i: usize| VertexId(nn + (n + i) as u32);
    let v_start = |j: usize| VertexId(nn + (2 * n + j) as u32);
    let v_goal = |j: usize| VertexId(nn + (3 * n + j) as u32);

    let mut vertices: Vec<VertexId> = (0..n * n).map(|k| VertexId(k as u32)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        vertices.push(h_start(i));
        vertices.push(h_goal(i));
        edges.push((h_start(i), inter(i, 0), 100.0));
        for j in 1..n {
            edges.push((inter(i, j - 1), inter(i, j), 100.0));
        }
        edges.push((inter(i, n - 1), h_goal(i), 100.0));
    }
    for j in 0..n {
        vertices.push(v_start(j));
        vertices.push(v_goal(j));
        edges.push((v_start(j), inter(0, j), 100.0));
        for i in 1..n {
            edges.push((inter(i - 1, j), inter(i, j), 100.0));
        }
        edges.push((inter(n - 1, j), v_goal(j), 100.0));
    }
    let network = RoadNetwork::new(vertices, edges, HALF_WIDTH).expect("grid network");

    let mut fleet = Vec::new();
    for i in 0..n {
        let mut vs = vec![h_start(i)];
        vs.extend((0..n).map(|j| inter(i, j)));
        vs.push(h_goal(i));
        fleet.push((
            VehicleId(i as u32),
            network.path_from_vertices(vs).expect("horizontal path"),
            params,
        ));
    }
    for j in 0..n {
        let mut vs = vec![v_start(j)];
        vs.extend((0..n).map(|i| inter(i, j)));
        vs.push(v_goal(j));
        fleet.push((
            VehicleId((n + j) as u32),
            network.path_from_vertices(vs).expect("vertical path"),
            params,
        ));
    }
    Scenario {
        network,
        fleet,
        dt: DEFAULT_DT,
        label: format!("grid-{n}x{n}"),
    }
}

/// Seeded mine-like scenario: a random geometric graph thinned towards
/// degree ~4 with degree-2 chains contracted into long corridor edges, and
/// `n_vehicles` Dijkstra paths between random start/goal vertices. Byte-
/// identical output for a fixed seed.
pub fn make_random_mine(seed: u64, n_vertices: usize, n_vehicles: usize) -> Scenario {
    assert!(n_vertices >= 10 && n_vehicles >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = 60.0 * (n_vertices as f64).sqrt();
    let points: Vec<(f64, f64)> = (0..n_vertices)
        .map(|_| {
            (
                rng.random_range(0.0..extent),
                rng.random_range(0.0..extent),
            )
        })
        .collect();
    let dist = |a: usize, b: usize| -> f64 {
        let (dx, dy) = (points[a].0 - points[b].0, points[a].1 - points[b].1);
        (dx * dx + dy * dy).sqrt().max(30.0)
    };

    // k-nearest-neighbor edges (k = 3) give average degree a little under 4.
    let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for a in 0..n_vertices {
        let mut others: Vec<usize> = (0..n_vertices).filter(|&b| b != a).collect();
        others.sort_by(|&x, &y| dist(a, x).total_cmp(&dist(a, y)).then(x.cmp(&y)));
        for &b in others.iter().take(3) {
            edge_set.insert((a.min(b), a.max(b)));
        }
    }
    // Patch connectivity with the shortest inter-component link.
    let mut comp: Vec<usize> = (0..n_vertices).collect();
    fn find(comp: &mut Vec<usize>, x: usize) -> usize {
        if comp[x] != x {
            let root = find(comp, comp[x]);
            comp[x] = root;
        }
        comp[x]
    }
    for &(a, b) in &edge_set {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        comp[ra] = rb;
    }
    loop {
        let roots: BTreeSet<usize> = (0..n_vertices).map(|x| find(&mut comp, x)).collect();
        if roots.len() <= 1 {
            break;
        }
        let first_root = *roots.iter().next().unwrap();
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n_vertices {
            if find(&mut comp, a) != first_root {
                continue;
            }
            for b in 0..n_vertices {
                if find(&mut comp, b) == first_root {
                    continue;
                }
                let d = dist(a, b);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("non-trivial components");
        edge_set.insert((a.min(b), a.max(b)));
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        comp[ra] = rb;
    }

    // Contract degree-2 chains into single corridor edges.
    let mut lengths: BTreeMap<(usize, usize), f64> = edge_set
        .iter()
        .map(|&(a, b)| ((a, b), dist(a, b)))
        .collect();
    let mut alive: Vec<bool> = vec![true; n_vertices];
    loop {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in lengths.keys() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut contracted = false;
        for v in 0..n_vertices {
            if !alive[v] {
                continue;
            }
            let Some(nbrs) = adj.get(&v) else { continue };
            if nbrs.len() != 2 {
                continue;
            }
            let (a, b) = (nbrs[0], nbrs[1]);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if lengths.contains_key(&key) {
                continue; // contraction would create a parallel edge
            }
            let la = lengths.remove(&(a.min(v), a.max(v))).unwrap();
            let lb = lengths.remove(&(b.min(v), b.max(v))).unwrap();
            lengths.insert(key, la + lb);
            alive[v] = false;
            contracted = true;
            break;
        }
        if !contracted {
            break;
        }
    }

    let vertices: Vec<VertexId> = (0..n_vertices)
        .filter(|&v| alive[v])
        .map(|v| VertexId(v as u32))
        .collect();
    let edges: Vec<(VertexId, VertexId, f64)> = lengths
        .iter()
        .map(|(&(a, b), &len)| (VertexId(a as u32), VertexId(b as u32), len))
        .collect();
    let network = RoadNetwork::new(vertices.clone(), edges, HALF_WIDTH).expect("mine network");

    // Vehicles: random start/goal pairs whose shortest path keeps every
    // interior vertex clear of both path ends, so occupancy intervals always
    // lie strictly inside the path.
    let params = VehicleParams::default();
    let clearance = 2.0 * HALF_WIDTH + params.length;
    let mut fleet = Vec::new();
    for v in 0..n_vehicles {
        let mut chosen = None;
        for _ in 0..500 {
            let s = vertices[rng.random_range(0..vertices.len())];
            let g = vertices[rng.random_range(0..vertices.len())];
            if s == g {
                continue;
            }
            let Ok(path) = network.shortest_path(s, g) else {
                continue;
            };
            let total = path.total_length();
            let clear = path
                .cumulative_distance()
                .iter()
                .skip(1)
                .take(path.vertices().len().saturating_sub(2))
                .all(|&d| d >= clearance && total - d >= clearance);
            if clear {
                chosen = Some(path);
                break;
            }
        }
        let path = chosen.expect("mine generator: no admissible start/goal pair found");
        fleet.push((VehicleId(v as u32), path, params));
    }
    Scenario {
        network,
        fleet,
        dt: DEFAULT_DT,
        label: format!("mine-s{seed}-n{n_vertices}-f{n_vehicles}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid1_structure() {
        let s = make_grid(1);
        assert_eq!(s.fleet.len(), 2);
        let crossings = s.crossings();
        assert_eq!(crossings.len(), 1);
        for (_, path, _) in &s.fleet {
            assert_eq!(path.total_length(), 200.0);
        }
        // Relaxed occupancy windows identical by symmetry.
        let trajs = s.relaxed_trajectories().unwrap();
        let acts = detect_active(&trajs, &crossings, 0.0).unwrap();
        assert_eq!(acts.len(), 1);
        assert!(acts[0].active);
        assert_eq!(acts[0].occupancy_i, acts[0].occupancy_j);
    }

    #[test]
    fn grid3_crossings_and_active_diagonal() {
        let s = make_grid(3);
        assert_eq!(s.fleet.len(), 6);
        let crossings = s.crossings();
        assert_eq!(crossings.len(), 9);
        // With identical relaxed profiles, horizontal vehicle i and vertical
        // vehicle j occupy their shared intersection 100*|i-j| metres apart
        // in path coordinate, i.e. ~10*|i-j| seconds apart: only the three
        // diagonal interactions overlap in time.
        let trajs = s.relaxed_trajectories().unwrap();
        let acts = detect_active(&trajs, &crossings, 0.0).unwrap();
        let active: Vec<_> = acts.iter().filter(|n| n.active).collect();
        assert_eq!(active.len(), 3);
        for n in active {
            let (VehicleId(i), VehicleId(j)) = n.vehicles;
            assert_eq!(j - i, 3, "active pairs are the diagonal ones");
        }
    }

    #[test]
    fn grid_transposition_symmetry() {
        let s = make_grid(2);
        let crossings = s.crossings();
        assert_eq!(crossings.len(), 4);
        // Swapping horizontal/vertical roles mirrors the interval pair.
        let find = |a: u32, b: u32| {
            crossings
                .iter()
                .find(|c| c.i == VehicleId(a) && c.j == VehicleId(b))
                .unwrap()
        };
        let c01 = find(0, 2 + 1); // horizontal 0 x vertical 1
        let c10 = find(1, 2); // horizontal 1 x vertical 0
        assert_eq!(c01.interval_i, c10.interval_j);
        assert_eq!(c01.interval_j, c10.interval_i);
    }

    #[test]
    fn toy_case1_structure() {
        let s = make_toy_case(1);
        assert_eq!(s.fleet.len(), 4);
        let (_, v1_path, _) = &s.fleet[0];
        assert_eq!(v1_path.vertices().len(), 5); // start, A, B, C, goal
        let active: Vec<Interaction> = relaxed_interactions(&s)
            .into_iter()
            .filter(|n| n.active)
            .collect();
        assert_eq!(active.len(), 3);
    }

    #[test]
    fn toy_case2_structure() {
        let s = make_toy_case(2);
        assert_eq!(s.fleet.len(), 4);
        let active: Vec<Interaction> = relaxed_interactions(&s)
            .into_iter()
            .filter(|n| n.active)
            .collect();
        assert_eq!(active.len(), 1);
        assert_eq!(active[0].vehicles, (VehicleId(1), VehicleId(2)));
    }

    #[test]
    fn case1_family_sizes() {
        for m in 2..=5 {
            let s = make_case1_family(m);
            assert_eq!(s.fleet.len(), m + 1);
            let active = relaxed_interactions(&s)
                .into_iter()
                .filter(|n| n.active)
                .count();
            assert_eq!(active, m);
        }
    }

    #[test]
    fn mine_deterministic_and_valid() {
        let a = make_random_mine(1, 60, 4);
        let b = make_random_mine(1, 60, 4);
        assert_eq!(a.to_text(), b.to_text());
        let c = make_random_mine(2, 60, 4);
        assert_ne!(a.to_text(), c.to_text());
        for (_, path, _) in &a.fleet {
            assert!(path.total_length() > 0.0);
        }
    }

    #[test]
    fn mine_single_vehicle_no_interactions() {
        let s = make_random_mine(7, 40, 1);
        assert!(s.crossings().is_empty());
    }

    #[test]
    fn text_round_trip() {
        let s = make_random_mine(3, 50, 3);
        let text = s.to_text();
        let parsed = Scenario::parse(&text).unwrap();
        assert_eq!(parsed.dt, s.dt);
        assert_eq!(parsed.label, s.label);
        assert_eq!(parsed.fleet.len(), s.fleet.len());
        for ((ia, pa, _), (ib, pb, _)) in s.fleet.iter().zip(&parsed.fleet) {
            assert_eq!(ia, ib);
            assert_eq!(pa.vertices(), pb.vertices());
        }
        // Grid paths are unique shortest paths, so they also survive.
        let g = make_grid(2);
        let gp = Scenario::parse(&g.to_text()).unwrap();
        for ((ia, pa, _), (ib, pb, _)) in g.fleet.iter().zip(&gp.fleet) {
            assert_eq!(ia, ib);
            assert_eq!(pa.vertices(), pb.vertices());
        }
    }
}
