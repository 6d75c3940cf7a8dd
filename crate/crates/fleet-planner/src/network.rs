//! Road graph, shortest paths, and intersection occupancy geometry.
//!
//! The network is an undirected graph with positive edge lengths. A vehicle
//! path is a vertex sequence with cumulative 1-D arc-length coordinates; all
//! trajectory planning happens in that 1-D coordinate. Every intersection
//! vertex shared by two crossing paths maps to a spatial occupancy interval
//! `[d_c - r, d_c + r + L]` on each path, where `d_c` is the cumulative
//! distance of the vertex, `r` the network's intersection half-width, and `L`
//! the vehicle length (positions refer to the vehicle front, so the interval
//! stays occupied until the rear clears).

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

use crate::kinematics::VehicleParams;

/// Identifier of a network vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("no path from {0} to {1}")]
    NoPath(VertexId, VertexId),
    #[error("edge ({0}, {1}) has non-positive length {2}")]
    BadEdgeLength(VertexId, VertexId, f64),
    #[error("self-loop edge at {0}")]
    SelfLoop(VertexId),
    #[error("graph is not connected")]
    Disconnected,
    #[error("negative intersection half-width {0}")]
    NegativeHalfWidth(f64),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Undirected road graph with per-network intersection half-width `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    vertices: BTreeSet<VertexId>,
    edges: Vec<(VertexId, VertexId, f64)>,
    adjacency: BTreeMap<VertexId, Vec<(VertexId, f64)>>,
    intersection_half_width: f64,
}

impl RoadNetwork {
    pub fn new(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>,
        intersection_half_width: f64,
    ) -> Result<Self, NetworkError> {
        if intersection_half_width < 0.0 {
            return Err(NetworkError::NegativeHalfWidth(intersection_half_width));
        }
        let vertices: BTreeSet<VertexId> = vertices.into_iter().collect();
        let edges: Vec<(VertexId, VertexId, f64)> = edges.into_iter().collect();
        let mut adjacency: BTreeMap<VertexId, Vec<(VertexId, f64)>> =
            vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(a, b, len) in &edges {
            if a == b {
                return Err(NetworkError::SelfLoop(a));
            }
            if !(len > 0.0) {
                return Err(NetworkError::BadEdgeLength(a, b, len));
            }
            for v in [a, b] {
                if !vertices.contains(&v) {
                    return Err(NetworkError::UnknownVertex(v));
                }
            }
            adjacency.get_mut(&a).unwrap().push((b, len));
            adjacency.get_mut(&b).unwrap().push((a, len));
        }
        for neighbours in adjacency.values_mut() {
            neighbours.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        }
        let net = RoadNetwork {
            vertices,
            edges,
            adjacency,
            intersection_half_width,
        };
        if !net.is_connected() {
            return Err(NetworkError::Disconnected);
        }
        Ok(net)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId, f64)] {
        &self.edges
    }

    pub fn intersection_half_width(&self) -> f64 {
        self.intersection_half_width
    }

    pub fn edge_length(&self, a: VertexId, b: VertexId) -> Option<f64> {
        self.adjacency
            .get(&a)?
            .iter()
            .find(|(v, _)| *v == b)
            .map(|(_, len)| *len)
    }

    fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.iter().next() else {
            return true;
        };
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                for &(n, _) in &self.adjacency[&v] {
                    if !seen.contains(&n) {
                        stack.push(n);
                    }
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Minimum-total-length path between two vertices. Ties are broken by the
    /// lexicographically smallest vertex sequence so results are stable.
    pub fn shortest_path(&self, start: VertexId, goal: VertexId) -> Result<PathPlan, NetworkError> {
        for v in [start, goal] {
            if !self.vertices.contains(&v) {
                return Err(NetworkError::UnknownVertex(v));
            }
        }

        #[derive(PartialEq)]
        struct Entry {
            dist: f64,
            path: Vec<VertexId>,
        }
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                // BinaryHeap is a max-heap; invert so the smallest
                // (distance, path) pops first.
                other
                    .dist
                    .total_cmp(&self.dist)
                    .then_with(|| other.path.cmp(&self.path))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut best: BTreeMap<VertexId, (f64, Vec<VertexId>)> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        heap.push(Entry {
            dist: 0.0,
            path: vec![start],
        });
        while let Some(Entry { dist, path }) = heap.pop() {
            let v = *path.last().unwrap();
            match best.get(&v) {
                Some((d, p)) if *d < dist || (*d == dist && *p <= path) => continue,
                _ => {}
            }
            best.insert(v, (dist, path.clone()));
            if v == goal {
                continue;
            }
            for &(n, len) in &self.adjacency[&v] {
                let nd = dist + len;
                let better = match best.get(&n) {
                    None => true,
                    Some((d, p)) => {
                        nd < *d || (nd == *d && {
                            let mut np = path.clone();
                            np.push(n);
                            np < *p
                        })
                    }
                };
                if better {
                    let mut np = path.clone();
                    np.push(n);
                    heap.push(Entry { dist: nd, path: np });
                }
            }
        }
        let (_, path) = best
            .remove(&goal)
            .ok_or(NetworkError::NoPath(start, goal))?;
        self.path_from_vertices(path)
    }

    /// Builds a [`PathPlan`] from an explicit vertex sequence, validating that
    /// consecutive vertices are joined by an edge.
    pub fn path_from_vertices(&self, vertices: Vec<VertexId>) -> Result<PathPlan, NetworkError> {
        assert!(!vertices.is_empty(), "path must contain at least one vertex");
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for pair in vertices.windows(2) {
            let len = self
                .edge_length(pair[0], pair[1])
                .ok_or(NetworkError::NoPath(pair[0], pair[1]))?;
            cumulative.push(cumulative.last().unwrap() + len);
        }
        let total_length = *cumulative.last().unwrap();
        Ok(PathPlan {
            vertices,
            cumulative_distance: cumulative,
            total_length,
        })
    }

    /// Serializes to the line-oriented network text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("r {}\n", self.intersection_half_width));
        for &v in &self.vertices {
            out.push_str(&format!("v {}\n", v));
        }
        for &(a, b, len) in &self.edges {
            out.push_str(&format!("e {} {} {}\n", a, b, len));
        }
        out
    }

    /// Parses the line-oriented network text format:
    /// `v <id>` per vertex, `e <id1> <id2> <length>` per edge, `r <half_width>`
    /// once; `#` starts a comment. Lines of other kinds are left to the caller
    /// (the scenario parser layers `task` lines on top).
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut half_width = 5.0;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap();
            let fields: Vec<&str> = parts.collect();
            let err = |message: String| NetworkError::Parse {
                line: idx + 1,
                message,
            };
            match kind {
                "v" => {
                    if fields.len() != 1 {
                        return Err(err("expected `v <id>`".into()));
                    }
                    let id = fields[0]
                        .parse()
                        .map_err(|_| err(format!("bad vertex id {:?}", fields[0])))?;
                    vertices.push(VertexId(id));
                }
                "e" => {
                    if fields.len() != 3 {
                        return Err(err("expected `e <id1> <id2> <length>`".into()));
                    }
                    let a = fields[0]
                        .parse()
                        .map_err(|_| err(format!("bad vertex id {:?}", fields[0])))?;
                    let b = fields[1]
                        .parse()
                        .map_err(|_| err(format!("bad vertex id {:?}", fields[1])))?;
                    let len = fields[2]
                        .parse()
                        .map_err(|_| err(format!("bad edge length {:?}", fields[2])))?;
                    edges.push((VertexId(a), VertexId(b), len));
                }
                "r" => {
                    if fields.len() != 1 {
                        return Err(err("expected `r <half_width>`".into()));
                    }
                    half_width = fields[0]
                        .parse()
                        .map_err(|_| err(format!("bad half-width {:?}", fields[0])))?;
                }
                "task" => continue, // scenario section, handled elsewhere
                other => return Err(err(format!("unknown record kind {:?}", other))),
            }
        }
        RoadNetwork::new(vertices, edges, half_width)
    }
}

/// A vehicle's ordered vertex sequence with cumulative arc-length coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    vertices: Vec<VertexId>,
    cumulative_distance: Vec<f64>,
    total_length: f64,
}

impl PathPlan {
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn cumulative_distance(&self) -> &[f64] {
        &self.cumulative_distance
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Cumulative distance of a vertex on this path, if visited.
    pub fn distance_of(&self, v: VertexId) -> Option<f64> {
        self.vertices
            .iter()
            .position(|&p| p == v)
            .map(|i| self.cumulative_distance[i])
    }
}

/// Spatial occupancy geometry of one crossing intersection for a vehicle pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub intersection: VertexId,
    /// `[x_is, x_ie]` along the first path.
    pub interval_a: (f64, f64),
    /// `[x_js, x_je]` along the second path.
    pub interval_b: (f64, f64),
}

/// A road segment traversed by both paths. Same-edge interactions are out of
/// scope for planning and reported only as diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedEdge {
    pub endpoints: (VertexId, VertexId),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    pub shared_edges: Vec<SharedEdge>,
}

fn undirected(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Finds every interior vertex where two paths cross on distinct edges and
/// maps it to per-vehicle occupancy intervals.
///
/// Endpoints are excluded: start and goal areas are treated as off-network
/// loading/dumping zones. Vertex pairs connected through a common edge are
/// reported as [`SharedEdge`] diagnostics instead of crossings.
pub fn crossing_intervals(
    path_a: &PathPlan,
    path_b: &PathPlan,
    params_a: &VehicleParams,
    params_b: &VehicleParams,
    net: &RoadNetwork,
) -> CrossingReport {
    let r = net.intersection_half_width();
    let mut report = CrossingReport::default();

    let edges_a: BTreeSet<(VertexId, VertexId)> = path_a
        .vertices
        .windows(2)
        .map(|w| undirected(w[0], w[1]))
        .collect();
    let mut seen_shared = BTreeSet::new();
    for w in path_b.vertices.windows(2) {
        let e = undirected(w[0], w[1]);
        if edges_a.contains(&e) && seen_shared.insert(e) {
            report.shared_edges.push(SharedEdge { endpoints: e });
        }
    }

    let interior = |path: &PathPlan| {
        let n = path.vertices.len();
        path.vertices
            .iter()
            .enumerate()
            .filter(move |&(i, _)| i > 0 && i + 1 < n)
            .map(|(i, &v)| (i, v))
            .collect::<Vec<_>>()
    };
    let shared_edge_set: BTreeSet<(VertexId, VertexId)> = report
        .shared_edges
        .iter()
        .map(|s| s.endpoints)
        .collect();

    for (ia, v) in interior(path_a) {
        for &(ib, w) in interior(path_b).iter() {
            if v != w {
                continue;
            }
            // Paths meeting on a shared edge at this vertex are a merge or
            // diverge, not a crossing.
            let incident_a = [
                undirected(path_a.vertices[ia - 1], v),
                undirected(v, path_a.vertices[ia + 1]),
            ];
            let incident_b = [
                undirected(path_b.vertices[ib - 1], w),
                undirected(w, path_b.vertices[ib + 1]),
            ];
            let touches_shared = incident_a
                .iter()
                .chain(incident_b.iter())
                .any(|e| shared_edge_set.contains(e));
            let crosses = incident_a.iter().all(|e| !incident_b.contains(e));
            if touches_shared || !crosses {
                continue;
            }
            let da = path_a.cumulative_distance[ia];
            let db = path_b.cumulative_distance[ib];
            report.crossings.push(Crossing {
                intersection: v,
                interval_a: (da - r, da + r + params_a.length),
                interval_b: (db - r, db + r + params_b.length),
            });
        }
    }
    report
        .crossings
        .sort_by(|a, b| a.interval_a.0.total_cmp(&b.interval_a.0));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::VehicleParams;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn params() -> VehicleParams {
        VehicleParams {
            length: 15.0,
            ..VehicleParams::default()
        }
    }

    fn line_network(ids: &[u32], len: f64) -> RoadNetwork {
        let vertices: Vec<VertexId> = ids.iter().map(|&i| v(i)).collect();
        let edges: Vec<_> = ids
            .windows(2)
            .map(|w| (v(w[0]), v(w[1]), len))
            .collect();
        RoadNetwork::new(vertices, edges, 5.0).unwrap()
    }

    #[test]
    fn single_edge_path() {
        let net = line_network(&[0, 1], 100.0);
        let p = net.shortest_path(v(0), v(1)).unwrap();
        assert_eq!(p.vertices(), &[v(0), v(1)]);
        assert_eq!(p.total_length(), 100.0);
        assert_eq!(p.cumulative_distance(), &[0.0, 100.0]);
    }

    #[test]
    fn degenerate_path() {
        let net = line_network(&[0, 1], 100.0);
        let p = net.shortest_path(v(0), v(0)).unwrap();
        assert_eq!(p.vertices(), &[v(0)]);
        assert_eq!(p.total_length(), 0.0);
    }

    #[test]
    fn square_tie_break_is_lexicographic() {
        // 4-cycle 0-1-3-2-0 with all edges 100: both 0->1->3 and 0->2->3 have
        // length 200; the smaller vertex sequence wins.
        let net = RoadNetwork::new(
            [v(0), v(1), v(2), v(3)],
            [
                (v(0), v(1), 100.0),
                (v(1), v(3), 100.0),
                (v(0), v(2), 100.0),
                (v(2), v(3), 100.0),
            ],
            5.0,
        )
        .unwrap();
        let p = net.shortest_path(v(0), v(3)).unwrap();
        assert_eq!(p.total_length(), 200.0);
        assert_eq!(p.vertices(), &[v(0), v(1), v(3)]);
    }

    #[test]
    fn unknown_vertex_and_no_path() {
        let net = line_network(&[0, 1], 100.0);
        assert!(matches!(
            net.shortest_path(v(0), v(9)),
            Err(NetworkError::UnknownVertex(_))
        ));
    }

    #[test]
    fn invalid_networks_rejected() {
        assert!(matches!(
            RoadNetwork::new([v(0), v(1)], [(v(0), v(1), 0.0)], 5.0),
            Err(NetworkError::BadEdgeLength(..))
        ));
        assert!(matches!(
            RoadNetwork::new([v(0)], [(v(0), v(0), 1.0)], 5.0),
            Err(NetworkError::SelfLoop(_))
        ));
        assert!(matches!(
            RoadNetwork::new([v(0), v(1)], [], 5.0),
            Err(NetworkError::Disconnected)
        ));
    }

    fn cross_network() -> RoadNetwork {
        // Vertex 2 is the intersection of a horizontal (0-2-4) and a vertical
        // (1-2-3) road, 100 m from each start.
        RoadNetwork::new(
            [v(0), v(1), v(2), v(3), v(4)],
            [
                (v(0), v(2), 100.0),
                (v(2), v(4), 100.0),
                (v(1), v(2), 100.0),
                (v(2), v(3), 100.0),
            ],
            5.0,
        )
        .unwrap()
    }

    #[test]
    fn crossing_once_at_100m() {
        let net = cross_network();
        let pa = net.shortest_path(v(0), v(4)).unwrap();
        let pb = net.shortest_path(v(1), v(3)).unwrap();
        let report = crossing_intervals(&pa, &pb, &params(), &params(), &net);
        assert_eq!(report.crossings.len(), 1);
        assert!(report.shared_edges.is_empty());
        let c = &report.crossings[0];
        assert_eq!(c.intersection, v(2));
        assert_eq!(c.interval_a, (95.0, 120.0));
        assert_eq!(c.interval_b, (95.0, 120.0));
    }

    #[test]
    fn identical_paths_are_shared_edges_only() {
        let net = line_network(&[0, 1, 2], 100.0);
        let p = net.shortest_path(v(0), v(2)).unwrap();
        let report = crossing_intervals(&p, &p, &params(), &params(), &net);
        assert!(report.crossings.is_empty());
        assert_eq!(report.shared_edges.len(), 2);
    }

    #[test]
    fn meeting_only_at_goal_is_not_a_crossing() {
        // Two paths that share only their final vertex.
        let net = RoadNetwork::new(
            [v(0), v(1), v(2)],
            [(v(0), v(2), 100.0), (v(1), v(2), 100.0)],
            5.0,
        )
        .unwrap();
        let pa = net.shortest_path(v(0), v(2)).unwrap();
        let pb = net.shortest_path(v(1), v(2)).unwrap();
        let report = crossing_intervals(&pa, &pb, &params(), &params(), &net);
        assert!(report.crossings.is_empty());
    }

    #[test]
    fn crossing_symmetry() {
        let net = cross_network();
        let pa = net.shortest_path(v(0), v(4)).unwrap();
        let pb = net.shortest_path(v(1), v(3)).unwrap();
        let fwd = crossing_intervals(&pa, &pb, &params(), &params(), &net);
        let rev = crossing_intervals(&pb, &pa, &params(), &params(), &net);
        assert_eq!(fwd.crossings.len(), rev.crossings.len());
        for (f, r) in fwd.crossings.iter().zip(&rev.crossings) {
            assert_eq!(f.interval_a, r.interval_b);
            assert_eq!(f.interval_b, r.interval_a);
            assert_eq!(f.intersection, r.intersection);
        }
    }

    #[test]
    fn interval_width_is_2r_plus_length() {
        let net = cross_network();
        let pa = net.shortest_path(v(0), v(4)).unwrap();
        let pb = net.shortest_path(v(1), v(3)).unwrap();
        let report = crossing_intervals(&pa, &pb, &params(), &params(), &net);
        for c in &report.crossings {
            for (s, e) in [c.interval_a, c.interval_b] {
                assert!(s < e);
                assert!((e - s - (2.0 * 5.0 + 15.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let net = cross_network();
        let text = net.to_text();
        let parsed = RoadNetwork::parse(&text).unwrap();
        assert_eq!(parsed, net);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(matches!(
            RoadNetwork::parse("q 1 2\n"),
            Err(NetworkError::Parse { line: 1, .. })
        ));
    }
}
