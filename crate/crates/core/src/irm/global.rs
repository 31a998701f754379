//! Global IRM: sparse graph of breadcrumbs sampled from the pose graph and
//! frontiers on the covered/uncovered border.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::belief::{PoseGraph, RiskMap};
use crate::geometry::Cell;
use crate::irm::frontier::FrontierCandidate;
use crate::irm::path::grid_astar;
use crate::world::LETHAL_THRESHOLD;

pub type NodeId = u32;
pub type EdgeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Breadcrumb,
    Frontier,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Breadcrumb => "breadcrumb",
            NodeKind::Frontier => "frontier",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub cell: Cell,
    pub p_risk: f64,
    pub p_covered: f64,
    /// Uncovered-area estimate in cells; zero for breadcrumbs.
    pub area: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalEdge {
    pub id: EdgeId,
    pub a: NodeId,
    pub b: NodeId,
    /// Path length in meters.
    pub distance: f64,
    pub risk: f64,
    /// Grid path from `a` to `b` found when the edge was last validated; empty
    /// for edges set by hand.
    pub cells: Vec<Cell>,
}

impl GlobalEdge {
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }

    /// Stored grid path oriented to start at node `from`.
    pub fn cells_from(&self, from: NodeId) -> Vec<Cell> {
        let mut c = self.cells.clone();
        if from != self.a {
            c.reverse();
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalIrmParams {
    /// Minimum spacing between breadcrumbs, meters.
    pub breadcrumb_spacing: f64,
    /// Edges must be strictly shorter than this, meters.
    pub edge_max_distance: f64,
    /// Edges must carry strictly less risk than this.
    pub edge_max_risk: f64,
    /// Radius around the robot (and around each visited node) for edge recomputation, meters.
    pub neighborhood_radius: f64,
}

impl Default for GlobalIrmParams {
    fn default() -> Self {
        Self {
            breadcrumb_spacing: 2.0,
            edge_max_distance: 8.0,
            edge_max_risk: 0.7,
            neighborhood_radius: 8.0,
        }
    }
}

impl GlobalIrmParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.breadcrumb_spacing > 0.0 && self.edge_max_distance > 0.0 && self.neighborhood_radius > 0.0) {
            return Err("global IRM distances must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.edge_max_risk) {
            return Err("irm.edge_max_risk must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Distance and risk of the shortest known-safe grid path between two cells,
/// or `None` when no such path is shorter than `max_distance` meters.
pub fn edge_metrics(from: Cell, to: Cell, riskmap: &RiskMap, resolution: f64, max_distance: f64) -> Option<(f64, f64)> {
    edge_route(from, to, riskmap, resolution, max_distance).map(|(d, rho, _)| (d, rho))
}

/// [`edge_metrics`] together with the grid path realizing it.
pub fn edge_route(from: Cell, to: Cell, riskmap: &RiskMap, resolution: f64, max_distance: f64) -> Option<(f64, f64, Vec<Cell>)> {
    edge_route_below(from, to, riskmap, resolution, max_distance, LETHAL_THRESHOLD)
}

/// Like [`edge_route`] but only through known cells with risk below `max_risk`.
pub fn edge_route_below(
    from: Cell,
    to: Cell,
    riskmap: &RiskMap,
    resolution: f64,
    max_distance: f64,
    max_risk: f64,
) -> Option<(f64, f64, Vec<Cell>)> {
    let path = grid_astar(
        from,
        to,
        max_distance / resolution,
        |c| riskmap.get(c).is_some_and(|r| r < max_risk),
        |c| riskmap.get(c).unwrap_or(1.0),
    )?;
    let d = path.length * resolution;
    (d < max_distance).then_some((d, path.max_risk, path.cells))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateSummary {
    pub breadcrumbs_added: usize,
    pub frontiers_added: usize,
    pub frontiers_removed: usize,
    pub edges_added: usize,
    pub edges_removed: usize,
}

#[derive(Clone, Debug)]
pub struct GlobalIrm {
    params: GlobalIrmParams,
    resolution: f64,
    nodes: BTreeMap<NodeId, GlobalNode>,
    edges: BTreeMap<(NodeId, NodeId), GlobalEdge>,
    next_node: NodeId,
    next_edge: EdgeId,
    poses_consumed: usize,
    frontier_events: usize,
    /// Last breadcrumb the robot stood on and the cells walked since.
    anchor: Option<NodeId>,
    trail: Vec<Cell>,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl GlobalIrm {
    pub fn new(params: GlobalIrmParams, resolution: f64) -> Self {
        Self {
            params,
            resolution,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            next_node: 0,
            next_edge: 0,
            poses_consumed: 0,
            anchor: None,
            trail: Vec::new(),
            frontier_events: 0,
        }
    }

    pub fn params(&self) -> &GlobalIrmParams {
        &self.params
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn node(&self, id: NodeId) -> Option<&GlobalNode> {
        self.nodes.get(&id)
    }

    /// Nodes in insertion (id) order.
    pub fn nodes(&self) -> impl Iterator<Item = &GlobalNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &GlobalEdge> {
        self.edges.values()
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<&GlobalEdge> {
        self.edges.get(&key(a, b))
    }

    /// Incident edges of `n`, ordered by edge id.
    pub fn incident(&self, n: NodeId) -> Vec<&GlobalEdge> {
        let mut out: Vec<&GlobalEdge> = self.edges.values().filter(|e| e.a == n || e.b == n).collect();
        out.sort_by_key(|e| e.id);
        out
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn breadcrumb_count(&self) -> usize {
        self.nodes.values().filter(|n| n.kind == NodeKind::Breadcrumb).count()
    }

    pub fn frontier_count(&self) -> usize {
        self.nodes.values().filter(|n| n.kind == NodeKind::Frontier).count()
    }

    pub fn frontiers(&self) -> impl Iterator<Item = &GlobalNode> {
        self.nodes.values().filter(|n| n.kind == NodeKind::Frontier)
    }

    /// Number of frontier insertions over the graph's lifetime.
    pub fn frontier_events(&self) -> usize {
        self.frontier_events
    }

    fn dist_m(&self, a: Cell, b: Cell) -> f64 {
        a.dist(b) * self.resolution
    }

    /// Inserts a node directly; used to assemble graphs from external data.
    pub fn insert_node(&mut self, kind: NodeKind, cell: Cell, p_risk: f64, p_covered: f64, area: usize) -> NodeId {
        let id = self.next_node;
        self.next_node += 1;
        self.nodes.insert(
            id,
            GlobalNode {
                id,
                kind,
                cell,
                p_risk,
                p_covered,
                area,
            },
        );
        if kind == NodeKind::Frontier {
            self.frontier_events += 1;
        }
        id
    }

    /// Inserts or replaces the edge between two nodes. Returns `true` if the edge is new.
    pub fn set_edge(&mut self, a: NodeId, b: NodeId, distance: f64, risk: f64) -> bool {
        self.set_edge_route(a, b, distance, risk, Vec::new())
    }

    /// [`set_edge`](Self::set_edge) with the grid path from `a` to `b`.
    pub fn set_edge_route(&mut self, a: NodeId, b: NodeId, distance: f64, risk: f64, mut cells: Vec<Cell>) -> bool {
        let k = key(a, b);
        if a != k.0 {
            cells.reverse();
        }
        if let Some(e) = self.edges.get_mut(&k) {
            e.distance = distance;
            e.risk = risk;
            e.cells = cells;
            return false;
        }
        let id = self.next_edge;
        self.next_edge += 1;
        self.edges.insert(
            k,
            GlobalEdge {
                id,
                a: k.0,
                b: k.1,
                distance,
                risk,
                cells,
            },
        );
        true
    }

    fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        self.edges.remove(&key(a, b)).is_some()
    }

    fn remove_node(&mut self, id: NodeId) {
        self.nodes.remove(&id);
        self.edges.retain(|&(a, b), _| a != id && b != id);
    }

    fn route(&self, from: Cell, to: Cell, riskmap: &RiskMap, max_distance: f64) -> Option<(f64, f64, Vec<Cell>)> {
        edge_route_below(from, to, riskmap, self.resolution, max_distance, self.params.edge_max_risk)
    }

    fn edge_ok(&self, d: f64, rho: f64) -> bool {
        d < self.params.edge_max_distance && rho < self.params.edge_max_risk
    }

    /// One construction pass: sample breadcrumbs from poses not yet consumed,
    /// reconcile frontiers against the current detection, and recompute edges
    /// around the robot.
    pub fn update(&mut self, pose_graph: &PoseGraph, frontiers: &[FrontierCandidate], riskmap: &RiskMap) -> UpdateSummary {
        let mut summary = UpdateSummary::default();

        self.sample_breadcrumbs(pose_graph, riskmap, &mut summary);

        // Detection is authoritative over known cells of the window interior: keep
        // frontiers still detected at the same cell, drop the rest.
        let stale: Vec<NodeId> = self
            .frontiers()
            .filter(|f| riskmap.in_interior(f.cell) && riskmap.get(f.cell).is_some())
            .filter(|f| !frontiers.iter().any(|c| c.cell == f.cell))
            .map(|f| f.id)
            .collect();
        for id in stale {
            self.remove_node(id);
            summary.frontiers_removed += 1;
        }
        for cand in frontiers {
            let existing = self.frontiers().find(|f| f.cell == cand.cell).map(|f| f.id);
            if let Some(id) = existing {
                let n = self.nodes.get_mut(&id).expect("frontier exists");
                n.area = cand.area;
                n.p_covered = cand.p_covered;
                continue;
            }
            let links: Vec<(NodeId, f64, f64, Vec<Cell>)> = self
                .nodes
                .values()
                .filter(|n| n.kind == NodeKind::Breadcrumb)
                .filter(|n| self.dist_m(n.cell, cand.cell) < self.params.edge_max_distance)
                .filter_map(|n| {
                    let (d, rho, cells) = self.route(n.cell, cand.cell, riskmap, self.params.edge_max_distance)?;
                    self.edge_ok(d, rho).then_some((n.id, d, rho, cells))
                })
                .collect();
            if links.is_empty() {
                continue;
            }
            let p_risk = riskmap.get(cand.cell).unwrap_or(0.0);
            let id = self.insert_node(NodeKind::Frontier, cand.cell, p_risk, cand.p_covered, cand.area);
            summary.frontiers_added += 1;
            for (other, d, rho, mut cells) in links {
                cells.reverse();
                if self.set_edge_route(id, other, d, rho, cells) {
                    summary.edges_added += 1;
                }
            }
        }

        // Edge recomputation around the robot.
        if let Some(q) = pose_graph.last() {
            let radius = self.params.neighborhood_radius;
            let near: Vec<GlobalNode> = self
                .nodes
                .values()
                .filter(|n| self.dist_m(n.cell, q.cell) <= radius)
                .copied()
                .collect();
            let all: Vec<GlobalNode> = self.nodes.values().copied().collect();
            for ni in &near {
                for nj in &all {
                    if nj.id == ni.id || self.dist_m(ni.cell, nj.cell) > radius {
                        continue;
                    }
                    if ni.kind == NodeKind::Frontier && nj.kind == NodeKind::Frontier {
                        continue;
                    }
                    if !(riskmap.is_known_free(ni.cell) && riskmap.is_known_free(nj.cell)) {
                        continue;
                    }
                    match self.route(ni.cell, nj.cell, riskmap, self.params.edge_max_distance) {
                        Some((d, rho, cells)) if self.edge_ok(d, rho) => {
                            if self.set_edge_route(ni.id, nj.id, d, rho, cells) {
                                summary.edges_added += 1;
                            }
                        }
                        _ => {
                            // A stored path that runs through cells now out of
                            // view stays until the map shows it blocked.
                            let keep = self.edge_between(ni.id, nj.id).is_some_and(|e| self.path_still_open(e, riskmap));
                            if !keep && self.remove_edge(ni.id, nj.id) {
                                summary.edges_removed += 1;
                            }
                        }
                    }
                }
            }
        }

        let isolated: Vec<NodeId> = self
            .frontiers()
            .filter(|f| !self.edges.keys().any(|&(a, b)| a == f.id || b == f.id))
            .map(|f| f.id)
            .collect();
        for id in isolated {
            self.remove_node(id);
            summary.frontiers_removed += 1;
        }
        summary
    }

    /// Samples breadcrumbs from poses not yet consumed and links each new one
    /// to the breadcrumbs around it. Calling this after every pose keeps the
    /// links inside the risk-map window the pose was sensed with.
    pub fn sample_breadcrumbs(&mut self, pose_graph: &PoseGraph, riskmap: &RiskMap, summary: &mut UpdateSummary) {
        let spacing = self.params.breadcrumb_spacing;
        let fresh: Vec<Cell> = pose_graph.poses()[self.poses_consumed.min(pose_graph.len())..]
            .iter()
            .map(|&(_, p)| p.cell)
            .collect();
        self.poses_consumed = pose_graph.len();
        for cell in fresh {
            if self.trail.last() != Some(&cell) {
                self.trail.push(cell);
            }
            let far = self
                .nodes
                .values()
                .filter(|n| n.kind == NodeKind::Breadcrumb)
                .all(|n| self.dist_m(n.cell, cell) >= spacing - 1e-9);
            let p_risk = riskmap.get(cell).unwrap_or(0.0);
            if far && p_risk < self.params.edge_max_risk {
                summary.breadcrumbs_added += 1;
                let id = self.insert_node(NodeKind::Breadcrumb, cell, p_risk, 1.0, 0);
                self.link_trail(id, riskmap, summary);
                let near: Vec<GlobalNode> = self
                    .nodes
                    .values()
                    .filter(|n| n.id != id && n.kind == NodeKind::Breadcrumb)
                    .filter(|n| self.dist_m(n.cell, cell) < self.params.edge_max_distance && riskmap.is_known_free(n.cell))
                    .copied()
                    .collect();
                for n in near {
                    if let Some((d, rho, cells)) = self.route(cell, n.cell, riskmap, self.params.edge_max_distance) {
                        if self.edge_ok(d, rho) && self.set_edge_route(id, n.id, d, rho, cells) {
                            summary.edges_added += 1;
                        }
                    }
                }
            } else {
                self.reanchor(cell, riskmap, summary);
            }
        }
    }

    /// Near an existing breadcrumb, hands the trail over to it: the old anchor
    /// is linked through the trail and the trail restarts at the breadcrumb.
    fn reanchor(&mut self, cell: Cell, riskmap: &RiskMap, summary: &mut UpdateSummary) {
        let nearest = self
            .nodes
            .values()
            .filter(|n| n.kind == NodeKind::Breadcrumb)
            .map(|n| (self.dist_m(n.cell, cell), n.id, n.cell))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((d, id, at)) = nearest else { return };
        if d >= self.params.breadcrumb_spacing {
            return;
        }
        let Some((_, _, path)) = self.route(cell, at, riskmap, 2.0 * self.params.breadcrumb_spacing) else {
            return;
        };
        if self.anchor != Some(id) {
            self.trail.extend_from_slice(&path[1..]);
            self.link_trail(id, riskmap, summary);
        }
        self.trail = path.into_iter().rev().collect();
    }

    /// Joins consecutive breadcrumbs along the walked trail, which is known
    /// traversable even after it leaves the risk-map window.
    fn link_trail(&mut self, id: NodeId, riskmap: &RiskMap, summary: &mut UpdateSummary) {
        if let Some(prev) = self.anchor.filter(|&a| a != id && self.nodes.contains_key(&a)) {
            let cells = std::mem::take(&mut self.trail);
            let d = cells.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>() * self.resolution;
            let rho = cells.iter().map(|&c| riskmap.get(c).unwrap_or(0.0)).fold(0.0, f64::max);
            let better = self.edge_between(prev, id).is_none_or(|e| d < e.distance - 1e-9);
            if self.edge_ok(d, rho) && better && self.set_edge_route(prev, id, d, rho, cells) {
                summary.edges_added += 1;
            }
        }
        self.anchor = Some(id);
        self.trail = vec![self.nodes[&id].cell];
    }

    fn path_still_open(&self, e: &GlobalEdge, riskmap: &RiskMap) -> bool {
        !e.cells.is_empty()
            && e.cells
                .iter()
                .all(|&c| riskmap.get(c).is_none_or(|r| r < self.params.edge_max_risk && !riskmap.is_known_lethal(c)))
    }

    /// Checks every structural invariant of the graph.
    pub fn validate(&self) -> Result<(), String> {
        let crumbs: Vec<&GlobalNode> = self.nodes.values().filter(|n| n.kind == NodeKind::Breadcrumb).collect();
        for (i, a) in crumbs.iter().enumerate() {
            for b in &crumbs[i + 1..] {
                let d = self.dist_m(a.cell, b.cell);
                if d < self.params.breadcrumb_spacing - 1e-9 {
                    return Err(format!("breadcrumbs {} and {} are {d} m apart", a.id, b.id));
                }
            }
        }
        for e in self.edges.values() {
            if !self.nodes.contains_key(&e.a) || !self.nodes.contains_key(&e.b) {
                return Err(format!("edge {} references a missing node", e.id));
            }
            if !self.edge_ok(e.distance, e.risk) {
                return Err(format!("edge {} violates thresholds (d={}, rho={})", e.id, e.distance, e.risk));
            }
        }
        for f in self.frontiers() {
            if self.incident(f.id).is_empty() {
                return Err(format!("frontier {} is isolated", f.id));
            }
        }
        Ok(())
    }

    /// `node id kind x y p_risk p_covered area` and `edge id_a id_b d rho` records.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in self.nodes.values() {
            let _ = writeln!(
                out,
                "node {} {} {} {} {} {} {}",
                n.id,
                n.kind,
                (f64::from(n.cell.x) + 0.5) * self.resolution,
                (f64::from(n.cell.y) + 0.5) * self.resolution,
                n.p_risk,
                n.p_covered,
                n.area
            );
        }
        for e in self.edges.values() {
            let _ = writeln!(out, "edge {} {} {} {}", e.a, e.b, e.distance, e.risk);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Heading;
    use crate::world::RobotPose;

    fn open_map(size: usize, center: Cell) -> RiskMap {
        let mut rm = RiskMap::new(size, RobotPose::new(center, Heading::E));
        let cells: Vec<Cell> = rm.window_cells().collect();
        for c in cells {
            rm.set(c, 0.0);
        }
        rm
    }

    #[test]
    fn adjacent_edge_metrics() {
        let rm = open_map(5, Cell::new(2, 2));
        assert_eq!(edge_metrics(Cell::new(2, 2), Cell::new(3, 2), &rm, 0.5, 8.0), Some((0.5, 0.0)));
    }

    #[test]
    fn path_risk_is_max_along_path() {
        let mut rm = RiskMap::new(5, RobotPose::new(Cell::new(2, 2), Heading::E));
        for x in 0..5 {
            rm.set(Cell::new(x, 2), 0.0);
        }
        rm.set(Cell::new(2, 2), 0.5);
        let (d, rho) = edge_metrics(Cell::new(0, 2), Cell::new(4, 2), &rm, 1.0, 8.0).unwrap();
        assert_eq!((d, rho), (4.0, 0.5));
    }

    #[test]
    fn first_update_places_one_breadcrumb() {
        let rm = open_map(9, Cell::new(4, 4));
        let mut pg = PoseGraph::new();
        pg.append(RobotPose::new(Cell::new(4, 4), Heading::E), 0).unwrap();
        let mut g = GlobalIrm::new(GlobalIrmParams::default(), 1.0);
        let s = g.update(&pg, &[], &rm);
        assert_eq!(s.breadcrumbs_added, 1);
        assert_eq!(g.breadcrumb_count(), 1);
        pg.append(RobotPose::new(Cell::new(5, 4), Heading::E), 1).unwrap();
        g.update(&pg, &[], &rm);
        assert_eq!(g.breadcrumb_count(), 1, "half the spacing adds nothing");
        g.validate().unwrap();
    }
}
