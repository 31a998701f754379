//! Local IRM: a dense 8-connected lattice over the known, sub-lethal cells of
//! the rolling risk-map window.

use std::fmt::Write as _;

use crate::belief::{CoverageBelief, RiskMap, COVERAGE_PRIOR};
use crate::geometry::{Cell, Heading};
use crate::irm::path::MinQueue;
use crate::world::RobotPose;

pub type LocalNodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalNode {
    pub cell: Cell,
    pub p_risk: f64,
    pub p_covered: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalEdge {
    pub a: LocalNodeId,
    pub b: LocalNodeId,
    /// Meters.
    pub distance: f64,
    pub risk: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Unknown,
    Lethal,
    Node(LocalNodeId),
}

#[derive(Clone, Debug)]
pub struct LocalIrm {
    center: RobotPose,
    origin: Cell,
    size: usize,
    resolution: f64,
    slots: Vec<Slot>,
    nodes: Vec<LocalNode>,
    edges: Vec<LocalEdge>,
    /// Per node, the edge leaving in each heading.
    adjacency: Vec<[Option<usize>; 8]>,
}

impl LocalIrm {
    pub fn center(&self) -> RobotPose {
        self.center
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn window_size(&self) -> usize {
        self.size
    }

    pub fn nodes(&self) -> &[LocalNode] {
        &self.nodes
    }

    pub fn node(&self, id: LocalNodeId) -> &LocalNode {
        &self.nodes[id]
    }

    pub fn edges(&self) -> &[LocalEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.slot_index(c).is_some()
    }

    fn slot_index(&self, c: Cell) -> Option<usize> {
        let dx = c.x - self.origin.x;
        let dy = c.y - self.origin.y;
        let n = self.size as i32;
        (dx >= 0 && dy >= 0 && dx < n && dy < n).then(|| dy as usize * self.size + dx as usize)
    }

    pub fn node_at(&self, c: Cell) -> Option<LocalNodeId> {
        match self.slot_index(c).map(|i| self.slots[i]) {
            Some(Slot::Node(id)) => Some(id),
            _ => None,
        }
    }

    /// True for window cells the risk map reports as lethal; these occlude predicted sensing.
    pub fn is_known_lethal(&self, c: Cell) -> bool {
        matches!(self.slot_index(c).map(|i| self.slots[i]), Some(Slot::Lethal))
    }

    pub fn is_unknown(&self, c: Cell) -> bool {
        matches!(self.slot_index(c).map(|i| self.slots[i]), Some(Slot::Unknown) | None)
    }

    pub fn edge_from(&self, node: LocalNodeId, heading: Heading) -> Option<&LocalEdge> {
        self.adjacency[node][heading.index()].map(|e| &self.edges[e])
    }

    /// Node reached by leaving `node` along `heading`, if that edge exists.
    pub fn neighbor(&self, node: LocalNodeId, heading: Heading) -> Option<LocalNodeId> {
        self.edge_from(node, heading)
            .map(|e| if e.a == node { e.b } else { e.a })
    }

    /// Dijkstra from `source` with per-edge cost `cost(edge)`. Returns
    /// the cost to each node (`INFINITY` when unreachable) and the predecessor
    /// (node, heading into the node).
    pub fn dijkstra(
        &self,
        source: LocalNodeId,
        mut cost: impl FnMut(&LocalEdge) -> f64,
    ) -> (Vec<f64>, Vec<Option<(LocalNodeId, Heading)>>) {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut pred = vec![None; self.nodes.len()];
        let mut queue = MinQueue::new();
        dist[source] = 0.0;
        queue.push(0.0, source);
        while let Some((d, n)) = queue.pop() {
            if d > dist[n] {
                continue;
            }
            for h in Heading::ALL {
                if let Some(e) = self.edge_from(n, h) {
                    let m = if e.a == n { e.b } else { e.a };
                    let nd = d + cost(e);
                    if nd < dist[m] - 1e-12 {
                        dist[m] = nd;
                        pred[m] = Some((n, h));
                        queue.push(nd, m);
                    }
                }
            }
        }
        (dist, pred)
    }

    /// Headings from the Dijkstra source to `target` using a predecessor table.
    pub fn path_to(pred: &[Option<(LocalNodeId, Heading)>], source: LocalNodeId, target: LocalNodeId) -> Option<Vec<Heading>> {
        let mut out = Vec::new();
        let mut cur = target;
        while cur != source {
            let (p, h) = pred[cur]?;
            out.push(h);
            cur = p;
        }
        out.reverse();
        Some(out)
    }

    /// `node id kind x y p_risk p_covered area` and `edge id_a id_b d rho` records.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "node {i} local {} {} {} {} 0",
                (f64::from(n.cell.x) + 0.5) * self.resolution,
                (f64::from(n.cell.y) + 0.5) * self.resolution,
                n.p_risk,
                n.p_covered
            );
        }
        for e in &self.edges {
            let _ = writeln!(out, "edge {} {} {} {}", e.a, e.b, e.distance, e.risk);
        }
        out
    }
}

/// One node per known sub-lethal window cell, 8-connected edges without corner cutting.
pub fn build_local_irm(riskmap: &RiskMap, coverage: &CoverageBelief, pose: RobotPose, resolution: f64) -> LocalIrm {
    let size = riskmap.window_size();
    let origin = riskmap.origin();
    let mut slots = Vec::with_capacity(size * size);
    let mut nodes = Vec::new();
    for c in riskmap.window_cells() {
        let slot = match riskmap.get(c) {
            None => Slot::Unknown,
            Some(_) if riskmap.is_known_lethal(c) => Slot::Lethal,
            Some(r) => {
                nodes.push(LocalNode {
                    cell: c,
                    p_risk: r,
                    p_covered: coverage.get(c).unwrap_or(COVERAGE_PRIOR),
                });
                Slot::Node(nodes.len() - 1)
            }
        };
        slots.push(slot);
    }
    let mut irm = LocalIrm {
        center: pose,
        origin,
        size,
        resolution,
        slots,
        nodes,
        edges: Vec::new(),
        adjacency: Vec::new(),
    };
    if irm.node_at(pose.cell).is_none() {
        if let Some(i) = irm.slot_index(pose.cell) {
            irm.nodes.push(LocalNode {
                cell: pose.cell,
                p_risk: 0.0,
                p_covered: coverage.get(pose.cell).unwrap_or(COVERAGE_PRIOR),
            });
            irm.slots[i] = Slot::Node(irm.nodes.len() - 1);
        }
    }

    irm.adjacency = vec![[None; 8]; irm.nodes.len()];
    for a in 0..irm.nodes.len() {
        let ca = irm.nodes[a].cell;
        // Forward half of the headings so each undirected edge is visited once.
        for h in [Heading::E, Heading::SE, Heading::S, Heading::SW] {
            let Some(b) = irm.node_at(ca.step(h)) else { continue };
            if h.is_diagonal() {
                let (dx, dy) = h.delta();
                if irm.node_at(ca.offset(dx, 0)).is_none() || irm.node_at(ca.offset(0, dy)).is_none() {
                    continue;
                }
            }
            let e = irm.edges.len();
            irm.edges.push(LocalEdge {
                a,
                b,
                distance: h.length() * resolution,
                risk: irm.nodes[a].p_risk.max(irm.nodes[b].p_risk),
            });
            irm.adjacency[a][h.index()] = Some(e);
            irm.adjacency[b][(h.index() + 4) % 8] = Some(e);
        }
    }
    irm
}
