//! Comparison planners on the same IRM substrate: next-best-view sampling and
//! hierarchical frontier exploration.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{Cell, Heading};
use crate::irm::global::{GlobalIrm, NodeId, NodeKind};
use crate::irm::local::{LocalIrm, LocalNodeId};
use crate::irm::path::MinQueue;
use crate::lcp::sim::{LocalModel, LocalSimState};
use crate::world::LETHAL_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("no reachable viewpoint")]
    NoViewpoint,
    #[error("no frontier remains")]
    Done,
    #[error("no frontier is reachable")]
    Unreachable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Viewpoint {
    pub sample: usize,
    pub node: LocalNodeId,
    pub cell: Cell,
    pub path: Vec<Heading>,
    /// Path length in meters.
    pub path_length: f64,
    pub info: f64,
    pub reward: f64,
}

/// Samples `n_samples` sub-lethal Local IRM nodes uniformly and returns the one
/// whose distance-only shortest path maximizes `k_I·I − k_C·k_d·length`
/// (ties by sample index), together with every evaluated candidate.
pub fn nbv_plan<R: Rng + ?Sized>(
    model: &LocalModel,
    root: &LocalSimState,
    n_samples: usize,
    rng: &mut R,
) -> Result<(Viewpoint, Vec<Viewpoint>), BaselineError> {
    let irm = model.irm();
    let w = *model.weights();
    let pool: Vec<LocalNodeId> = (0..irm.len()).filter(|&n| irm.node(n).p_risk < LETHAL_THRESHOLD).collect();
    if pool.is_empty() {
        return Err(BaselineError::NoViewpoint);
    }
    let (dist, pred) = irm.dijkstra(root.node, |e| e.distance);
    let mut candidates = Vec::with_capacity(n_samples);
    for sample in 0..n_samples {
        let node = pool[rng.random_range(0..pool.len())];
        if !dist[node].is_finite() {
            continue;
        }
        let path = LocalIrm::path_to(&pred, root.node, node).expect("finite distance has a path");
        let mut state = root.clone();
        let mut info = 0.0;
        for &h in &path {
            info += model.primitive_step(&mut state, h).expect("path follows lattice edges").info;
        }
        let reward = w.k_info * info - w.k_cost * w.k_dist * dist[node];
        candidates.push(Viewpoint {
            sample,
            node,
            cell: irm.node(node).cell,
            path,
            path_length: dist[node],
            info,
            reward,
        });
    }
    let best = candidates
        .iter()
        .fold(None::<&Viewpoint>, |b, c| match b {
            Some(b) if b.reward >= c.reward => Some(b),
            _ => Some(c),
        })
        .cloned()
        .ok_or(BaselineError::NoViewpoint)?;
    Ok((best, candidates))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfeScope {
    Local,
    Global,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HfeChoice {
    pub frontier: NodeId,
    pub scope: HfeScope,
    pub score: f64,
    /// Path cost to the frontier in meters.
    pub cost: f64,
    /// Global nodes to pass through; for a local choice just the frontier.
    pub route: Vec<NodeId>,
}

/// Shortest distance over the Global IRM from several weighted sources. Paths
/// do not pass through frontiers.
pub fn global_distances(irm: &GlobalIrm, sources: &[(NodeId, f64)]) -> (BTreeMap<NodeId, f64>, BTreeMap<NodeId, NodeId>) {
    let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut pred = BTreeMap::new();
    let mut queue = MinQueue::new();
    for &(s, d) in sources {
        if dist.get(&s).is_none_or(|&old| d < old) {
            dist.insert(s, d);
            queue.push(d, s);
        }
    }
    while let Some((d, n)) = queue.pop() {
        if d > dist[&n] {
            continue;
        }
        if irm.node(n).is_some_and(|x| x.kind == NodeKind::Frontier) {
            continue;
        }
        for e in irm.incident(n) {
            let m = e.other(n);
            let nd = d + e.distance;
            if dist.get(&m).is_none_or(|&old| nd < old - 1e-12) {
                dist.insert(m, nd);
                pred.insert(m, n);
                queue.push(nd, m);
            }
        }
    }
    (dist, pred)
}

/// Frontier with the best area-to-cost ratio, preferring those reachable
/// inside the Local IRM window.
pub fn hfe_plan(global: &GlobalIrm, local: &LocalIrm, robot: LocalNodeId) -> Result<HfeChoice, BaselineError> {
    if global.frontier_count() == 0 {
        return Err(BaselineError::Done);
    }
    let res = local.resolution();
    let (local_dist, _) = local.dijkstra(robot, |e| e.distance);
    let robot_cell = local.node(robot).cell;
    let score = |area: usize, cost: f64| area as f64 / cost.max(res);

    let mut best: Option<HfeChoice> = None;
    fn consider(best: &mut Option<HfeChoice>, c: HfeChoice) {
        if best.as_ref().is_none_or(|b| c.score > b.score) {
            *best = Some(c);
        }
    }
    for f in global.frontiers() {
        let Some(n) = local.node_at(f.cell) else { continue };
        if n == robot || !local_dist[n].is_finite() {
            continue;
        }
        consider(&mut best, HfeChoice {
            frontier: f.id,
            scope: HfeScope::Local,
            score: score(f.area, local_dist[n]),
            cost: local_dist[n],
            route: vec![f.id],
        });
    }
    if let Some(b) = best {
        return Ok(b);
    }

    // Global scope: enter the graph at any node reachable in the window.
    let sources: Vec<(NodeId, f64)> = global
        .nodes()
        .filter(|n| n.kind == NodeKind::Breadcrumb)
        .filter_map(|n| {
            let m = local.node_at(n.cell)?;
            local_dist[m].is_finite().then_some((n.id, local_dist[m]))
        })
        .collect();
    let sources = if sources.is_empty() {
        nearest_breadcrumb(global, robot_cell, res).into_iter().collect()
    } else {
        sources
    };
    let (dist, pred) = global_distances(global, &sources);
    for f in global.frontiers() {
        let Some(&d) = dist.get(&f.id) else { continue };
        let mut route = vec![f.id];
        let mut cur = f.id;
        while let Some(&p) = pred.get(&cur) {
            route.push(p);
            cur = p;
        }
        route.reverse();
        consider(&mut best, HfeChoice {
            frontier: f.id,
            scope: HfeScope::Global,
            score: score(f.area, d),
            cost: d,
            route,
        });
    }
    best.ok_or(BaselineError::Unreachable)
}

fn nearest_breadcrumb(global: &GlobalIrm, cell: Cell, res: f64) -> Option<(NodeId, f64)> {
    global
        .nodes()
        .filter(|n| n.kind == NodeKind::Breadcrumb)
        .map(|n| (n.id, n.cell.dist(cell) * res))
        .fold(None, |b: Option<(NodeId, f64)>, c| match b {
            Some(b) if b.1 <= c.1 => Some(b),
            _ => Some(c),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{CoverageBelief, RiskMap};
    use crate::irm::global::GlobalIrmParams;
    use crate::irm::local::build_local_irm;
    use crate::world::RobotPose;

    fn open_local(size: usize) -> (LocalIrm, LocalNodeId) {
        let h = (size / 2) as i32;
        let pose = RobotPose::new(Cell::new(h, h), Heading::E);
        let mut rm = RiskMap::new(size, pose);
        let cells: Vec<Cell> = rm.window_cells().collect();
        for c in cells {
            rm.set(c, 0.0);
        }
        let irm = build_local_irm(&rm, &CoverageBelief::new(), pose, 1.0);
        let n = irm.node_at(pose.cell).unwrap();
        (irm, n)
    }

    #[test]
    fn hfe_prefers_larger_area_at_equal_distance() {
        let (local, robot) = open_local(9);
        let mut g = GlobalIrm::new(GlobalIrmParams::default(), 1.0);
        let b = g.insert_node(NodeKind::Breadcrumb, Cell::new(4, 4), 0.0, 1.0, 0);
        let small = g.insert_node(NodeKind::Frontier, Cell::new(1, 4), 0.0, 0.5, 3);
        let large = g.insert_node(NodeKind::Frontier, Cell::new(7, 4), 0.0, 0.5, 10);
        g.set_edge(b, small, 3.0, 0.0);
        g.set_edge(b, large, 3.0, 0.0);
        let c = hfe_plan(&g, &local, robot).unwrap();
        assert_eq!(c.frontier, large);
        assert_eq!(c.scope, HfeScope::Local);
    }

    #[test]
    fn hfe_done_without_frontiers() {
        let (local, robot) = open_local(5);
        let g = GlobalIrm::new(GlobalIrmParams::default(), 1.0);
        assert_eq!(hfe_plan(&g, &local, robot), Err(BaselineError::Done));
    }
}
