//! Global coverage planner: QMDP over the Global IRM with frontiers as
//! absorbing terminal states.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::irm::global::{EdgeId, GlobalEdge, GlobalIrm, NodeId, NodeKind};
use crate::irm::path::MinQueue;
use crate::reward::RewardWeights;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GcpParams {
    /// Global discount; 1 makes values the net reward-to-go.
    pub gamma: f64,
    pub epsilon: f64,
    pub max_sweeps: usize,
}

impl Default for GcpParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            epsilon: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

impl GcpParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("gcp.gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.epsilon > 0.0) || self.max_sweeps == 0 {
            return Err("gcp.epsilon and gcp.max_sweeps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GcpError {
    #[error("pose belief is empty")]
    EmptyBelief,
    #[error("pose belief weights must be non-negative and sum to 1")]
    InvalidWeights,
    #[error("belief node {0} is not in the value table")]
    UnknownNode(NodeId),
    #[error("no feasible global action from node {0}")]
    NoFeasibleAction(NodeId),
}

/// Weighted set of candidate Global IRM nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseBelief {
    weights: Vec<(NodeId, f64)>,
}

impl PoseBelief {
    pub fn new(weights: Vec<(NodeId, f64)>) -> Result<Self, GcpError> {
        if weights.is_empty() {
            return Err(GcpError::EmptyBelief);
        }
        let total: f64 = weights.iter().map(|w| w.1).sum();
        if weights.iter().any(|w| !(w.1 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(GcpError::InvalidWeights);
        }
        Ok(Self { weights })
    }

    pub fn point_mass(node: NodeId) -> Self {
        Self {
            weights: vec![(node, 1.0)],
        }
    }

    pub fn weights(&self) -> &[(NodeId, f64)] {
        &self.weights
    }

    /// Highest-weight node; ties go to the lowest id.
    pub fn mode(&self) -> NodeId {
        let mut best = self.weights[0];
        for &(n, w) in &self.weights[1..] {
            if w > best.1 || (w == best.1 && n < best.0) {
                best = (n, w);
            }
        }
        best.0
    }
}

/// Cost of traversing a global edge; heading change is undefined at this level.
pub fn edge_cost(e: &GlobalEdge, w: &RewardWeights) -> f64 {
    w.k_dist * e.distance + w.k_risk * e.risk
}

pub fn terminal_reward(area: usize, w: &RewardWeights) -> f64 {
    w.k_info * area as f64
}

#[derive(Clone, Debug)]
pub struct GlobalValueTable {
    values: BTreeMap<NodeId, f64>,
    q: BTreeMap<(NodeId, EdgeId), f64>,
    hops: BTreeMap<NodeId, usize>,
    edges: BTreeMap<EdgeId, GlobalEdge>,
    adjacency: BTreeMap<NodeId, Vec<EdgeId>>,
    kinds: BTreeMap<NodeId, NodeKind>,
    step_costs: BTreeMap<EdgeId, f64>,
    gamma: f64,
    iterations: usize,
    residual: f64,
    complete: bool,
}

impl GlobalValueTable {
    pub fn value(&self, n: NodeId) -> Option<f64> {
        self.values.get(&n).copied()
    }

    pub fn values(&self) -> &BTreeMap<NodeId, f64> {
        &self.values
    }

    pub fn q(&self, n: NodeId, e: EdgeId) -> Option<f64> {
        self.q.get(&(n, e)).copied()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// True when the graph holds no frontier.
    pub fn exploration_complete(&self) -> bool {
        self.complete
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.values.contains_key(&n)
    }

    fn is_frontier(&self, n: NodeId) -> bool {
        self.kinds.get(&n) == Some(&NodeKind::Frontier)
    }

    /// Best outgoing edge of `n` by (Q desc, hops of the far end asc, edge id asc).
    fn best_edge(&self, n: NodeId, skip: &BTreeSet<NodeId>) -> Option<(EdgeId, NodeId, f64)> {
        let mut best: Option<(EdgeId, NodeId, f64, usize)> = None;
        for &eid in self.adjacency.get(&n)? {
            let Some(&q) = self.q.get(&(n, eid)) else { continue };
            if q == f64::NEG_INFINITY {
                continue;
            }
            let m = self.edges[&eid].other(n);
            if skip.contains(&m) {
                continue;
            }
            let h = self.hops.get(&m).copied().unwrap_or(usize::MAX);
            let better = match best {
                None => true,
                Some((_, _, bq, bh)) => q > bq + 1e-12 || ((q - bq).abs() <= 1e-12 && h < bh),
            };
            if better {
                best = Some((eid, m, q, h));
            }
        }
        best.map(|(e, m, q, _)| (e, m, q))
    }

    /// Node sequence following the greedy value chain from `start` until a frontier.
    pub fn greedy_chain(&self, start: NodeId) -> Vec<NodeId> {
        let mut chain = vec![start];
        let mut visited = BTreeSet::from([start]);
        let mut cur = start;
        while !self.is_frontier(cur) {
            let Some((_, m, _)) = self.best_edge(cur, &visited) else { break };
            chain.push(m);
            visited.insert(m);
            cur = m;
        }
        chain
    }

    /// `node id V` records.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (n, v) in &self.values {
            let _ = writeln!(out, "node {n} {v}");
        }
        out
    }
}

/// Gauss-Seidel value iteration in node-id order. Breadcrumbs that cannot reach
/// a frontier keep value `-inf`.
pub fn value_iteration(irm: &GlobalIrm, w: &RewardWeights, params: &GcpParams) -> GlobalValueTable {
    let mut values: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut kinds = BTreeMap::new();
    let mut adjacency: BTreeMap<NodeId, Vec<EdgeId>> = BTreeMap::new();
    for n in irm.nodes() {
        kinds.insert(n.id, n.kind);
        adjacency.insert(n.id, Vec::new());
        let v = match n.kind {
            NodeKind::Frontier => terminal_reward(n.area, w),
            NodeKind::Breadcrumb => f64::NEG_INFINITY,
        };
        values.insert(n.id, v);
    }
    let mut edges = BTreeMap::new();
    let mut step_costs = BTreeMap::new();
    for e in irm.edges() {
        edges.insert(e.id, e.clone());
        step_costs.insert(e.id, w.k_cost * edge_cost(e, w));
        adjacency.get_mut(&e.a).expect("edge endpoint").push(e.id);
        adjacency.get_mut(&e.b).expect("edge endpoint").push(e.id);
    }
    for list in adjacency.values_mut() {
        list.sort_unstable();
    }
    let complete = irm.frontier_count() == 0;

    let mut table = GlobalValueTable {
        values,
        q: BTreeMap::new(),
        hops: BTreeMap::new(),
        edges,
        adjacency,
        kinds,
        step_costs,
        gamma: params.gamma,
        iterations: 0,
        residual: 0.0,
        complete,
    };
    if complete {
        for v in table.values.values_mut() {
            *v = 0.0;
        }
        return table;
    }

    let order: Vec<NodeId> = table
        .values
        .keys()
        .copied()
        .filter(|n| table.kinds[n] == NodeKind::Breadcrumb)
        .collect();
    loop {
        table.iterations += 1;
        let mut residual: f64 = 0.0;
        for &n in &order {
            let old = table.values[&n];
            let new = table.adjacency[&n]
                .iter()
                .map(|eid| {
                    let m = table.edges[eid].other(n);
                    -table.step_costs[eid] + params.gamma * table.values[&m]
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if new.is_finite() {
                let delta = if old.is_finite() { (new - old).abs() } else { f64::INFINITY };
                residual = residual.max(delta);
                table.values.insert(n, new);
            }
        }
        table.residual = residual;
        if residual < params.epsilon || table.iterations >= params.max_sweeps {
            break;
        }
    }

    for (&n, list) in &table.adjacency {
        if table.kinds[&n] == NodeKind::Frontier {
            continue;
        }
        for eid in list {
            let m = table.edges[eid].other(n);
            let q = -table.step_costs[eid] + params.gamma * table.values[&m];
            table.q.insert((n, *eid), q);
        }
    }

    // Hop count to a frontier along value-tight edges, for tie-breaking chains.
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    for (&n, k) in &table.kinds {
        if *k == NodeKind::Frontier {
            table.hops.insert(n, 0);
            queue.push_back(n);
        }
    }
    while let Some(m) = queue.pop_front() {
        let hm = table.hops[&m];
        for eid in &table.adjacency[&m] {
            let n = table.edges[eid].other(m);
            if table.hops.contains_key(&n) || table.kinds[&n] == NodeKind::Frontier {
                continue;
            }
            let vn = table.values[&n];
            let q = table.q[&(n, *eid)];
            if vn.is_finite() && q >= vn - 1e-9 {
                table.hops.insert(n, hm + 1);
                queue.push_back(n);
            }
        }
    }
    table
}

#[derive(Clone, Debug, PartialEq)]
pub struct QmdpAction {
    /// Node the belief mode sits on.
    pub location: NodeId,
    /// Edge to traverse; `None` when the location is already a frontier.
    pub edge: Option<EdgeId>,
    pub target: NodeId,
    /// Frontier at the end of the greedy value chain.
    pub goal: NodeId,
    /// Belief-weighted Q of the chosen action.
    pub value: f64,
    /// Greedy chain from `location` to `goal`.
    pub chain: Vec<NodeId>,
}

impl GlobalValueTable {
    /// Shortest weighted-cost distances from `source` over the table's graph.
    fn cost_from(&self, source: NodeId) -> BTreeMap<NodeId, f64> {
        let mut dist = BTreeMap::from([(source, 0.0)]);
        let mut queue = MinQueue::new();
        queue.push(0.0, source);
        while let Some((d, n)) = queue.pop() {
            if d > dist[&n] {
                continue;
            }
            if n != source && self.is_frontier(n) {
                continue;
            }
            for eid in &self.adjacency[&n] {
                let m = self.edges[eid].other(n);
                let nd = d + self.step_costs[eid];
                if dist.get(&m).is_none_or(|&old| nd < old - 1e-12) {
                    dist.insert(m, nd);
                    queue.push(nd, m);
                }
            }
        }
        dist
    }

    /// Q_MDP for "move to `target`" from belief node `q`.
    fn q_toward(&self, q: NodeId, target: NodeId, cache: &mut BTreeMap<NodeId, BTreeMap<NodeId, f64>>) -> f64 {
        if q == target {
            return self.values[&target];
        }
        if let Some(&eid) = self.adjacency[&q].iter().find(|e| self.edges[e].other(q) == target) {
            if let Some(&v) = self.q.get(&(q, eid)) {
                return v;
            }
        }
        if self.is_frontier(q) {
            return f64::NEG_INFINITY;
        }
        let dist = cache.entry(q).or_insert_with(|| self.cost_from(q));
        match dist.get(&target) {
            Some(d) => -d + self.gamma * self.values[&target],
            None => f64::NEG_INFINITY,
        }
    }
}

/// Belief-weighted argmax over the actions available at the belief mode.
pub fn qmdp_action(table: &GlobalValueTable, belief: &PoseBelief) -> Result<QmdpAction, GcpError> {
    for &(n, _) in belief.weights() {
        if !table.contains(n) {
            return Err(GcpError::UnknownNode(n));
        }
    }
    let location = belief.mode();
    if table.is_frontier(location) {
        return Ok(QmdpAction {
            location,
            edge: None,
            target: location,
            goal: location,
            value: table.values[&location],
            chain: vec![location],
        });
    }
    let mut cache = BTreeMap::new();
    let mut best: Option<(f64, NodeId, EdgeId)> = None;
    for &eid in &table.adjacency[&location] {
        let target = table.edges[&eid].other(location);
        let mut value = 0.0;
        for &(q, wq) in belief.weights() {
            if wq == 0.0 {
                continue;
            }
            value += wq * table.q_toward(q, target, &mut cache);
        }
        if value == f64::NEG_INFINITY || value.is_nan() {
            continue;
        }
        let better = match best {
            None => true,
            Some((bv, bt, be)) => {
                value > bv + 1e-12 || ((value - bv).abs() <= 1e-12 && (target, eid) < (bt, be))
            }
        };
        if better {
            best = Some((value, target, eid));
        }
    }
    let (value, target, edge) = best.ok_or(GcpError::NoFeasibleAction(location))?;
    let mut chain = vec![location];
    chain.extend(table.greedy_chain(target));
    let goal = *chain.last().expect("chain non-empty");
    Ok(QmdpAction {
        location,
        edge: Some(edge),
        target,
        goal,
        value,
        chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cell;
    use crate::irm::global::GlobalIrmParams;

    fn unit_weights() -> RewardWeights {
        RewardWeights {
            k_info: 1.0,
            k_cost: 1.0,
            k_dist: 1.0,
            k_risk: 0.0,
            k_turn: 0.0,
            gamma: 1.0,
        }
    }

    fn abf() -> (GlobalIrm, [NodeId; 3]) {
        let mut g = GlobalIrm::new(GlobalIrmParams::default(), 1.0);
        let a = g.insert_node(NodeKind::Breadcrumb, Cell::new(0, 0), 0.0, 1.0, 0);
        let b = g.insert_node(NodeKind::Breadcrumb, Cell::new(2, 0), 0.0, 1.0, 0);
        let f = g.insert_node(NodeKind::Frontier, Cell::new(4, 0), 0.0, 0.5, 10);
        g.set_edge(a, b, 1.0, 0.0);
        g.set_edge(b, f, 1.0, 0.0);
        (g, [a, b, f])
    }

    #[test]
    fn path_graph_values() {
        let (g, [a, b, f]) = abf();
        let t = value_iteration(&g, &unit_weights(), &GcpParams::default());
        assert_eq!(t.value(f), Some(10.0));
        assert!((t.value(b).unwrap() - 9.0).abs() < 1e-9);
        assert!((t.value(a).unwrap() - 8.0).abs() < 1e-9);
        assert!(t.residual() < 1e-6);
        let act = qmdp_action(&t, &PoseBelief::point_mass(a)).unwrap();
        assert_eq!(act.target, b);
        assert_eq!(act.goal, f);
        let last = qmdp_action(&t, &PoseBelief::point_mass(b)).unwrap();
        assert_eq!(last.target, f);
    }

    #[test]
    fn no_frontier_signals_complete() {
        let mut g = GlobalIrm::new(GlobalIrmParams::default(), 1.0);
        g.insert_node(NodeKind::Breadcrumb, Cell::new(0, 0), 0.0, 1.0, 0);
        let t = value_iteration(&g, &unit_weights(), &GcpParams::default());
        assert!(t.exploration_complete());
        assert_eq!(t.value(0), Some(0.0));
    }

    #[test]
    fn belief_errors() {
        let (g, _) = abf();
        let t = value_iteration(&g, &unit_weights(), &GcpParams::default());
        assert_eq!(PoseBelief::new(vec![]), Err(GcpError::EmptyBelief));
        assert_eq!(qmdp_action(&t, &PoseBelief::point_mass(99)), Err(GcpError::UnknownNode(99)));
    }
}
