#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use plgrim_core::belief::{CoverageBelief, RiskMap};
use plgrim_core::geometry::{Cell, Heading};
use plgrim_core::irm::local::{build_local_irm, LocalIrm, LocalNodeId};
use plgrim_core::world::{load_world_file, GroundTruthWorld, RobotPose};

pub const FIXTURES: [&str; 5] = ["room", "corridor", "tjunction", "maze30", "maze50"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.txt"))
}

pub fn fixture(name: &str) -> GroundTruthWorld {
    load_world_file(&fixture_path(name)).unwrap()
}

/// Reachable set straight from the file text: 4-connected flood fill over
/// characters other than `#` and `9`.
pub fn flood_fill_text(text: &str) -> BTreeSet<(i32, i32)> {
    let rows: Vec<Vec<char>> = text.lines().skip(1).filter(|l| !l.is_empty()).map(|l| l.chars().collect()).collect();
    let mut start = None;
    for (y, r) in rows.iter().enumerate() {
        for (x, &c) in r.iter().enumerate() {
            if c == 'S' {
                start = Some((x as i32, y as i32));
            }
        }
    }
    let open = |x: i32, y: i32| {
        y >= 0
            && (y as usize) < rows.len()
            && x >= 0
            && (x as usize) < rows[y as usize].len()
            && !matches!(rows[y as usize][x as usize], '#' | '9')
    };
    let mut seen = BTreeSet::new();
    let mut stack = vec![start.expect("start marker")];
    while let Some((x, y)) = stack.pop() {
        if !seen.insert((x, y)) {
            continue;
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if open(x + dx, y + dy) && !seen.contains(&(x + dx, y + dy)) {
                stack.push((x + dx, y + dy));
            }
        }
    }
    seen
}

/// Risk window centred at `pose` where `risk(cell)` gives known cells.
pub fn window(size: usize, pose: RobotPose, risk: impl Fn(Cell) -> Option<f64>) -> RiskMap {
    let mut rm = RiskMap::new(size, pose);
    let cells: Vec<Cell> = rm.window_cells().collect();
    for c in cells {
        if let Some(r) = risk(c) {
            rm.set(c, r);
        }
    }
    rm
}

pub fn local(rm: &RiskMap, coverage: &CoverageBelief) -> (LocalIrm, LocalNodeId) {
    let pose = rm.center();
    let irm = build_local_irm(rm, coverage, pose, 1.0);
    let n = irm.node_at(pose.cell).expect("robot cell is a node");
    (irm, n)
}

/// Straight corridor scenario along `heading` from the window centre.
pub struct Corridor {
    pub pose: RobotPose,
    pub cells: Vec<Cell>,
    pub riskmap: RiskMap,
}

/// A width-`half_width*2+1` corridor of `len` cells ahead of the robot with the
/// given low risk values, walls on both sides and unknown space elsewhere.
pub fn corridor(size: usize, heading: Heading, len: usize, half_width: i32, risk: impl Fn(usize) -> f64) -> Corridor {
    let h = (size / 2) as i32;
    let pose = RobotPose::new(Cell::new(h, h), heading);
    let (dx, dy) = heading.delta();
    let (px, py) = (-dy, dx);
    let mut cells = Vec::new();
    let mut rm = RiskMap::new(size, pose);
    for i in 0..=len as i32 {
        let base = pose.cell.offset(dx * i, dy * i);
        for j in -(half_width + 1)..=(half_width + 1) {
            let c = base.offset(px * j, py * j);
            if !rm.contains(c) {
                continue;
            }
            if j.abs() > half_width {
                rm.set(c, 1.0);
            } else {
                rm.set(c, risk(i as usize));
                if j == 0 {
                    cells.push(c);
                }
            }
        }
    }
    Corridor { pose, cells, riskmap: rm }
}

pub mod scenarios {
    use std::collections::BTreeMap;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use plgrim_core::belief::CoverageBelief;
    use plgrim_core::executive::reconcile;
    use plgrim_core::gcp::{edge_cost, terminal_reward};
    use plgrim_core::geometry::{Cell, Heading};
    use plgrim_core::irm::global::{EdgeId, GlobalIrm, GlobalIrmParams, NodeId, NodeKind};
    use plgrim_core::irm::local::build_local_irm;
    use plgrim_core::lcp::macros::{enumerate_macro_actions, MacroAction};
    use plgrim_core::lcp::sim::{overlay_belief, LocalModel, LocalSimState};
    use plgrim_core::reward::RewardWeights;
    use plgrim_core::world::{RobotPose, SensorSpec};

    use super::{corridor, window};

    /// Random connected Global IRM with up to `max_nodes` nodes. Returns the
    /// graph and a breadcrumb source that can reach a frontier.
    pub fn random_global(seed: u64, max_nodes: usize) -> (GlobalIrm, NodeId) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(6..=max_nodes);
        let mut g = GlobalIrm::new(GlobalIrmParams::default(), 1.0);
        let mut ids = Vec::new();
        for i in 0..n {
            let frontier = i > 0 && rng.random_bool(0.25);
            let cell = Cell::new(rng.random_range(0..40), rng.random_range(0..40));
            let id = if frontier {
                g.insert_node(NodeKind::Frontier, cell, rng.random_range(0.0..0.3), 0.5, rng.random_range(1..30))
            } else {
                g.insert_node(NodeKind::Breadcrumb, cell, rng.random_range(0.0..0.3), 1.0, 0)
            };
            ids.push(id);
        }
        let crumbs: Vec<NodeId> = ids.iter().copied().filter(|&i| g.node(i).unwrap().kind == NodeKind::Breadcrumb).collect();
        let link = |g: &mut GlobalIrm, rng: &mut ChaCha8Rng, a: NodeId, b: NodeId| {
            g.set_edge(a, b, rng.random_range(0.5..7.9), rng.random_range(0.0..0.6));
        };
        // Spanning tree over breadcrumbs, then frontiers hang off breadcrumbs.
        for i in 1..crumbs.len() {
            let j = rng.random_range(0..i);
            link(&mut g, &mut rng, crumbs[i], crumbs[j]);
        }
        let frontiers: Vec<NodeId> = ids.iter().copied().filter(|&i| g.node(i).unwrap().kind == NodeKind::Frontier).collect();
        for f in frontiers {
            for _ in 0..rng.random_range(1..=2) {
                let b = crumbs[rng.random_range(0..crumbs.len())];
                link(&mut g, &mut rng, f, b);
            }
        }
        for _ in 0..n / 2 {
            let (a, b) = (crumbs[rng.random_range(0..crumbs.len())], crumbs[rng.random_range(0..crumbs.len())]);
            if a != b {
                link(&mut g, &mut rng, a, b);
            }
        }
        if g.frontier_count() == 0 {
            let f = g.insert_node(NodeKind::Frontier, Cell::new(50, 50), 0.0, 0.5, 12);
            link(&mut g, &mut rng, f, crumbs[crumbs.len() - 1]);
        }
        (g, crumbs[0])
    }

    /// Exhaustive best action at `source` by per-frontier Dijkstra with
    /// undiscounted step costs: returns the optimal value and edge.
    pub fn brute_force_qmdp(g: &GlobalIrm, source: NodeId, w: &RewardWeights) -> (f64, EdgeId) {
        let step = |e: &plgrim_core::irm::global::GlobalEdge| w.k_cost * edge_cost(e, w);
        let best_from = |start: NodeId| -> f64 {
            if g.node(start).unwrap().kind == NodeKind::Frontier {
                return terminal_reward(g.node(start).unwrap().area, w);
            }
            // Plain O(n^2) Dijkstra; frontiers are absorbing.
            let mut dist: BTreeMap<NodeId, f64> = g.nodes().map(|n| (n.id, f64::INFINITY)).collect();
            let mut done: BTreeMap<NodeId, bool> = g.nodes().map(|n| (n.id, false)).collect();
            dist.insert(start, 0.0);
            loop {
                let next = dist
                    .iter()
                    .filter(|(id, d)| !done[id] && d.is_finite())
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(&id, &d)| (id, d));
                let Some((u, du)) = next else { break };
                done.insert(u, true);
                if g.node(u).unwrap().kind == NodeKind::Frontier {
                    continue;
                }
                for e in g.incident(u) {
                    let v = e.other(u);
                    if du + step(e) < dist[&v] {
                        dist.insert(v, du + step(e));
                    }
                }
            }
            g.frontiers()
                .filter(|f| dist[&f.id].is_finite())
                .map(|f| terminal_reward(f.area, w) - dist[&f.id])
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut best = (f64::NEG_INFINITY, NodeId::MAX, EdgeId::MAX);
        for e in g.incident(source) {
            let t = e.other(source);
            let q = -step(e) + best_from(t);
            if q > best.0 + 1e-12 || ((q - best.0).abs() <= 1e-12 && (t, e.id) < (best.1, best.2)) {
                best = (q, t, e.id);
            }
        }
        (best.0, best.2)
    }

    pub struct ToyInstance {
        pub model: LocalModel,
        pub root: LocalSimState,
    }

    /// Small frozen window with random risk and coverage for depth-2 search.
    pub fn toy_instance(seed: u64) -> ToyInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = 9;
        let pose = RobotPose::new(Cell::new(4, 4), Heading::E);
        let walls: Vec<bool> = (0..size * size).map(|_| rng.random_bool(0.15)).collect();
        let risks: Vec<f64> = (0..size * size).map(|_| rng.random_range(0.0..0.4)).collect();
        let rm = window(size, pose, |c| {
            let i = c.y as usize * size + c.x as usize;
            Some(if walls[i] && c != pose.cell { 1.0 } else { risks[i] })
        });
        let mut cov = CoverageBelief::new();
        for c in rm.window_cells() {
            if rng.random_bool(0.5) {
                cov.set(c, rng.random_range(0.0..1.0));
            }
        }
        let irm = build_local_irm(&rm, &cov, pose, 1.0);
        let root_node = irm.node_at(pose.cell).unwrap();
        let sensor = SensorSpec { coverage_radius: 1.5, ..SensorSpec::default() };
        let model = LocalModel::new(irm, &sensor, RewardWeights::default());
        let root = model.root_state(root_node, pose.heading);
        ToyInstance { model, root }
    }

    /// Exhaustive depth-2 macro values at the root, in enumeration order.
    pub fn exhaustive_depth2(model: &LocalModel, root: &LocalSimState, macro_length: usize) -> Vec<(MacroAction, f64)> {
        let irm = model.irm();
        let gamma = model.weights().gamma;
        enumerate_macro_actions(irm, root.node, root.heading, macro_length)
            .into_iter()
            .map(|m1| {
                if m1.is_hold() {
                    return (m1, 0.0);
                }
                let (s1, o1) = model.simulate_step(root, &m1).unwrap();
                let best2 = enumerate_macro_actions(irm, s1.node, s1.heading, macro_length)
                    .iter()
                    .map(|m2| if m2.is_hold() { 0.0 } else { model.simulate_step(&s1, m2).unwrap().1.reward })
                    .fold(f64::NEG_INFINITY, f64::max);
                (m1, o1.reward + gamma.powi(o1.steps as i32) * best2)
            })
            .collect()
    }

    pub struct ReconcileCase {
        pub model: LocalModel,
        pub root: LocalSimState,
        pub tail: Vec<Heading>,
        pub predicted: Vec<f64>,
        /// Cells the tail visits, one per step.
        pub visits: Vec<Cell>,
        pub rebuild: Box<dyn Fn(Option<Cell>) -> (LocalModel, LocalSimState)>,
    }

    /// Straight previous policy of `horizon` steps down a random corridor, of
    /// which `executed` have run. `rebuild(Some(c))` rebuilds the current model
    /// with `c` believed lethal.
    pub fn corridor_case(seed: u64, horizon: usize, executed: usize) -> ReconcileCase {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let heading = [Heading::E, Heading::N, Heading::W, Heading::S][rng.random_range(0..4)];
        let half_width = rng.random_range(0..=1);
        // The corridor runs past the policy's end so every step still sees new cells.
        let len = horizon + 3;
        let risks: Vec<f64> = (0..=len).map(|_| rng.random_range(0.0..0.1)).collect();
        let size = 2 * len + 3;
        let cor = corridor(size, heading, len, half_width, |i| risks[i]);
        let weights = RewardWeights::default();
        let sensor = SensorSpec::default();
        let cov0 = CoverageBelief::new();
        let model0 = LocalModel::new(build_local_irm(&cor.riskmap, &cov0, cor.pose, 1.0), &sensor, weights);
        let start = model0.irm().node_at(cor.pose.cell).unwrap();
        let policy = vec![heading; horizon];
        let mut after = model0.root_state(start, heading);
        for &h in &policy[..executed] {
            model0.primitive_step(&mut after, h).unwrap();
        }
        let mut tail_pred = Vec::new();
        let mut s = after.clone();
        for &h in &policy[executed..] {
            tail_pred.push(model0.primitive_step(&mut s, h).unwrap().reward);
        }
        let belief = overlay_belief(&model0, &after, &cov0);
        let pose1 = RobotPose::new(cor.cells[executed], heading);
        let visits = cor.cells[executed + 1..=horizon].to_vec();
        let riskmap = cor.riskmap.clone();
        let rebuild = Box::new(move |lethal: Option<Cell>| {
            let mut rm = riskmap.clone();
            if let Some(c) = lethal {
                rm.set(c, 1.0);
            }
            let irm = build_local_irm(&rm, &belief, pose1, 1.0);
            let n = irm.node_at(pose1.cell).unwrap();
            let model = LocalModel::new(irm, &sensor, weights);
            let root = model.root_state(n, heading);
            (model, root)
        });
        let (model, root) = rebuild(None);
        ReconcileCase { model, root, tail: policy[executed..].to_vec(), predicted: tail_pred, visits, rebuild }
    }

    /// Independent `J(τ)` recomputation: argmax with ties to the larger τ.
    pub fn exhaustive_tau(model: &LocalModel, root: &LocalSimState, tail: &[Heading]) -> (usize, Vec<f64>) {
        let gamma = model.weights().gamma;
        let mut js = Vec::new();
        for tau in 0..=tail.len() {
            let mut s = root.clone();
            let mut j = 0.0;
            for (k, &h) in tail[..tau].iter().enumerate() {
                match model.primitive_step(&mut s, h) {
                    Some(t) => j += gamma.powi(k as i32) * t.reward,
                    None => {
                        j = f64::NEG_INFINITY;
                        break;
                    }
                }
            }
            js.push(j);
        }
        let best = js.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tau = js.iter().rposition(|&j| j == best).unwrap();
        (tau, js)
    }

    pub fn check_reconcile(case: &ReconcileCase) -> (usize, usize) {
        let rec = reconcile(&case.model, &case.root, &case.tail, &case.predicted);
        let (tau, _) = exhaustive_tau(&case.model, &case.root, &case.tail);
        (rec.tau, tau)
    }

    /// Two branches from a junction reach the same uncovered pocket: east in
    /// 6 steps, or north-east-south in 10. Returns the model, root and the two
    /// first macros (short, long).
    pub fn two_branch() -> (LocalModel, LocalSimState, MacroAction, MacroAction) {
        let size = 21;
        let pose = RobotPose::new(Cell::new(10, 10), Heading::E);
        let free = |c: Cell| {
            let short = c.y == 10 && (10..=16).contains(&c.x);
            let long = (c.x == 10 || c.x == 16) && (8..=10).contains(&c.y) || c.y == 8 && (10..=16).contains(&c.x);
            let pocket = c.y == 10 && (17..=18).contains(&c.x);
            short || long || pocket
        };
        let rm = window(size, pose, |c| if free(c) { Some(0.0) } else if (c.x - 13).abs() <= 7 && (c.y - 9).abs() <= 3 { Some(1.0) } else { None });
        let mut cov = CoverageBelief::new();
        for c in rm.window_cells() {
            if free(c) && !(c.y == 10 && c.x >= 17) {
                cov.set(c, 1.0);
            }
        }
        let irm = build_local_irm(&rm, &cov, pose, 1.0);
        let n = irm.node_at(pose.cell).unwrap();
        let model = LocalModel::new(irm, &SensorSpec::default(), RewardWeights::default());
        let root = model.root_state(n, pose.heading);
        (model, root, MacroAction { heading: Heading::E, len: 6 }, MacroAction { heading: Heading::N, len: 2 })
    }
}
