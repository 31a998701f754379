mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;

use plgrim_core::baselines::{hfe_plan, HfeScope};
use plgrim_core::belief::{CoverageBelief, RiskMap};
use plgrim_core::executive::{Mission, MissionConfig, MissionStatus, PlannerKind};
use plgrim_core::geometry::{Cell, Heading};
use plgrim_core::irm::frontier::detect_frontiers;
use plgrim_core::irm::global::{GlobalIrm, GlobalIrmParams, NodeKind};
use plgrim_core::irm::local::build_local_irm;
use plgrim_core::world::{load_world, RobotPose, LETHAL_THRESHOLD};

const SIZE: usize = 11;

#[derive(Clone, Debug)]
struct Scene {
    risk: Vec<Option<f64>>,
    covered: Vec<bool>,
}

fn scene() -> impl Strategy<Value = Scene> {
    let cell = prop_oneof![
        2 => Just(None),
        2 => Just(Some(1.0)),
        6 => (0.0f64..0.9).prop_map(Some),
    ];
    (
        proptest::collection::vec(cell, SIZE * SIZE),
        proptest::collection::vec(any::<bool>(), SIZE * SIZE),
    )
        .prop_map(|(mut risk, covered)| {
            risk[SIZE * SIZE / 2] = Some(0.0);
            Scene { risk, covered }
        })
}

fn build(s: &Scene) -> (RiskMap, CoverageBelief, RobotPose) {
    let h = (SIZE / 2) as i32;
    let pose = RobotPose::new(Cell::new(h, h), Heading::E);
    let rm = common::window(SIZE, pose, |c| s.risk[c.y as usize * SIZE + c.x as usize]);
    let mut cov = CoverageBelief::new();
    for (i, &k) in s.covered.iter().enumerate() {
        let c = Cell::new((i % SIZE) as i32, (i / SIZE) as i32);
        if k && rm.get(c).is_some() {
            cov.set(c, 1.0);
        }
    }
    (rm, cov, pose)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn local_irm_matches_lattice_definition(s in scene()) {
        let (rm, cov, pose) = build(&s);
        let irm = build_local_irm(&rm, &cov, pose, 0.5);
        let node_cells: BTreeSet<Cell> = irm.nodes().iter().map(|n| n.cell).collect();
        let expected: BTreeSet<Cell> = rm.window_cells().filter(|&c| rm.get(c).is_some_and(|r| r < LETHAL_THRESHOLD)).collect();
        prop_assert_eq!(&node_cells, &expected);

        let mut oracle = BTreeMap::new();
        for &c in &expected {
            for h in Heading::ALL {
                let d = c.step(h);
                if !expected.contains(&d) {
                    continue;
                }
                let (dx, dy) = h.delta();
                if h.is_diagonal() && !(expected.contains(&c.offset(dx, 0)) && expected.contains(&c.offset(0, dy))) {
                    continue;
                }
                let key = if c < d { (c, d) } else { (d, c) };
                let risk = rm.get(c).unwrap().max(rm.get(d).unwrap());
                oracle.insert(key, (h.length() * 0.5, risk));
            }
        }
        let got: BTreeMap<(Cell, Cell), (f64, f64)> = irm
            .edges()
            .iter()
            .map(|e| {
                let (a, b) = (irm.node(e.a).cell, irm.node(e.b).cell);
                (if a < b { (a, b) } else { (b, a) }, (e.distance, e.risk))
            })
            .collect();
        prop_assert_eq!(got.len(), irm.edges().len(), "no duplicate edges");
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn dijkstra_matches_bellman_ford(s in scene()) {
        let (rm, cov, pose) = build(&s);
        let irm = build_local_irm(&rm, &cov, pose, 1.0);
        let src = irm.node_at(pose.cell).unwrap();
        let cost = |e: &plgrim_core::irm::local::LocalEdge| e.distance + 3.0 * e.risk;
        let (dist, pred) = irm.dijkstra(src, cost);

        let mut bf = vec![f64::INFINITY; irm.len()];
        bf[src] = 0.0;
        for _ in 0..irm.len() {
            let mut changed = false;
            for e in irm.edges() {
                let c = cost(e);
                for (u, v) in [(e.a, e.b), (e.b, e.a)] {
                    if bf[u] + c < bf[v] - 1e-12 {
                        bf[v] = bf[u] + c;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for n in 0..irm.len() {
            prop_assert_eq!(dist[n].is_finite(), bf[n].is_finite());
            if bf[n].is_finite() {
                prop_assert!((dist[n] - bf[n]).abs() < 1e-9);
                let path = plgrim_core::irm::local::LocalIrm::path_to(&pred, src, n).unwrap();
                let mut cur = src;
                let mut total = 0.0;
                for h in path {
                    total += cost(irm.edge_from(cur, h).unwrap());
                    cur = irm.neighbor(cur, h).unwrap();
                }
                prop_assert_eq!(cur, n);
                prop_assert!((total - bf[n]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn frontier_clusters_match_definition(s in scene()) {
        let (rm, cov, _) = build(&s);
        let open = |c: Cell| !cov.is_covered(c) && !rm.is_known_lethal(c);
        let boundary: BTreeSet<Cell> = rm
            .window_cells()
            .filter(|&c| {
                rm.in_interior(c) && rm.get(c).is_some_and(|r| r < LETHAL_THRESHOLD) && cov.is_covered(c)
                    && c.neighbors4().iter().any(|&n| open(n))
            })
            .collect();
        // Clusters as 8-connected components of the boundary.
        let mut clusters: Vec<BTreeSet<Cell>> = Vec::new();
        let mut left = boundary.clone();
        while let Some(&seed) = left.iter().next() {
            let mut comp = BTreeSet::new();
            let mut stack = vec![seed];
            while let Some(c) = stack.pop() {
                if !left.remove(&c) {
                    continue;
                }
                comp.insert(c);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        stack.push(c.offset(dx, dy));
                    }
                }
            }
            clusters.push(comp);
        }
        let got = detect_frontiers(&cov, &rm);
        let got_sets: BTreeSet<Vec<Cell>> = got.iter().map(|f| f.members.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()).collect();
        let want_sets: BTreeSet<Vec<Cell>> = clusters.iter().map(|c| c.iter().copied().collect()).collect();
        prop_assert_eq!(got_sets, want_sets);

        for f in &got {
            prop_assert!(f.members.contains(&f.cell));
            let bordered: BTreeSet<Cell> = f.members.iter().flat_map(|c| c.neighbors4()).filter(|&c| open(c)).collect();
            let mut region = bordered.clone();
            let mut queue: VecDeque<Cell> = bordered.iter().copied().collect();
            while let Some(c) = queue.pop_front() {
                if !rm.is_known_free(c) {
                    continue;
                }
                for n in c.neighbors4() {
                    if rm.is_known_free(n) && !cov.is_covered(n) && region.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
            prop_assert_eq!(f.area, region.len());
        }
    }
}

#[test]
fn hfe_local_choice_maximizes_area_per_cost() {
    let h = (SIZE / 2) as i32;
    let pose = RobotPose::new(Cell::new(h, h), Heading::E);
    let rm = common::window(SIZE, pose, |c| Some(if c.x == 3 && c.y > 1 { 1.0 } else { 0.0 }));
    let (local, robot) = common::local(&rm, &CoverageBelief::new());
    let (dist, _) = local.dijkstra(robot, |e| e.distance);
    let mut g = GlobalIrm::new(GlobalIrmParams::default(), 1.0);
    let b = g.insert_node(NodeKind::Breadcrumb, pose.cell, 0.0, 1.0, 0);
    let spots = [(Cell::new(1, 9), 20), (Cell::new(9, 9), 6), (Cell::new(9, 1), 7), (Cell::new(6, 5), 1)];
    let mut best = (f64::NEG_INFINITY, None);
    for (c, area) in spots {
        let id = g.insert_node(NodeKind::Frontier, c, 0.0, 0.5, area);
        g.set_edge(b, id, 1.0, 0.0);
        let d = dist[local.node_at(c).unwrap()];
        let score = area as f64 / d.max(1.0);
        if score > best.0 {
            best = (score, Some(id));
        }
    }
    let choice = hfe_plan(&g, &local, robot).unwrap();
    assert_eq!(choice.scope, HfeScope::Local);
    assert_eq!(Some(choice.frontier), best.1);
    assert!((choice.score - best.0).abs() < 1e-12);
}

fn random_world() -> impl Strategy<Value = String> {
    (6usize..13, 6usize..13, 0u64..1000).prop_map(|(w, h, salt)| {
        let mut text = format!("{w} {h} 1.0\n");
        for y in 0..h {
            for x in 0..w {
                let edge = x == 0 || y == 0 || x == w - 1 || y == h - 1;
                let k = (x as u64 * 31 + y as u64 * 17 + salt * 7) % 13;
                let ch = if x == 1 && y == 1 {
                    'S'
                } else if edge || k == 0 {
                    '#'
                } else if k == 1 {
                    '3'
                } else if k == 2 && salt % 3 == 0 {
                    '9'
                } else {
                    '.'
                };
                text.push(ch);
            }
            text.push('\n');
        }
        text
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mission_invariants_hold(text in random_world(), planner in 0usize..3, seed in 0u64..50) {
        let world = load_world(&text).unwrap();
        let reachable: BTreeSet<Cell> = world.reachable_cells().into_iter().collect();
        let planner = [PlannerKind::Plgrim, PlannerKind::Nbv, PlannerKind::Hfe][planner];
        let config = MissionConfig { planner, step_budget: Some(1500), ..Default::default() };
        let spacing = config.irm.breadcrumb_spacing;
        let mut m = Mission::new(world, config, seed).unwrap();
        let mut last = 0.0;
        while let Some(rep) = m.run_episode().unwrap() {
            m.global_irm().validate().map_err(TestCaseError::fail)?;
            prop_assert!(rep.coverage_fraction >= last - 1e-12);
            last = rep.coverage_fraction;
            let cell = m.pose().cell;
            prop_assert!(m.world().is_traversable(cell) && m.world().risk(cell) < LETHAL_THRESHOLD);
            prop_assert!(reachable.contains(&cell));
        }
        for (i, r) in m.rows().iter().enumerate() {
            prop_assert_eq!(r.step, i);
        }
        let crumbs = m.global_irm().breadcrumb_count() as f64;
        let path = m.pose_graph().path_length(m.world().resolution());
        prop_assert!(crumbs <= path / spacing + 1.0 + 1e-9);
        if planner == PlannerKind::Plgrim {
            prop_assert_eq!(m.status(), Some(&MissionStatus::Complete));
            prop_assert!((last - 1.0).abs() < 1e-12);
            prop_assert_eq!(m.global_irm().frontier_count(), 0);
        }
    }
}
