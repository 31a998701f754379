mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plgrim_core::geometry::{disc, line_of_sight, supercover, Cell, Heading};
use plgrim_core::world::{load_world, sense_coverage, sense_risk, step_robot, MotionNoise, PrimitiveMove, SensorSpec};

use common::{fixture, fixture_path, flood_fill_text};

#[test]
fn reachable_sets_match_flood_fill() {
    let expected = [
        ("room", 91),
        ("corridor", 30),
        ("corridor10", 10),
        ("tjunction", 74),
        ("maze30", 508),
        ("maze50", 1656),
        ("tiny_room", 9),
    ];
    for (name, count) in expected {
        let text = std::fs::read_to_string(fixture_path(name)).unwrap();
        let oracle = flood_fill_text(&text);
        let got: BTreeSet<(i32, i32)> = fixture(name).reachable_cells().iter().map(|c| (c.x, c.y)).collect();
        assert_eq!(got, oracle, "{name}");
        assert_eq!(got.len(), count, "{name}");
    }
}

/// Does the segment between two cell centres touch the closed unit square of `c`?
fn segment_touches(a: Cell, b: Cell, c: Cell) -> bool {
    let (x0, y0) = (f64::from(a.x), f64::from(a.y));
    let (dx, dy) = (f64::from(b.x - a.x), f64::from(b.y - a.y));
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let eps = 1e-9;
    for (p, q) in [
        (-dx, x0 - (f64::from(c.x) - 0.5)),
        (dx, (f64::from(c.x) + 0.5) - x0),
        (-dy, y0 - (f64::from(c.y) - 0.5)),
        (dy, (f64::from(c.y) + 0.5) - y0),
    ] {
        if p.abs() < 1e-12 {
            if q < -eps {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    t0 <= t1 + eps
}

fn cell() -> impl Strategy<Value = Cell> {
    (-12i32..12, -12i32..12).prop_map(|(x, y)| Cell::new(x, y))
}

proptest! {
    #[test]
    fn supercover_matches_brute_force(a in cell(), b in cell()) {
        let line = supercover(a, b);
        prop_assert_eq!(line.first(), Some(&a));
        prop_assert_eq!(line.last(), Some(&b));
        let got: BTreeSet<Cell> = line.iter().copied().collect();
        prop_assert_eq!(got.len(), line.len(), "no repeated cells");
        let mut oracle = BTreeSet::new();
        for x in a.x.min(b.x)..=a.x.max(b.x) {
            for y in a.y.min(b.y)..=a.y.max(b.y) {
                let c = Cell::new(x, y);
                if segment_touches(a, b, c) {
                    oracle.insert(c);
                }
            }
        }
        prop_assert_eq!(got, oracle);
        for w in line.windows(2) {
            prop_assert!(w[0].chebyshev(w[1]) == 1);
        }
    }

    #[test]
    fn line_of_sight_is_symmetric(a in cell(), b in cell(), walls in proptest::collection::btree_set(cell(), 0..40)) {
        let blocked = |c: Cell| walls.contains(&c);
        prop_assert_eq!(line_of_sight(a, b, blocked), line_of_sight(b, a, blocked));
        let expect = supercover(a, b).iter().filter(|&&c| c != a && c != b).all(|c| !walls.contains(c));
        prop_assert_eq!(line_of_sight(a, b, blocked), expect);
    }

    #[test]
    fn disc_matches_closest_point_test(c in cell(), r in 0.0f64..6.0) {
        let got: BTreeSet<Cell> = disc(c, r).collect();
        let reach = r.ceil() as i32 + 1;
        let mut oracle = BTreeSet::new();
        for x in c.x - reach..=c.x + reach {
            for y in c.y - reach..=c.y + reach {
                let px = f64::from(c.x).clamp(f64::from(x) - 0.5, f64::from(x) + 0.5);
                let py = f64::from(c.y).clamp(f64::from(y) - 0.5, f64::from(y) + 0.5);
                let d = ((px - f64::from(c.x)).powi(2) + (py - f64::from(c.y)).powi(2)).sqrt();
                if d <= r + 1e-9 {
                    oracle.insert(Cell::new(x, y));
                }
            }
        }
        prop_assert_eq!(got, oracle);
    }
}

fn random_world() -> impl Strategy<Value = String> {
    (3usize..10, 3usize..10).prop_flat_map(|(w, h)| {
        proptest::collection::vec(prop_oneof![6 => Just('.'), 2 => Just('#'), 1 => Just('4'), 1 => Just('9')], w * h)
            .prop_map(move |mut cells| {
                cells[0] = 'S';
                let mut text = format!("{w} {h} 1.0\n");
                for row in cells.chunks(w) {
                    text.extend(row);
                    text.push('\n');
                }
                text
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn robot_never_enters_walls(text in random_world(), moves in proptest::collection::vec(0usize..9, 1..60), seed in 0u64..100) {
        let world = load_world(&text).unwrap();
        let noise = MotionNoise { slip_probability: 0.2, enabled: true };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pose = world.start_pose();
        for m in moves {
            let mv = if m == 8 { PrimitiveMove::Wait } else { PrimitiveMove::Go(Heading::from_index(m)) };
            let out = step_robot(&world, pose, mv, &noise, &mut rng);
            prop_assert!(world.is_traversable(out.pose.cell));
            if out.collision || out.slipped {
                prop_assert_eq!(out.pose.cell, pose.cell);
            } else {
                prop_assert!(out.pose.cell.chebyshev(pose.cell) <= 1);
            }
            pose = out.pose;
        }
    }

    #[test]
    fn sensing_stays_within_range(text in random_world(), los in any::<bool>()) {
        let mut world = load_world(&text).unwrap();
        let spec = SensorSpec { risk_radius: 2.5, coverage_radius: 1.5, line_of_sight: los };
        let pose = world.start_pose();
        let patch = sense_risk(&world, pose, &spec);
        let risk_disc: BTreeSet<Cell> = disc(pose.cell, 2.5).collect();
        for (&c, &r) in &patch {
            prop_assert!(risk_disc.contains(&c));
            prop_assert_eq!(r, world.risk(c));
        }
        let fresh = sense_coverage(&mut world, pose, &spec);
        let cov_disc: BTreeSet<Cell> = disc(pose.cell, 1.5).collect();
        prop_assert!(fresh.iter().all(|c| cov_disc.contains(c)));
        let again = sense_coverage(&mut world, pose, &spec);
        prop_assert!(again.is_empty());
        prop_assert_eq!(world.covered_count(), fresh.len());
    }
}
