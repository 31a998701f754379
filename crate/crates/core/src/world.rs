//! Ground-truth grid world, robot kinematics and the simulated sensors.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{disc, line_of_sight, Cell, Heading};

/// Risk at or above this value is treated as untraversable by every planner.
pub const LETHAL_THRESHOLD: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("missing or malformed header line (expected `width height resolution_m`): {0}")]
    MalformedHeader(String),
    #[error("header declares {expected} rows but the grid has {found}")]
    RowCount { expected: usize, found: usize },
    #[error("row {row} has {found} columns, expected {expected}")]
    NonRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unexpected character {ch:?} at row {row}, column {col}")]
    InvalidChar { row: usize, col: usize, ch: char },
    #[error("no start cell `S` in grid")]
    NoStart,
    #[error("more than one start cell `S` in grid")]
    MultipleStarts,
    #[error("cannot read environment file: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RobotPose {
    pub cell: Cell,
    pub heading: Heading,
}

impl RobotPose {
    pub fn new(cell: Cell, heading: Heading) -> Self {
        Self { cell, heading }
    }
}

impl fmt::Display for RobotPose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} facing {}", self.cell, self.heading)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorSpec {
    /// Range-sensor horizon feeding the risk map, meters.
    pub risk_radius: f64,
    /// Coverage-sensor footprint radius, meters.
    pub coverage_radius: f64,
    pub line_of_sight: bool,
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.risk_radius > 0.0 && self.coverage_radius > 0.0) {
            return Err("sensor radii must be positive".into());
        }
        if self.coverage_radius > self.risk_radius {
            return Err("coverage_radius must not exceed risk_radius".into());
        }
        Ok(())
    }
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            risk_radius: 5.0,
            coverage_radius: 2.0,
            line_of_sight: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct MotionNoise {
    pub slip_probability: f64,
    pub enabled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimitiveMove {
    Go(Heading),
    Wait,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub pose: RobotPose,
    pub collision: bool,
    pub slipped: bool,
}

/// Cell → true risk, for every cell a single risk scan returned.
pub type RiskPatch = BTreeMap<Cell, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthWorld {
    width: usize,
    height: usize,
    resolution: f64,
    traversable: Vec<bool>,
    risk: Vec<f64>,
    covered: Vec<bool>,
    covered_count: usize,
    start_pose: RobotPose,
}

impl GroundTruthWorld {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Meters per cell.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn start_pose(&self) -> RobotPose {
        self.start_pose
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn idx(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn is_traversable(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.traversable[self.idx(c)]
    }

    /// True risk; cells outside the grid read as lethal.
    pub fn risk(&self, c: Cell) -> f64 {
        if self.in_bounds(c) {
            self.risk[self.idx(c)]
        } else {
            1.0
        }
    }

    pub fn is_covered(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.covered[self.idx(c)]
    }

    pub fn covered_count(&self) -> usize {
        self.covered_count
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32).flat_map(move |y| (0..self.width as i32).map(move |x| Cell::new(x, y)))
    }

    /// Center of a cell in meters.
    pub fn position_m(&self, c: Cell) -> (f64, f64) {
        (
            (f64::from(c.x) + 0.5) * self.resolution,
            (f64::from(c.y) + 0.5) * self.resolution,
        )
    }

    /// Cells reachable from the start through 4-connected, sub-lethal traversable cells.
    pub fn reachable_cells(&self) -> Vec<Cell> {
        let mut seen = vec![false; self.width * self.height];
        let start = self.start_pose.cell;
        let mut queue = VecDeque::from([start]);
        seen[self.idx(start)] = true;
        let mut out = Vec::new();
        while let Some(c) = queue.pop_front() {
            out.push(c);
            for n in c.neighbors4() {
                if self.is_traversable(n) && self.risk(n) < LETHAL_THRESHOLD && !seen[self.idx(n)] {
                    seen[self.idx(n)] = true;
                    queue.push_back(n);
                }
            }
        }
        out.sort_by_key(|c| (c.y, c.x));
        out
    }

    /// Resets the coverage ledger; only used between independent runs.
    pub fn reset_coverage(&mut self) {
        self.covered.iter_mut().for_each(|c| *c = false);
        self.covered_count = 0;
    }

    fn visible(&self, from: Cell, to: Cell, los: bool) -> bool {
        !los || line_of_sight(from, to, |c| !self.is_traversable(c))
    }
}

/// Parses the ASCII environment format.
pub fn load_world(text: &str) -> Result<GroundTruthWorld, ParseError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| ParseError::MalformedHeader(String::new()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || ParseError::MalformedHeader(header.to_string());
    if fields.len() != 3 {
        return Err(bad_header());
    }
    let width: usize = fields[0].parse().map_err(|_| bad_header())?;
    let height: usize = fields[1].parse().map_err(|_| bad_header())?;
    let resolution: f64 = fields[2].parse().map_err(|_| bad_header())?;
    if width == 0 || height == 0 || !(resolution > 0.0 && resolution.is_finite()) {
        return Err(bad_header());
    }

    let rows: Vec<&str> = lines.map(|l| l.trim_end_matches('\r')).collect();
    let rows: Vec<&str> = match rows.iter().rposition(|r| !r.is_empty()) {
        Some(last) => rows[..=last].to_vec(),
        None => Vec::new(),
    };
    if rows.len() != height {
        return Err(ParseError::RowCount {
            expected: height,
            found: rows.len(),
        });
    }

    let mut traversable = Vec::with_capacity(width * height);
    let mut risk = Vec::with_capacity(width * height);
    let mut start = None;
    for (row, line) in rows.iter().enumerate() {
        let n = line.chars().count();
        if n != width {
            return Err(ParseError::NonRectangular {
                row,
                expected: width,
                found: n,
            });
        }
        for (col, ch) in line.chars().enumerate() {
            let (t, r) = match ch {
                '#' => (false, 1.0),
                '.' => (true, 0.0),
                'S' => {
                    if start.is_some() {
                        return Err(ParseError::MultipleStarts);
                    }
                    start = Some(Cell::new(col as i32, row as i32));
                    (true, 0.0)
                }
                '1'..='9' => (true, f64::from(ch as u8 - b'0') / 9.0),
                _ => return Err(ParseError::InvalidChar { row, col, ch }),
            };
            traversable.push(t);
            risk.push(r);
        }
    }
    let start = start.ok_or(ParseError::NoStart)?;
    Ok(GroundTruthWorld {
        width,
        height,
        resolution,
        traversable,
        risk,
        covered: vec![false; width * height],
        covered_count: 0,
        start_pose: RobotPose::new(start, Heading::E),
    })
}

pub fn load_world_file(path: &Path) -> Result<GroundTruthWorld, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io(format!("{}: {e}", path.display())))?;
    load_world(&text)
}

/// True when a primitive move between two adjacent cells is kinematically allowed
/// given a traversability predicate. Diagonal moves may not cut a blocked corner.
pub fn move_allowed(from: Cell, heading: Heading, mut free: impl FnMut(Cell) -> bool) -> bool {
    let to = from.step(heading);
    if !free(to) {
        return false;
    }
    if heading.is_diagonal() {
        let (dx, dy) = heading.delta();
        free(from.offset(dx, 0)) && free(from.offset(0, dy))
    } else {
        true
    }
}

/// Applies one primitive move. Blocked moves leave the pose unchanged and report a collision.
pub fn step_robot<R: Rng + ?Sized>(
    world: &GroundTruthWorld,
    pose: RobotPose,
    mv: PrimitiveMove,
    noise: &MotionNoise,
    rng: &mut R,
) -> StepOutcome {
    let heading = match mv {
        PrimitiveMove::Wait => {
            return StepOutcome {
                pose,
                collision: false,
                slipped: false,
            }
        }
        PrimitiveMove::Go(h) => h,
    };
    if noise.enabled && noise.slip_probability > 0.0 && rng.random::<f64>() < noise.slip_probability {
        return StepOutcome {
            pose,
            collision: false,
            slipped: true,
        };
    }
    if !move_allowed(pose.cell, heading, |c| world.is_traversable(c)) {
        return StepOutcome {
            pose,
            collision: true,
            slipped: false,
        };
    }
    StepOutcome {
        pose: RobotPose::new(pose.cell.step(heading), heading),
        collision: false,
        slipped: false,
    }
}

/// True risk of every cell within range (and in view, when occlusion is on).
pub fn sense_risk(world: &GroundTruthWorld, pose: RobotPose, spec: &SensorSpec) -> RiskPatch {
    let radius = spec.risk_radius / world.resolution;
    disc(pose.cell, radius)
        .filter(|&c| world.in_bounds(c) && world.visible(pose.cell, c, spec.line_of_sight))
        .map(|c| (c, world.risk(c)))
        .collect()
}

/// Marks the coverage footprint in the ground-truth ledger and returns the cells
/// that were not covered before this call.
pub fn sense_coverage(world: &mut GroundTruthWorld, pose: RobotPose, spec: &SensorSpec) -> Vec<Cell> {
    let radius = spec.coverage_radius / world.resolution;
    let footprint: Vec<Cell> = disc(pose.cell, radius)
        .filter(|&c| world.in_bounds(c) && world.visible(pose.cell, c, spec.line_of_sight))
        .collect();
    let mut fresh = Vec::new();
    for c in footprint {
        let i = world.idx(c);
        if !world.covered[i] {
            world.covered[i] = true;
            world.covered_count += 1;
            fresh.push(c);
        }
    }
    fresh
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open3() -> GroundTruthWorld {
        load_world("3 3 1.0\n...\n.S.\n...\n").unwrap()
    }

    #[test]
    fn parses_empty_room() {
        let w = open3();
        assert_eq!(w.cells().filter(|&c| w.is_traversable(c)).count(), 9);
        assert!(w.cells().all(|c| w.risk(c) == 0.0));
        assert_eq!(w.start_pose().cell, Cell::new(1, 1));
    }

    #[test]
    fn border_walls_are_lethal() {
        let w = load_world("4 3 0.5\n####\n#S.#\n####\n").unwrap();
        for c in w.cells() {
            if c.y == 0 || c.y == 2 || c.x == 0 || c.x == 3 {
                assert!(!w.is_traversable(c));
                assert_eq!(w.risk(c), 1.0);
            }
        }
        assert_eq!(w.resolution(), 0.5);
    }

    #[test]
    fn risk_digits_scale_linearly() {
        let w = load_world("3 1 1.0\nS39\n").unwrap();
        assert!((w.risk(Cell::new(1, 0)) - 3.0 / 9.0).abs() < 1e-12);
        assert_eq!(w.risk(Cell::new(2, 0)), 1.0);
        assert!(w.is_traversable(Cell::new(2, 0)));
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert!(matches!(load_world("3 x 1\n"), Err(ParseError::MalformedHeader(_))));
        assert!(matches!(load_world("2 2 1\nS.\n"), Err(ParseError::RowCount { .. })));
        assert!(matches!(
            load_world("2 2 1\nS.\n...\n"),
            Err(ParseError::NonRectangular { row: 1, .. })
        ));
        assert_eq!(load_world("2 1 1\n..\n"), Err(ParseError::NoStart));
        assert_eq!(load_world("2 1 1\nSS\n"), Err(ParseError::MultipleStarts));
        assert!(matches!(load_world("2 1 1\nSx\n"), Err(ParseError::InvalidChar { col: 1, .. })));
    }

    #[test]
    fn step_east_in_open_room() {
        let w = open3();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = step_robot(
            &w,
            RobotPose::new(Cell::new(1, 1), Heading::N),
            PrimitiveMove::Go(Heading::E),
            &MotionNoise::default(),
            &mut rng,
        );
        assert_eq!(out.pose, RobotPose::new(Cell::new(2, 1), Heading::E));
        assert!(!out.collision);
    }

    #[test]
    fn blocked_move_is_a_collision() {
        let w = load_world("3 1 1.0\nS#.\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = w.start_pose();
        let out = step_robot(&w, p, PrimitiveMove::Go(Heading::E), &MotionNoise::default(), &mut rng);
        assert_eq!(out.pose, p);
        assert!(out.collision);
    }

    #[test]
    fn diagonal_cannot_cut_corners() {
        let w = load_world("2 2 1.0\nS#\n..\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = step_robot(&w, w.start_pose(), PrimitiveMove::Go(Heading::SE), &MotionNoise::default(), &mut rng);
        assert!(out.collision);
    }

    #[test]
    fn certain_slip_never_moves() {
        let w = open3();
        let noise = MotionNoise {
            slip_probability: 1.0,
            enabled: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pose = w.start_pose();
        for h in Heading::ALL {
            let out = step_robot(&w, pose, PrimitiveMove::Go(h), &noise, &mut rng);
            assert!(out.slipped);
            assert_eq!(out.pose, pose);
            pose = out.pose;
        }
    }

    #[test]
    fn risk_patch_radius_one_cell() {
        let w = open3();
        let spec = SensorSpec {
            risk_radius: 1.0,
            coverage_radius: 1.0,
            line_of_sight: true,
        };
        let patch = sense_risk(&w, w.start_pose(), &spec);
        assert_eq!(patch.len(), 9);
        assert!(patch.values().all(|&r| r == 0.0));
    }

    #[test]
    fn full_visibility_returns_whole_field() {
        let w = load_world("5 5 1.0\n.....\n.1.2.\n..S..\n.3...\n....9\n").unwrap();
        let spec = SensorSpec {
            risk_radius: 10.0,
            coverage_radius: 1.0,
            line_of_sight: true,
        };
        let patch = sense_risk(&w, w.start_pose(), &spec);
        assert_eq!(patch.len(), 25);
        for c in w.cells() {
            assert_eq!(patch[&c], w.risk(c));
        }
    }

    #[test]
    fn coverage_is_idempotent_at_a_pose() {
        let mut w = open3();
        let spec = SensorSpec {
            risk_radius: 2.0,
            coverage_radius: 1.0,
            line_of_sight: true,
        };
        let p = w.start_pose();
        assert_eq!(sense_coverage(&mut w, p, &spec).len(), 9);
        assert_eq!(w.covered_count(), 9);
        assert!(sense_coverage(&mut w, p, &spec).is_empty());
    }
}
