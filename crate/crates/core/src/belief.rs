//! Probabilistic world estimates maintained by the robot: the rolling risk map,
//! the pose graph and the global coverage belief.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Cell;
use crate::world::{RiskPatch, RobotPose, LETHAL_THRESHOLD};

/// Coverage probability assumed for known-traversable cells never reported by the coverage sensor.
pub const COVERAGE_PRIOR: f64 = 0.5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BeliefError {
    #[error("pose timestamp {time} is not after the last timestamp {last}")]
    NonMonotoneTime { time: u64, last: u64 },
    #[error("pose {to} is more than one primitive move from {from}")]
    NotAdjacent { from: Cell, to: Cell },
}

/// Robot-centred square window of risk estimates. Cells never sensed (or
/// scrolled out and back in) are unknown.
#[derive(Clone, Debug)]
pub struct RiskMap {
    size: usize,
    center: RobotPose,
    cells: Vec<Option<f64>>,
}

impl RiskMap {
    pub fn new(window_size: usize, center: RobotPose) -> Self {
        assert!(window_size % 2 == 1, "risk map window must be odd");
        Self {
            size: window_size,
            center,
            cells: vec![None; window_size * window_size],
        }
    }

    pub fn window_size(&self) -> usize {
        self.size
    }

    pub fn half(&self) -> i32 {
        (self.size / 2) as i32
    }

    pub fn center(&self) -> RobotPose {
        self.center
    }

    pub fn origin(&self) -> Cell {
        self.center.cell.offset(-self.half(), -self.half())
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.center.cell.chebyshev(c) <= self.half()
    }

    /// Inside the window and not on its outermost ring.
    pub fn in_interior(&self, c: Cell) -> bool {
        self.center.cell.chebyshev(c) < self.half()
    }

    fn slot(&self, c: Cell) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        let o = self.origin();
        Some((c.y - o.y) as usize * self.size + (c.x - o.x) as usize)
    }

    pub fn get(&self, c: Cell) -> Option<f64> {
        self.slot(c).and_then(|i| self.cells[i])
    }

    pub fn is_known_free(&self, c: Cell) -> bool {
        self.get(c).is_some_and(|r| r < LETHAL_THRESHOLD)
    }

    pub fn is_known_lethal(&self, c: Cell) -> bool {
        self.get(c).is_some_and(|r| r >= LETHAL_THRESHOLD)
    }

    /// Overwrites one cell; ignored when outside the window.
    pub fn set(&mut self, c: Cell, risk: f64) {
        if let Some(i) = self.slot(c) {
            self.cells[i] = Some(risk.clamp(0.0, 1.0));
        }
    }

    /// Every cell in the window, row-major.
    pub fn window_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let o = self.origin();
        let n = self.size as i32;
        (0..n).flat_map(move |dy| (0..n).map(move |dx| o.offset(dx, dy)))
    }

    pub fn known_cells(&self) -> impl Iterator<Item = (Cell, f64)> + '_ {
        self.window_cells().filter_map(|c| self.get(c).map(|r| (c, r)))
    }

    /// Moves the window to `pose`, returning the known cells that scrolled out.
    pub fn recenter(&mut self, pose: RobotPose) -> Vec<Cell> {
        if pose.cell == self.center.cell {
            self.center = pose;
            return Vec::new();
        }
        let old: Vec<(Cell, f64)> = self.known_cells().collect();
        self.center = pose;
        self.cells.iter_mut().for_each(|v| *v = None);
        let mut dropped = Vec::new();
        for (c, r) in old {
            match self.slot(c) {
                Some(i) => self.cells[i] = Some(r),
                None => dropped.push(c),
            }
        }
        dropped
    }

    /// Recenters on `pose` and fuses a sensor patch, latest value wins.
    /// Returns the known cells dropped by the recentering.
    pub fn update(&mut self, pose: RobotPose, patch: &RiskPatch) -> Vec<Cell> {
        let dropped = self.recenter(pose);
        for (&c, &r) in patch {
            self.set(c, r);
        }
        dropped
    }
}

/// Time-stamped chain of robot poses linked by odometry edges.
#[derive(Clone, Debug, Default)]
pub struct PoseGraph {
    poses: Vec<(u64, RobotPose)>,
}

impl PoseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, pose: RobotPose, time: u64) -> Result<(), BeliefError> {
        if let Some(&(last, prev)) = self.poses.last() {
            if time <= last {
                return Err(BeliefError::NonMonotoneTime { time, last });
            }
            if prev.cell.chebyshev(pose.cell) > 1 {
                return Err(BeliefError::NotAdjacent {
                    from: prev.cell,
                    to: pose.cell,
                });
            }
        }
        self.poses.push((time, pose));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn poses(&self) -> &[(u64, RobotPose)] {
        &self.poses
    }

    pub fn last(&self) -> Option<RobotPose> {
        self.poses.last().map(|&(_, p)| p)
    }

    /// Odometry edges as index pairs of consecutive poses.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> {
        (1..self.poses.len()).map(|i| (i - 1, i))
    }

    /// Sum of edge lengths in meters.
    pub fn path_length(&self, resolution: f64) -> f64 {
        self.edges()
            .map(|(a, b)| self.poses[a].1.cell.dist(self.poses[b].1.cell))
            .sum::<f64>()
            * resolution
    }
}

/// Global sparse coverage belief. Absent cells have never been reported.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverageBelief {
    cells: BTreeMap<Cell, f64>,
}

impl CoverageBelief {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, c: Cell) -> Option<f64> {
        self.cells.get(&c).copied()
    }

    pub fn is_covered(&self, c: Cell) -> bool {
        self.get(c).is_some_and(|p| p >= 1.0)
    }

    pub fn set(&mut self, c: Cell, p: f64) {
        self.cells.insert(c, p.clamp(0.0, 1.0));
    }

    /// Marks each listed cell as covered with certainty.
    pub fn update<I: IntoIterator<Item = Cell>>(&mut self, covered: I) {
        for c in covered {
            self.cells.insert(c, 1.0);
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (Cell, f64)> + '_ {
        self.cells.iter().map(|(&c, &p)| (c, p))
    }

    pub fn covered_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.entries().filter(|&(_, p)| p >= 1.0).map(|(c, _)| c)
    }
}

/// The `x y kind value` debugging dump, risk records first.
pub fn dump_snapshot(riskmap: &RiskMap, coverage: &CoverageBelief) -> String {
    let mut out = String::new();
    for (c, r) in riskmap.known_cells() {
        let _ = writeln!(out, "{} {} risk {}", c.x, c.y, r);
    }
    for (c, p) in coverage.entries() {
        let _ = writeln!(out, "{} {} coverage {}", c.x, c.y, p);
    }
    out
}
