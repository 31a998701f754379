//! Frontier detection: clusters of covered traversable cells that border
//! uncovered space which is not known to be lethal.

use std::collections::{BTreeSet, VecDeque};

use crate::belief::{CoverageBelief, RiskMap, COVERAGE_PRIOR};
use crate::geometry::Cell;

#[derive(Clone, Debug, PartialEq)]
pub struct FrontierCandidate {
    /// Member cell closest to the cluster centroid.
    pub cell: Cell,
    pub members: Vec<Cell>,
    /// Uncovered cells contiguous with the cluster's border.
    pub area: usize,
    /// Mean coverage probability of the bordered cells.
    pub p_covered: f64,
}

fn uncovered_open(c: Cell, coverage: &CoverageBelief, riskmap: &RiskMap) -> bool {
    !coverage.is_covered(c) && !riskmap.is_known_lethal(c)
}

/// Known-free covered cell in the window interior with an uncovered, non-lethal 4-neighbour.
pub fn is_boundary(c: Cell, coverage: &CoverageBelief, riskmap: &RiskMap) -> bool {
    riskmap.in_interior(c)
        && riskmap.is_known_free(c)
        && coverage.is_covered(c)
        && c.neighbors4().iter().any(|&n| uncovered_open(n, coverage, riskmap))
}

/// Frontier clusters in the risk-map window, in row-major order of their first member.
/// An empty result means nothing in view remains to be covered.
pub fn detect_frontiers(coverage: &CoverageBelief, riskmap: &RiskMap) -> Vec<FrontierCandidate> {
    let boundary: BTreeSet<Cell> = riskmap
        .window_cells()
        .filter(|&c| is_boundary(c, coverage, riskmap))
        .collect();
    let mut seen: BTreeSet<Cell> = BTreeSet::new();
    let mut out = Vec::new();
    // Row-major scan order (y, x) so cluster order is stable.
    let mut ordered: Vec<Cell> = boundary.iter().copied().collect();
    ordered.sort_by_key(|c| (c.y, c.x));
    for &seed in &ordered {
        if seen.contains(&seed) {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([seed]);
        seen.insert(seed);
        while let Some(c) = queue.pop_front() {
            members.push(c);
            for (_, n) in c.neighbors8() {
                if boundary.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        members.sort_by_key(|c| (c.y, c.x));
        out.push(summarize_cluster(members, coverage, riskmap));
    }
    out
}

fn summarize_cluster(members: Vec<Cell>, coverage: &CoverageBelief, riskmap: &RiskMap) -> FrontierCandidate {
    let n = members.len() as f64;
    let cx = members.iter().map(|c| f64::from(c.x)).sum::<f64>() / n;
    let cy = members.iter().map(|c| f64::from(c.y)).sum::<f64>() / n;
    let cell = *members
        .iter()
        .min_by(|a, b| {
            let da = (f64::from(a.x) - cx).powi(2) + (f64::from(a.y) - cy).powi(2);
            let db = (f64::from(b.x) - cx).powi(2) + (f64::from(b.y) - cy).powi(2);
            da.total_cmp(&db)
        })
        .expect("cluster is non-empty");

    let bordered: BTreeSet<Cell> = members
        .iter()
        .flat_map(|c| c.neighbors4())
        .filter(|&c| uncovered_open(c, coverage, riskmap))
        .collect();
    let p_covered = bordered
        .iter()
        .map(|&c| coverage.get(c).unwrap_or(COVERAGE_PRIOR))
        .sum::<f64>()
        / bordered.len().max(1) as f64;

    // Bordered cells plus the known-free uncovered region connected to them.
    let mut region: BTreeSet<Cell> = bordered.clone();
    let mut queue: VecDeque<Cell> = bordered.iter().copied().filter(|&c| riskmap.is_known_free(c)).collect();
    while let Some(c) = queue.pop_front() {
        for n in c.neighbors4() {
            if riskmap.is_known_free(n) && !coverage.is_covered(n) && region.insert(n) {
                queue.push_back(n);
            }
        }
    }
    FrontierCandidate {
        cell,
        members,
        area: region.len(),
        p_covered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Heading;
    use crate::world::RobotPose;

    #[test]
    fn covered_closed_room_has_no_frontier() {
        let mut rm = RiskMap::new(7, RobotPose::new(Cell::new(3, 3), Heading::E));
        let mut cov = CoverageBelief::new();
        let cells: Vec<Cell> = rm.window_cells().collect();
        for c in cells {
            let wall = c.x == 0 || c.y == 0 || c.x == 6 || c.y == 6;
            rm.set(c, if wall { 1.0 } else { 0.0 });
            if !wall {
                cov.update([c]);
            }
        }
        assert!(detect_frontiers(&cov, &rm).is_empty());
    }
}
