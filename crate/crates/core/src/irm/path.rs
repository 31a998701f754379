//! Shortest-path search over 8-connected grids.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::geometry::{Cell, Heading};
use crate::world::move_allowed;

#[derive(Clone, Copy, Debug)]
struct Entry<T> {
    priority: f64,
    seq: u64,
    item: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    // Min-heap on priority, then FIFO on insertion sequence.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-priority queue with deterministic tie order.
pub(crate) struct MinQueue<T> {
    heap: BinaryHeap<Entry<T>>,
    seq: u64,
}

impl<T> MinQueue<T> {
    pub(crate) fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            seq: 0,
        }
    }

    pub(crate) fn push(&mut self, priority: f64, item: T) {
        self.seq += 1;
        self.heap.push(Entry {
            priority,
            seq: self.seq,
            item,
        });
    }

    pub(crate) fn pop(&mut self) -> Option<(f64, T)> {
        self.heap.pop().map(|e| (e.priority, e.item))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    /// Cells from start to goal inclusive.
    pub cells: Vec<Cell>,
    /// Path length in cells.
    pub length: f64,
    /// Largest cell risk along the path, endpoints included.
    pub max_risk: f64,
}

impl GridPath {
    pub fn headings(&self) -> Vec<Heading> {
        self.cells
            .windows(2)
            .filter_map(|w| Heading::from_delta(w[1].x - w[0].x, w[1].y - w[0].y))
            .collect()
    }
}

/// A* for the distance-shortest path between two cells over `free` cells,
/// 8-connected without corner cutting. Paths longer than `max_length` cells
/// are not returned.
pub fn grid_astar(
    start: Cell,
    goal: Cell,
    max_length: f64,
    mut free: impl FnMut(Cell) -> bool,
    mut risk: impl FnMut(Cell) -> f64,
) -> Option<GridPath> {
    if !free(start) || !free(goal) {
        return None;
    }
    let octile = |c: Cell| {
        let dx = f64::from((c.x - goal.x).abs());
        let dy = f64::from((c.y - goal.y).abs());
        dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
    };
    let mut g: HashMap<Cell, f64> = HashMap::from([(start, 0.0)]);
    let mut parent: HashMap<Cell, Cell> = HashMap::new();
    let mut open = MinQueue::new();
    open.push(octile(start), start);
    let eps = 1e-9;
    while let Some((_, c)) = open.pop() {
        let gc = g[&c];
        if c == goal {
            let mut cells = vec![goal];
            let mut cur = goal;
            while let Some(&p) = parent.get(&cur) {
                cells.push(p);
                cur = p;
            }
            cells.reverse();
            let max_risk = cells.iter().map(|&x| risk(x)).fold(0.0, f64::max);
            return Some(GridPath {
                cells,
                length: gc,
                max_risk,
            });
        }
        for h in Heading::ALL {
            if !move_allowed(c, h, &mut free) {
                continue;
            }
            let n = c.step(h);
            let ng = gc + h.length();
            if ng + octile(n) > max_length + eps {
                continue;
            }
            if g.get(&n).is_none_or(|&old| ng < old - eps) {
                g.insert(n, ng);
                parent.insert(n, c);
                open.push(ng + octile(n), n);
            }
        }
    }
    None
}
