//! Grid primitives shared by the simulator, the belief layer and the planners.
//!
//! Cells are addressed by integer column `x` and row `y`; row 0 is the first
//! grid line of an environment file, so `y` grows southward.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn step(self, heading: Heading) -> Self {
        let (dx, dy) = heading.delta();
        self.offset(dx, dy)
    }

    /// Euclidean distance between cell centers, in cells.
    pub fn dist(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        dx.hypot(dy)
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    /// The four edge-adjacent neighbours.
    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset(0, -1),
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(-1, 0),
        ]
    }

    pub fn neighbors8(self) -> impl Iterator<Item = (Heading, Cell)> {
        Heading::ALL.into_iter().map(move |h| (h, self.step(h)))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Eight compass headings, clockwise from north.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Heading {
    pub const ALL: [Heading; 8] = [
        Heading::N,
        Heading::NE,
        Heading::E,
        Heading::SE,
        Heading::S,
        Heading::SW,
        Heading::W,
        Heading::NW,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Heading {
        Self::ALL[i % 8]
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::N => (0, -1),
            Heading::NE => (1, -1),
            Heading::E => (1, 0),
            Heading::SE => (1, 1),
            Heading::S => (0, 1),
            Heading::SW => (-1, 1),
            Heading::W => (-1, 0),
            Heading::NW => (-1, -1),
        }
    }

    pub fn from_delta(dx: i32, dy: i32) -> Option<Heading> {
        Self::ALL.into_iter().find(|h| h.delta() == (dx, dy))
    }

    pub fn is_diagonal(self) -> bool {
        let (dx, dy) = self.delta();
        dx != 0 && dy != 0
    }

    /// Step length in cells.
    pub fn length(self) -> f64 {
        if self.is_diagonal() {
            std::f64::consts::SQRT_2
        } else {
            1.0
        }
    }

    /// Number of 45° increments between two headings, in `0..=4`.
    pub fn turn_steps(self, other: Heading) -> u32 {
        let d = (self.index() as i32 - other.index() as i32).rem_euclid(8) as u32;
        d.min(8 - d)
    }

    /// Heading change normalized to `[0, 1]`: 0 is straight ahead, 1 is a reversal.
    pub fn turn_fraction(self, other: Heading) -> f64 {
        f64::from(self.turn_steps(other)) / 4.0
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Every cell whose closed square the segment between two cell centers touches,
/// in traversal order. When the segment passes exactly through a lattice corner
/// both side cells are included.
pub fn supercover(from: Cell, to: Cell) -> Vec<Cell> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let xstep = dx.signum();
    let ystep = dy.signum();
    let ax = dx.abs();
    let ay = dy.abs();
    let ddx = 2 * ax;
    let ddy = 2 * ay;

    let mut out = Vec::with_capacity((ax + ay + 1) as usize);
    let (mut x, mut y) = (from.x, from.y);
    out.push(Cell::new(x, y));

    if ddx >= ddy {
        let mut error = ax;
        let mut prev = error;
        for _ in 0..ax {
            x += xstep;
            error += ddy;
            if error > ddx {
                y += ystep;
                error -= ddx;
                match (error + prev).cmp(&ddx) {
                    std::cmp::Ordering::Less => out.push(Cell::new(x, y - ystep)),
                    std::cmp::Ordering::Greater => out.push(Cell::new(x - xstep, y)),
                    std::cmp::Ordering::Equal => {
                        out.push(Cell::new(x, y - ystep));
                        out.push(Cell::new(x - xstep, y));
                    }
                }
            }
            out.push(Cell::new(x, y));
            prev = error;
        }
    } else {
        let mut error = ay;
        let mut prev = error;
        for _ in 0..ay {
            y += ystep;
            error += ddx;
            if error > ddy {
                x += xstep;
                error -= ddy;
                match (error + prev).cmp(&ddy) {
                    std::cmp::Ordering::Less => out.push(Cell::new(x - xstep, y)),
                    std::cmp::Ordering::Greater => out.push(Cell::new(x, y - ystep)),
                    std::cmp::Ordering::Equal => {
                        out.push(Cell::new(x - xstep, y));
                        out.push(Cell::new(x, y - ystep));
                    }
                }
            }
            out.push(Cell::new(x, y));
            prev = error;
        }
    }
    out
}

/// True when no cell strictly between `from` and `to` on the supercover line is blocked.
pub fn line_of_sight(from: Cell, to: Cell, mut blocked: impl FnMut(Cell) -> bool) -> bool {
    let line = supercover(from, to);
    let n = line.len();
    if n <= 2 {
        return true;
    }
    line[1..n - 1].iter().all(|&c| !blocked(c))
}

/// Cells whose square intersects a disc of `radius` cells around the center of
/// `center`, in row-major order.
pub fn disc(center: Cell, radius: f64) -> impl Iterator<Item = Cell> {
    let r = (radius + 0.5).floor() as i32;
    let r2 = radius * radius + 1e-9;
    let gap = |d: i32| (f64::from(d.abs()) - 0.5).max(0.0);
    (-r..=r).flat_map(move |dy| {
        (-r..=r).filter_map(move |dx| {
            let d2 = gap(dx).powi(2) + gap(dy).powi(2);
            (d2 <= r2).then(|| center.offset(dx, dy))
        })
    })
}
