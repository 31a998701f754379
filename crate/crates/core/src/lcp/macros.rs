//! Straight-line macro actions over the Local IRM.

use crate::geometry::Heading;
use crate::irm::local::{LocalIrm, LocalNodeId};

/// `len` primitive moves along `heading`; `len == 0` is the hold action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MacroAction {
    pub heading: Heading,
    pub len: usize,
}

impl MacroAction {
    pub fn hold(heading: Heading) -> Self {
        Self { heading, len: 0 }
    }

    pub fn is_hold(&self) -> bool {
        self.len == 0
    }

    pub fn headings(&self) -> impl Iterator<Item = Heading> {
        std::iter::repeat_n(self.heading, self.len)
    }

    pub fn displacement(&self) -> (i32, i32) {
        let (dx, dy) = self.heading.delta();
        (dx * self.len as i32, dy * self.len as i32)
    }
}

/// Node reached after each step of `m` from `start`, or `None` if a step leaves the graph.
pub fn macro_nodes(irm: &LocalIrm, start: LocalNodeId, m: &MacroAction) -> Option<Vec<LocalNodeId>> {
    let mut out = Vec::with_capacity(m.len);
    let mut cur = start;
    for h in m.headings() {
        cur = irm.neighbor(cur, h)?;
        out.push(cur);
    }
    Some(out)
}

/// One macro per heading (in heading order), each as long as the lattice allows
/// up to `max_len`. Only when every heading is blocked is a single hold returned.
pub fn enumerate_macro_actions(irm: &LocalIrm, node: LocalNodeId, heading: Heading, max_len: usize) -> Vec<MacroAction> {
    let mut out = Vec::with_capacity(8);
    for h in Heading::ALL {
        let mut len = 0;
        let mut cur = node;
        while len < max_len {
            match irm.neighbor(cur, h) {
                Some(n) => {
                    cur = n;
                    len += 1;
                }
                None => break,
            }
        }
        if len > 0 {
            out.push(MacroAction { heading: h, len });
        }
    }
    if out.is_empty() {
        out.push(MacroAction::hold(heading));
    }
    out
}
