//! POMCP with UCT selection over straight macros. Observations are the
//! belief-predicted footprints, so each history has one child per action.

use std::fmt::Write as _;

use rand::Rng;

use crate::geometry::{Cell, Heading};
use crate::irm::local::LocalNodeId;
use crate::lcp::macros::{enumerate_macro_actions, MacroAction};
use crate::lcp::sim::{LocalModel, LocalSimState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LcpParams {
    /// Primitive steps per macro.
    pub macro_length: usize,
    /// Macros per simulated history.
    pub depth: usize,
    /// Simulations per plan.
    pub budget: usize,
    /// UCT constant as a multiple of the largest return magnitude seen.
    pub ucb_scale: f64,
    /// Bits below which the local region counts as exhausted.
    pub info_epsilon: f64,
}

impl Default for LcpParams {
    fn default() -> Self {
        Self {
            macro_length: 6,
            depth: 4,
            budget: 3000,
            ucb_scale: 2.0,
            info_epsilon: 1e-3,
        }
    }
}

impl LcpParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.macro_length == 0 || self.depth == 0 || self.budget == 0 {
            return Err("lcp.macro_length, lcp.depth and lcp.budget must be positive".into());
        }
        if !(self.ucb_scale >= 0.0 && self.info_epsilon >= 0.0) {
            return Err("lcp.ucb_scale and lcp.info_epsilon must be non-negative".into());
        }
        Ok(())
    }

    /// Primitive-step horizon of a full plan.
    pub fn horizon(&self) -> usize {
        self.macro_length * self.depth
    }
}

/// Parameter handed down from the global planner.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Guidance {
    /// Cell the global action points at.
    pub target: Option<Cell>,
    /// Optional cost-to-target per Local IRM node; lower is closer.
    pub field: Option<Vec<f64>>,
}

impl Guidance {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn toward(target: Cell) -> Self {
        Self {
            target: Some(target),
            field: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_none() && self.field.is_none()
    }

    /// Lower is better, `None` when the guidance cannot rank this endpoint.
    fn score(&self, model: &LocalModel, end: LocalNodeId) -> Option<f64> {
        if let Some(field) = &self.field {
            let v = field[end];
            if v.is_finite() {
                return Some(v);
            }
        }
        self.target.map(|t| model.irm().node(end).cell.dist(t))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct ActionStat {
    visits: u32,
    q: f64,
    q_info: f64,
}

#[derive(Clone, Debug)]
struct TreeNode {
    visits: u32,
    actions: Vec<MacroAction>,
    stats: Vec<ActionStat>,
    children: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootStat {
    pub action: MacroAction,
    pub visits: u32,
    pub q: f64,
    /// Mean undiscounted information gathered by histories starting with this action.
    pub q_info: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalPlan {
    pub macros: Vec<MacroAction>,
    pub root: Vec<RootStat>,
    /// Best root action expects less than `info_epsilon` bits.
    pub exhausted: bool,
    /// No macro is applicable at the root.
    pub stuck: bool,
    pub simulations: usize,
}

impl LocalPlan {
    pub fn headings(&self) -> Vec<Heading> {
        self.macros.iter().flat_map(|m| m.headings()).collect()
    }

    /// Index of the best root action by Q, ties to the lowest index.
    pub fn best_root(&self) -> Option<usize> {
        argmax_visited(self.root.iter().map(|s| (s.visits, s.q)))
    }

    /// `action_idx N Q` per root action.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.root.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {}", s.visits, s.q);
        }
        out
    }
}

fn argmax_visited(it: impl Iterator<Item = (u32, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (n, q)) in it.enumerate() {
        if n == 0 {
            continue;
        }
        if best.is_none_or(|(_, bq)| q > bq) {
            best = Some((i, q));
        }
    }
    best.map(|b| b.0)
}

struct Search<'a, R: Rng + ?Sized> {
    model: &'a LocalModel,
    params: &'a LcpParams,
    guidance: &'a Guidance,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
    macro_cache: Vec<Option<Vec<MacroAction>>>,
    max_abs: f64,
    scratch: Vec<LocalNodeId>,
}

impl<R: Rng + ?Sized> Search<'_, R> {
    fn macros_at(&mut self, state: &LocalSimState) -> Vec<MacroAction> {
        if let Some(ms) = &self.macro_cache[state.node] {
            return ms.clone();
        }
        let ms = enumerate_macro_actions(self.model.irm(), state.node, state.heading, self.params.macro_length);
        self.macro_cache[state.node] = Some(ms.clone());
        ms
    }

    fn new_node(&mut self, state: &LocalSimState) -> usize {
        let actions = self.macros_at(state);
        let n = actions.len();
        self.nodes.push(TreeNode {
            visits: 0,
            actions,
            stats: vec![ActionStat::default(); n],
            children: vec![None; n],
        });
        self.nodes.len() - 1
    }

    fn select(&self, idx: usize) -> usize {
        let node = &self.nodes[idx];
        if let Some(i) = node.stats.iter().position(|s| s.visits == 0) {
            return i;
        }
        let c = self.params.ucb_scale * self.max_abs.max(1e-6);
        let ln_n = f64::from(node.visits).ln();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, s) in node.stats.iter().enumerate() {
            let u = s.q + c * (ln_n / f64::from(s.visits)).sqrt();
            if u > best.1 {
                best = (i, u);
            }
        }
        best.0
    }

    /// Macro the zero-gain guidance prefers, ties to the lowest index.
    fn guided_choice(&self, state: &LocalSimState, actions: &[MacroAction]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in actions.iter().enumerate() {
            let end = end_node(self.model, state.node, m);
            if let Some(s) = self.guidance.score(self.model, end) {
                if best.is_none_or(|(_, b)| s < b - 1e-12) {
                    best = Some((i, s));
                }
            }
        }
        best.map(|b| b.0)
    }

    /// One-step greedy information with random tie-breaks; guidance (or a
    /// uniform draw) when nothing yields information.
    fn rollout_choice(&mut self, state: &LocalSimState, actions: &[MacroAction], randomize: bool) -> usize {
        let mut infos = Vec::with_capacity(actions.len());
        for m in actions {
            infos.push(self.model.macro_info(state, m, &mut self.scratch));
        }
        let best = infos.iter().copied().fold(0.0, f64::max);
        if best > 0.0 {
            let ties: Vec<usize> = (0..actions.len()).filter(|&i| infos[i] >= best - 1e-12).collect();
            return if randomize && ties.len() > 1 {
                ties[self.rng.random_range(0..ties.len())]
            } else {
                ties[0]
            };
        }
        match self.guided_choice(state, actions) {
            Some(i) => i,
            None if randomize => self.rng.random_range(0..actions.len()),
            None => 0,
        }
    }

    fn rollout(&mut self, state: &mut LocalSimState, depth: usize) -> (f64, f64) {
        let (mut g, mut disc, mut info) = (0.0, 1.0, 0.0);
        for _ in depth..self.params.depth {
            if state.is_terminal() {
                break;
            }
            let actions = self.macros_at(state);
            let a = actions[self.rollout_choice(state, &actions, true)];
            if a.is_hold() {
                break;
            }
            let out = self.model.apply_macro(state, &a).expect("enumerated macro applies");
            g += disc * out.reward;
            info += out.info;
            disc *= self.model.weights().gamma.powi(out.steps as i32);
        }
        (g, info)
    }

    fn simulate(&mut self, state: &mut LocalSimState, idx: usize, depth: usize) -> (f64, f64) {
        if depth >= self.params.depth || state.is_terminal() {
            return (0.0, 0.0);
        }
        let i = self.select(idx);
        let action = self.nodes[idx].actions[i];
        let (g, info) = if action.is_hold() {
            (0.0, 0.0)
        } else {
            let out = self.model.apply_macro(state, &action).expect("enumerated macro applies");
            let disc = self.model.weights().gamma.powi(out.steps as i32);
            let (g_rest, i_rest) = match self.nodes[idx].children[i] {
                Some(child) => self.simulate(state, child, depth + 1),
                None => {
                    let child = self.new_node(state);
                    self.nodes[idx].children[i] = Some(child);
                    let r = self.rollout(state, depth + 1);
                    let c = &mut self.nodes[child];
                    c.visits += 1;
                    r
                }
            };
            (out.reward + disc * g_rest, out.info + i_rest)
        };
        let node = &mut self.nodes[idx];
        node.visits += 1;
        let s = &mut node.stats[i];
        s.visits += 1;
        s.q += (g - s.q) / f64::from(s.visits);
        s.q_info += (info - s.q_info) / f64::from(s.visits);
        self.max_abs = self.max_abs.max(g.abs());
        (g, info)
    }

    /// Deterministic continuation used to fill a plan beyond the tree.
    fn extend(&mut self, state: &mut LocalSimState, macros: &mut Vec<MacroAction>, guided_only: bool) {
        while macros.len() < self.params.depth && !state.is_terminal() {
            let actions = self.macros_at(state);
            let i = if guided_only {
                match self.guided_choice(state, &actions) {
                    Some(i) => i,
                    None => break,
                }
            } else {
                self.rollout_choice(state, &actions, false)
            };
            let a = actions[i];
            if a.is_hold() {
                break;
            }
            self.model.apply_macro(state, &a).expect("enumerated macro applies");
            macros.push(a);
        }
    }
}

fn end_node(model: &LocalModel, start: LocalNodeId, m: &MacroAction) -> LocalNodeId {
    let mut cur = start;
    for h in m.headings() {
        match model.irm().neighbor(cur, h) {
            Some(n) => cur = n,
            None => break,
        }
    }
    cur
}

/// Plans a macro sequence of up to `params.depth` macros from `root`.
pub fn pomcp_plan<R: Rng + ?Sized>(
    model: &LocalModel,
    root: &LocalSimState,
    guidance: &Guidance,
    params: &LcpParams,
    rng: &mut R,
) -> LocalPlan {
    let mut search = Search {
        model,
        params,
        guidance,
        rng,
        nodes: Vec::new(),
        macro_cache: vec![None; model.irm().len()],
        max_abs: 0.0,
        scratch: Vec::new(),
    };
    let root_idx = search.new_node(root);
    let stuck = search.nodes[root_idx].actions.iter().all(MacroAction::is_hold);
    let mut simulations = 0;
    if !stuck && !root.is_terminal() {
        for _ in 0..params.budget {
            let mut state = root.clone();
            search.simulate(&mut state, root_idx, 0);
            simulations += 1;
        }
    }

    let root_node = &search.nodes[root_idx];
    let root_stats: Vec<RootStat> = root_node
        .actions
        .iter()
        .zip(&root_node.stats)
        .map(|(a, s)| RootStat {
            action: *a,
            visits: s.visits,
            q: s.q,
            q_info: s.q_info,
        })
        .collect();
    let best = argmax_visited(root_stats.iter().map(|s| (s.visits, s.q)));
    let exhausted = best.is_none_or(|i| root_stats[i].q_info < params.info_epsilon);

    if stuck {
        return LocalPlan {
            macros: vec![root_node.actions[0]],
            root: root_stats,
            exhausted: true,
            stuck: true,
            simulations,
        };
    }

    let mut macros = Vec::new();
    let mut state = root.clone();
    if exhausted {
        search.extend(&mut state, &mut macros, true);
    } else {
        let mut idx = Some(root_idx);
        while let Some(n) = idx {
            if macros.len() >= params.depth {
                break;
            }
            let node = &search.nodes[n];
            let Some(i) = argmax_visited(node.stats.iter().map(|s| (s.visits, s.q))) else { break };
            let a = node.actions[i];
            if a.is_hold() {
                break;
            }
            idx = node.children[i];
            model.apply_macro(&mut state, &a).expect("enumerated macro applies");
            macros.push(a);
        }
        search.extend(&mut state, &mut macros, false);
    }
    LocalPlan {
        macros,
        root: root_stats,
        exhausted,
        stuck: false,
        simulations,
    }
}
