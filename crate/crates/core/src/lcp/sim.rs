//! Deterministic generative model over a Local IRM snapshot: moving along
//! lattice edges and sweeping the predicted coverage footprint.

use crate::belief::CoverageBelief;
use crate::geometry::{disc, line_of_sight, Heading};
use crate::irm::local::{LocalIrm, LocalNodeId};
use crate::lcp::macros::MacroAction;
use crate::reward::{action_cost, binary_entropy, step_reward, RewardWeights};
use crate::world::SensorSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSimState {
    pub node: LocalNodeId,
    pub heading: Heading,
    /// Per Local IRM node, whether the simulation has swept it to `p = 1`.
    pub covered: Vec<bool>,
    /// Nodes with positive entropy not yet swept.
    pub remaining_uncertain: usize,
    /// `γ^k` after `k` simulated primitive steps.
    pub discount: f64,
}

impl LocalSimState {
    pub fn is_terminal(&self) -> bool {
        self.remaining_uncertain == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub info: f64,
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MacroOutcome {
    /// `Σ_j γ^j r_j` over the macro's steps, discounted from the macro start.
    pub reward: f64,
    pub info: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct LocalModel {
    irm: LocalIrm,
    weights: RewardWeights,
    footprints: Vec<Vec<LocalNodeId>>,
    entropy: Vec<f64>,
}

impl LocalModel {
    /// Footprints are the Local IRM nodes within the coverage radius whose line
    /// of sight is not blocked by a known-lethal cell.
    pub fn new(irm: LocalIrm, sensor: &SensorSpec, weights: RewardWeights) -> Self {
        let radius = sensor.coverage_radius / irm.resolution();
        let footprints = irm
            .nodes()
            .iter()
            .map(|n| {
                disc(n.cell, radius)
                    .filter_map(|c| irm.node_at(c))
                    .filter(|&m| {
                        !sensor.line_of_sight || line_of_sight(n.cell, irm.node(m).cell, |c| irm.is_known_lethal(c))
                    })
                    .collect()
            })
            .collect();
        let entropy = irm.nodes().iter().map(|n| binary_entropy(n.p_covered)).collect();
        Self {
            irm,
            weights,
            footprints,
            entropy,
        }
    }

    pub fn irm(&self) -> &LocalIrm {
        &self.irm
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }

    pub fn footprint(&self, node: LocalNodeId) -> &[LocalNodeId] {
        &self.footprints[node]
    }

    /// Current entropy of `node` in `state`.
    pub fn entropy(&self, state: &LocalSimState, node: LocalNodeId) -> f64 {
        if state.covered[node] {
            0.0
        } else {
            self.entropy[node]
        }
    }

    pub fn root_state(&self, node: LocalNodeId, heading: Heading) -> LocalSimState {
        let covered: Vec<bool> = self.entropy.iter().map(|&h| h <= 0.0).collect();
        let remaining_uncertain = covered.iter().filter(|c| !**c).count();
        LocalSimState {
            node,
            heading,
            covered,
            remaining_uncertain,
            discount: 1.0,
        }
    }

    /// Applies one primitive move in place; `None` when the Local IRM has no such edge.
    pub fn primitive_step(&self, state: &mut LocalSimState, heading: Heading) -> Option<Transition> {
        let edge = *self.irm.edge_from(state.node, heading)?;
        let next = if edge.a == state.node { edge.b } else { edge.a };
        let mut info = 0.0;
        for &m in &self.footprints[next] {
            if !state.covered[m] {
                info += self.entropy[m];
                state.covered[m] = true;
                state.remaining_uncertain -= 1;
            }
        }
        let cost = action_cost(edge.distance, edge.risk, state.heading.turn_fraction(heading), &self.weights);
        state.node = next;
        state.heading = heading;
        state.discount *= self.weights.gamma;
        Some(Transition {
            reward: step_reward(info, cost, &self.weights),
            info,
            cost,
        })
    }

    /// Applies a macro in place. Returns `None` (leaving `state` partially advanced)
    /// if the macro leaves the lattice.
    pub fn apply_macro(&self, state: &mut LocalSimState, m: &MacroAction) -> Option<MacroOutcome> {
        let mut out = MacroOutcome::default();
        let mut g = 1.0;
        for h in m.headings() {
            let t = self.primitive_step(state, h)?;
            out.reward += g * t.reward;
            out.info += t.info;
            out.steps += 1;
            g *= self.weights.gamma;
        }
        Some(out)
    }

    /// Pure form of [`apply_macro`](Self::apply_macro).
    pub fn simulate_step(&self, state: &LocalSimState, m: &MacroAction) -> Option<(LocalSimState, MacroOutcome)> {
        let mut next = state.clone();
        let out = self.apply_macro(&mut next, m)?;
        Some((next, out))
    }

    /// Information the macro would gain from `state`, without modifying it.
    pub fn macro_info(&self, state: &LocalSimState, m: &MacroAction, scratch: &mut Vec<LocalNodeId>) -> f64 {
        scratch.clear();
        let mut cur = state.node;
        for h in m.headings() {
            let Some(n) = self.irm.neighbor(cur, h) else { break };
            cur = n;
            scratch.extend(self.footprints[n].iter().copied().filter(|&k| !state.covered[k]));
        }
        scratch.sort_unstable();
        scratch.dedup();
        scratch.iter().map(|&k| self.entropy[k]).sum()
    }
}

/// Coverage probabilities the belief would hold after sweeping every cell `state` covered.
pub fn overlay_belief(model: &LocalModel, state: &LocalSimState, base: &CoverageBelief) -> CoverageBelief {
    let mut out = base.clone();
    for (i, n) in model.irm().nodes().iter().enumerate() {
        if state.covered[i] && model.entropy[i] > 0.0 {
            out.set(n.cell, 1.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::RiskMap;
    use crate::geometry::Cell;
    use crate::irm::local::build_local_irm;
    use crate::world::RobotPose;

    fn corridor_model(covered: bool, w: RewardWeights) -> (LocalModel, LocalNodeId) {
        let pose = RobotPose::new(Cell::new(3, 3), Heading::E);
        let mut rm = RiskMap::new(7, pose);
        let mut cov = CoverageBelief::new();
        for x in 0..7 {
            rm.set(Cell::new(x, 3), 0.0);
            if covered {
                cov.update([Cell::new(x, 3)]);
            }
        }
        let irm = build_local_irm(&rm, &cov, pose, 1.0);
        let n = irm.node_at(pose.cell).unwrap();
        let spec = SensorSpec {
            risk_radius: 3.0,
            coverage_radius: 1.0,
            line_of_sight: true,
        };
        (LocalModel::new(irm, &spec, w), n)
    }

    #[test]
    fn covered_ground_costs_only() {
        let w = RewardWeights::default();
        let (model, n) = corridor_model(true, w);
        let m = MacroAction {
            heading: Heading::E,
            len: 2,
        };
        let (_, out) = model.simulate_step(&model.root_state(n, Heading::E), &m).unwrap();
        let expected = -w.k_cost * w.k_dist * (1.0 + w.gamma);
        assert!((out.reward - expected).abs() < 1e-12);
        assert_eq!(out.info, 0.0);
    }

    #[test]
    fn uncertain_sweep_with_free_motion() {
        let w = RewardWeights {
            k_cost: 0.0,
            gamma: 1.0,
            ..Default::default()
        };
        let (model, n) = corridor_model(false, w);
        let m = MacroAction {
            heading: Heading::E,
            len: 3,
        };
        // Steps to x = 4, 5, 6 sweep cells 3..=6; cells 0..=2 stay uncertain.
        let (s, out) = model.simulate_step(&model.root_state(n, Heading::E), &m).unwrap();
        assert!((out.reward - 4.0).abs() < 1e-12, "{}", out.reward);
        assert_eq!(s.remaining_uncertain, 3);
    }
}
