//! Coverage reward kernel: binary coverage entropy, information gain, action
//! cost and their weighted combination. Entropies are in bits.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardWeights {
    /// Weight on information gain.
    pub k_info: f64,
    /// Weight on action cost.
    pub k_cost: f64,
    /// Traversal-distance weight inside the action cost.
    pub k_dist: f64,
    /// Traversal-risk weight inside the action cost.
    pub k_risk: f64,
    /// Motion-primitive (heading change) weight inside the action cost.
    pub k_turn: f64,
    /// Per-step discount, in `(0, 1]`.
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            k_info: 1.0,
            k_cost: 0.2,
            k_dist: 1.0,
            k_risk: 5.0,
            k_turn: 0.3,
            gamma: 0.95,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), String> {
        let ks = [self.k_info, self.k_cost, self.k_dist, self.k_risk, self.k_turn];
        if ks.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err("reward weights must be finite and non-negative".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        Ok(())
    }
}

/// Entropy of a single binary coverage variable, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

pub fn coverage_entropy<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs.into_iter().map(binary_entropy).sum()
}

/// Entropy removed by covering every node of a footprint (each set to `p = 1`).
pub fn info_gain<I: IntoIterator<Item = f64>>(footprint: I) -> f64 {
    // After the sweep every footprint term is zero, so the difference is the
    // footprint's current entropy; nodes outside the footprint cancel.
    coverage_entropy(footprint)
}

/// `k_d·d + k_ρ·ρ + k_μ·μ`, where `turn` is the heading change as a fraction of a reversal.
pub fn action_cost(distance: f64, risk: f64, turn: f64, w: &RewardWeights) -> f64 {
    w.k_dist * distance + w.k_risk * risk + w.k_turn * turn
}

pub fn step_reward(info: f64, cost: f64, w: &RewardWeights) -> f64 {
    w.k_info * info - w.k_cost * cost
}

/// `Σ_t γ^t r_t`.
pub fn discounted_return<I: IntoIterator<Item = f64>>(rewards: I, gamma: f64) -> f64 {
    let mut g = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += g * r;
        g *= gamma;
    }
    total
}
