//! Receding-horizon mission loop: belief updates, roadmap refresh, global
//! guidance, local planning with policy reconciliation, and execution.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baselines::{hfe_plan, nbv_plan, BaselineError, HfeScope};
use crate::belief::{BeliefError, CoverageBelief, PoseGraph, RiskMap};
use crate::gcp::{qmdp_action, value_iteration, GcpParams, PoseBelief, QmdpAction};
use crate::geometry::{Cell, Heading};
use crate::irm::frontier::{detect_frontiers, FrontierCandidate};
use crate::irm::global::{GlobalIrm, GlobalIrmParams, NodeId, UpdateSummary};
use crate::irm::local::{build_local_irm, LocalEdge, LocalIrm, LocalNodeId};
use crate::lcp::pomcp::{pomcp_plan, Guidance, LcpParams};
use crate::lcp::sim::{LocalModel, LocalSimState};
use crate::reward::RewardWeights;
use crate::world::{sense_coverage, sense_risk, step_robot, GroundTruthWorld, MotionNoise, PrimitiveMove, RobotPose, SensorSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlannerKind {
    Plgrim,
    Nbv,
    Hfe,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Plgrim => "plgrim",
            PlannerKind::Nbv => "nbv",
            PlannerKind::Hfe => "hfe",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plgrim" => Some(PlannerKind::Plgrim),
            "nbv" => Some(PlannerKind::Nbv),
            "hfe" => Some(PlannerKind::Hfe),
            _ => None,
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissionConfig {
    pub planner: PlannerKind,
    pub sensor: SensorSpec,
    pub noise: MotionNoise,
    pub weights: RewardWeights,
    pub irm: GlobalIrmParams,
    pub gcp: GcpParams,
    pub lcp: LcpParams,
    /// Risk-map window side, cells (odd).
    pub window_size: usize,
    /// Primitive steps executed per episode.
    pub exec_steps: usize,
    /// Primitive step cap; `None` runs until completion or abort.
    pub step_budget: Option<usize>,
    /// Consecutive episodes without new coverage before aborting.
    pub stuck_episodes: usize,
    pub nbv_samples: usize,
}

impl Default for MissionConfig {
    fn default() -> Self {
        let lcp = LcpParams::default();
        Self {
            planner: PlannerKind::Plgrim,
            sensor: SensorSpec::default(),
            noise: MotionNoise::default(),
            weights: RewardWeights::default(),
            irm: GlobalIrmParams::default(),
            gcp: GcpParams::default(),
            exec_steps: lcp.macro_length,
            lcp,
            window_size: 21,
            step_budget: None,
            stuck_episodes: 100,
            nbv_samples: 30,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.sensor.validate()?;
        self.weights.validate()?;
        self.irm.validate()?;
        self.gcp.validate()?;
        self.lcp.validate()?;
        if self.window_size % 2 == 0 || self.window_size < 3 {
            return Err(format!("window_size must be odd and at least 3, got {}", self.window_size));
        }
        if self.exec_steps == 0 || self.exec_steps > self.lcp.horizon() {
            return Err("exec_steps must lie in 1..=lcp.macro_length*lcp.depth".into());
        }
        if self.stuck_episodes == 0 || self.nbv_samples == 0 {
            return Err("stuck_episodes and nbv.samples must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.noise.slip_probability) {
            return Err("noise.slip_probability must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Checks that the window can hold the risk sensor's reach at `resolution`.
    pub fn validate_for(&self, resolution: f64) -> Result<(), String> {
        let half = (self.window_size / 2) as f64;
        if self.sensor.risk_radius / resolution > half + 1e-9 {
            return Err(format!(
                "window of {} cells cannot hold a {} m risk radius at {} m/cell",
                self.window_size, self.sensor.risk_radius, resolution
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicySource {
    Lcp,
    GcpGuided,
    Reconciled,
    Nbv,
    Hfe,
}

/// Time-indexed primitive action sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub anchor: u64,
    pub actions: Vec<Heading>,
    /// Rewards the plan expected, one per action.
    pub predicted: Vec<f64>,
    pub horizon: usize,
    pub source: PolicySource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    LocalCoverage,
    Relocate,
    Done,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::LocalCoverage => "local",
            Mode::Relocate => "relocate",
            Mode::Done => "done",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeReport {
    pub episode: usize,
    pub wall_time: Duration,
    pub mode: Mode,
    pub tau: Option<usize>,
    pub policy: Option<Policy>,
    pub coverage_fraction: f64,
    pub steps: usize,
    pub frontier_count: usize,
    pub global_nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRow {
    pub step: usize,
    pub sim_time: u64,
    pub covered_cells: usize,
    pub coverage_fraction: f64,
    pub x: f64,
    pub y: f64,
    pub mode: Mode,
    pub episode: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MissionStatus {
    Complete,
    BudgetExhausted,
    Aborted(String),
}

impl MissionStatus {
    pub fn name(&self) -> &'static str {
        match self {
            MissionStatus::Complete => "complete",
            MissionStatus::BudgetExhausted => "budget",
            MissionStatus::Aborted(_) => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MissionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Outcome of re-simulating the previous policy's tail under current beliefs.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconciliation {
    pub tau: usize,
    /// `J(τ)` for `τ = 0..=tail.len()`.
    pub objective: Vec<f64>,
    /// Re-simulated reward per tail step; `-inf` from the first infeasible step on.
    pub rewards: Vec<f64>,
    /// Every re-simulated reward equals the prediction.
    pub unchanged: bool,
}

/// Chooses how much of `tail` to keep: `J(τ) = Σ_{k<τ} γ^k r_k` is evaluated
/// for every `τ` and the largest maximizer wins.
pub fn reconcile(model: &LocalModel, root: &LocalSimState, tail: &[Heading], predicted: &[f64]) -> Reconciliation {
    let gamma = model.weights().gamma;
    let mut state = root.clone();
    let mut rewards = Vec::with_capacity(tail.len());
    let mut feasible = true;
    for &h in tail {
        let r = if feasible {
            match model.primitive_step(&mut state, h) {
                Some(t) => t.reward,
                None => {
                    feasible = false;
                    f64::NEG_INFINITY
                }
            }
        } else {
            f64::NEG_INFINITY
        };
        rewards.push(r);
    }
    let mut objective = Vec::with_capacity(tail.len() + 1);
    let mut j = 0.0;
    let mut g = 1.0;
    objective.push(0.0);
    for &r in &rewards {
        j += g * r;
        g *= gamma;
        objective.push(j);
    }
    let unchanged = feasible
        && predicted.len() == rewards.len()
        && predicted.iter().zip(&rewards).all(|(p, r)| (p - r).abs() <= 1e-9);
    let mut tau = 0;
    for (t, &v) in objective.iter().enumerate() {
        if v >= objective[tau] {
            tau = t;
        }
    }
    Reconciliation {
        tau,
        objective,
        rewards,
        unchanged,
    }
}

/// Rewards of following `actions` from `root`; stops at the first infeasible step.
pub fn predict_rewards(model: &LocalModel, root: &LocalSimState, actions: &[Heading]) -> Vec<f64> {
    let mut state = root.clone();
    let mut out = Vec::with_capacity(actions.len());
    for &h in actions {
        match model.primitive_step(&mut state, h) {
            Some(t) => out.push(t.reward),
            None => break,
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissionOutcome {
    pub status: MissionStatus,
    pub reports: Vec<EpisodeReport>,
    pub rows: Vec<StepRow>,
    pub steps: usize,
    pub coverage_fraction: f64,
    pub frontier_count: usize,
    pub global_nodes: usize,
    pub frontier_events: usize,
    pub trajectory_length: f64,
    /// Cells of the reachable set that ended up covered.
    pub covered_reachable: usize,
    pub reachable: usize,
}

struct EpisodePlan {
    mode: Mode,
    tau: Option<usize>,
    policy: Policy,
}

pub struct Mission {
    world: GroundTruthWorld,
    config: MissionConfig,
    rng: ChaCha8Rng,
    pose: RobotPose,
    riskmap: RiskMap,
    coverage: CoverageBelief,
    pose_graph: PoseGraph,
    global: GlobalIrm,
    reachable: Vec<bool>,
    reachable_total: usize,
    reachable_covered: usize,
    time: u64,
    steps: usize,
    distance: f64,
    episode: usize,
    previous: Option<(Policy, usize)>,
    stall: usize,
    reports: Vec<EpisodeReport>,
    rows: Vec<StepRow>,
    status: Option<MissionStatus>,
}

impl Mission {
    pub fn new(mut world: GroundTruthWorld, config: MissionConfig, seed: u64) -> Result<Self, MissionError> {
        config.validate().map_err(MissionError::Config)?;
        config.validate_for(world.resolution()).map_err(MissionError::Config)?;
        world.reset_coverage();
        let pose = world.start_pose();
        let mut reachable = vec![false; world.width() * world.height()];
        let cells = world.reachable_cells();
        for c in &cells {
            reachable[c.y as usize * world.width() + c.x as usize] = true;
        }
        let mut mission = Self {
            riskmap: RiskMap::new(config.window_size, pose),
            coverage: CoverageBelief::new(),
            pose_graph: PoseGraph::new(),
            global: GlobalIrm::new(config.irm, world.resolution()),
            reachable_total: cells.len(),
            reachable,
            reachable_covered: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pose,
            world,
            config,
            time: 0,
            steps: 0,
            distance: 0.0,
            episode: 0,
            previous: None,
            stall: 0,
            reports: Vec::new(),
            rows: Vec::new(),
            status: None,
        };
        mission.sense();
        mission.pose_graph.append(pose, 0)?;
        mission.push_row(Mode::LocalCoverage);
        Ok(mission)
    }

    pub fn world(&self) -> &GroundTruthWorld {
        &self.world
    }

    pub fn pose(&self) -> RobotPose {
        self.pose
    }

    pub fn riskmap(&self) -> &RiskMap {
        &self.riskmap
    }

    pub fn coverage(&self) -> &CoverageBelief {
        &self.coverage
    }

    pub fn pose_graph(&self) -> &PoseGraph {
        &self.pose_graph
    }

    pub fn global_irm(&self) -> &GlobalIrm {
        &self.global
    }

    pub fn rows(&self) -> &[StepRow] {
        &self.rows
    }

    pub fn reports(&self) -> &[EpisodeReport] {
        &self.reports
    }

    pub fn status(&self) -> Option<&MissionStatus> {
        self.status.as_ref()
    }

    pub fn coverage_fraction(&self) -> f64 {
        if self.reachable_total == 0 {
            1.0
        } else {
            self.reachable_covered as f64 / self.reachable_total as f64
        }
    }

    fn sense(&mut self) {
        let patch = sense_risk(&self.world, self.pose, &self.config.sensor);
        self.riskmap.update(self.pose, &patch);
        let fresh = sense_coverage(&mut self.world, self.pose, &self.config.sensor);
        for c in &fresh {
            if self.reachable[c.y as usize * self.world.width() + c.x as usize] {
                self.reachable_covered += 1;
            }
        }
        self.coverage.update(fresh);
    }

    fn push_row(&mut self, mode: Mode) {
        let (x, y) = self.world.position_m(self.pose.cell);
        self.rows.push(StepRow {
            step: self.steps,
            sim_time: self.time,
            covered_cells: self.reachable_covered,
            coverage_fraction: self.coverage_fraction(),
            x,
            y,
            mode,
            episode: self.episode,
            distance: self.distance,
        });
    }

    fn budget_left(&self) -> bool {
        self.config.step_budget.is_none_or(|b| self.steps < b)
    }

    fn local_cost(&self) -> impl Fn(&LocalEdge) -> f64 + '_ {
        let w = self.config.weights;
        move |e| w.k_dist * e.distance + w.k_risk * e.risk
    }

    /// Runs one planning episode. Returns `None` once the mission has ended.
    pub fn run_episode(&mut self) -> Result<Option<EpisodeReport>, MissionError> {
        if self.status.is_some() {
            return Ok(None);
        }
        if !self.budget_left() {
            self.status = Some(MissionStatus::BudgetExhausted);
            return Ok(None);
        }
        let started = Instant::now();
        self.episode += 1;
        let res = self.world.resolution();
        let local = build_local_irm(&self.riskmap, &self.coverage, self.pose, res);
        let candidates = detect_frontiers(&self.coverage, &self.riskmap);
        self.global.update(&self.pose_graph, &candidates, &self.riskmap);

        if self.global.frontier_count() == 0 && candidates.is_empty() {
            self.status = Some(MissionStatus::Complete);
            let report = self.report(started, Mode::Done, None, None);
            return Ok(Some(report));
        }

        let robot = local.node_at(self.pose.cell).expect("robot cell is always a Local IRM node");
        let plan = match self.config.planner {
            PlannerKind::Plgrim => self.plan_plgrim(local, robot, &candidates),
            PlannerKind::Nbv => self.plan_nbv(local, robot, &candidates),
            PlannerKind::Hfe => self.plan_hfe(local, robot, &candidates),
        };

        let covered_before = self.reachable_covered;
        let executed = self.execute(&plan.policy, plan.mode)?;
        if self.reachable_covered > covered_before {
            self.stall = 0;
        } else {
            self.stall += 1;
        }
        let report = self.report(started, plan.mode, plan.tau, Some(plan.policy.clone()));
        self.previous = Some((plan.policy, executed));
        if self.stall >= self.config.stuck_episodes {
            let msg = format!(
                "no coverage progress for {} episodes at {} (step {}, coverage {:.4}, {} global frontiers)",
                self.stall,
                self.pose.cell,
                self.steps,
                self.coverage_fraction(),
                self.global.frontier_count()
            );
            self.status = Some(MissionStatus::Aborted(msg));
        }
        Ok(Some(report))
    }

    fn report(&mut self, started: Instant, mode: Mode, tau: Option<usize>, policy: Option<Policy>) -> EpisodeReport {
        let r = EpisodeReport {
            episode: self.episode,
            wall_time: started.elapsed(),
            mode,
            tau,
            policy,
            coverage_fraction: self.coverage_fraction(),
            steps: self.steps,
            frontier_count: self.global.frontier_count(),
            global_nodes: self.global.node_count(),
        };
        self.reports.push(r.clone());
        r
    }

    /// Executes up to `exec_steps` actions, refusing any step into a cell
    /// believed lethal. Returns the number of actions attempted.
    fn execute(&mut self, policy: &Policy, mode: Mode) -> Result<usize, MissionError> {
        let limit = match policy.source {
            PolicySource::Nbv => policy.actions.len(),
            _ => self.config.exec_steps,
        };
        let mut executed = 0;
        for &h in policy.actions.iter().take(limit) {
            if !self.budget_left() {
                break;
            }
            if self.riskmap.is_known_lethal(self.pose.cell.step(h)) {
                break;
            }
            let out = step_robot(&self.world, self.pose, PrimitiveMove::Go(h), &self.config.noise, &mut self.rng);
            self.distance += self.pose.cell.dist(out.pose.cell) * self.world.resolution();
            self.pose = out.pose;
            self.time += 1;
            self.steps += 1;
            executed += 1;
            self.sense();
            self.pose_graph.append(self.pose, self.time)?;
            self.global.sample_breadcrumbs(&self.pose_graph, &self.riskmap, &mut UpdateSummary::default());
            self.push_row(mode);
            if out.collision {
                break;
            }
        }
        Ok(executed)
    }

    /// Global guidance: QMDP action from the nearest reachable Global IRM node.
    fn guidance(&self, local: &LocalIrm, robot: LocalNodeId) -> Option<QmdpAction> {
        let table = value_iteration(&self.global, &self.config.weights, &self.config.gcp);
        if table.exploration_complete() {
            return None;
        }
        let (dist, _) = local.dijkstra(robot, self.local_cost());
        let robot_cell = self.pose.cell;
        let mut best: Option<(u32, f64)> = None;
        for n in self.global.nodes() {
            let d = match local.node_at(n.cell) {
                Some(m) if dist[m].is_finite() => dist[m],
                _ => continue,
            };
            if table.value(n.id).is_some_and(f64::is_finite) && best.is_none_or(|(_, b)| d < b) {
                best = Some((n.id, d));
            }
        }
        let location = match best {
            Some((id, _)) => id,
            None => {
                self.global
                    .nodes()
                    .filter(|n| table.value(n.id).is_some_and(f64::is_finite))
                    .min_by(|a, b| a.cell.dist(robot_cell).total_cmp(&b.cell.dist(robot_cell)))?
                    .id
            }
        };
        qmdp_action(&table, &PoseBelief::point_mass(location)).ok()
    }

    /// Route along a chain of Global IRM nodes. The chain's stored edge paths
    /// are joined into one polyline; the robot enters it at the cell that
    /// minimizes window distance plus remaining polyline length. Falls back to
    /// the nearest reachable local frontier candidate.
    fn relocation_route(
        &self,
        local: &LocalIrm,
        robot: LocalNodeId,
        chain: &[NodeId],
        candidates: &[FrontierCandidate],
    ) -> Option<Vec<Heading>> {
        let (dist, pred) = local.dijkstra(robot, self.local_cost());
        let mut line: Vec<Cell> = chain.first().and_then(|&id| self.global.node(id)).map(|n| vec![n.cell]).unwrap_or_default();
        for w in chain.windows(2) {
            let Some(e) = self.global.edge_between(w[0], w[1]) else { break };
            let cells = e.cells_from(w[0]);
            if cells.first() != line.last() {
                break;
            }
            line.extend_from_slice(&cells[1..]);
        }
        let res = local.resolution();
        let mut remaining = vec![0.0; line.len()];
        for k in (0..line.len().saturating_sub(1)).rev() {
            remaining[k] = remaining[k + 1] + line[k].dist(line[k + 1]) * res;
        }
        let mut entry: Option<(usize, LocalNodeId, f64)> = None;
        for (k, &c) in line.iter().enumerate() {
            let Some(n) = local.node_at(c) else { continue };
            if !dist[n].is_finite() {
                continue;
            }
            let total = dist[n] + remaining[k];
            if entry.is_none_or(|(_, _, b)| total <= b + 1e-9) {
                entry = Some((k, n, total));
            }
        }
        if let Some((k, n, _)) = entry {
            let mut path = LocalIrm::path_to(&pred, robot, n)?;
            for w in line[k..].windows(2) {
                match Heading::from_delta(w[1].x - w[0].x, w[1].y - w[0].y) {
                    Some(h) => path.push(h),
                    None => break,
                }
            }
            if !path.is_empty() {
                return Some(path);
            }
        }
        let mut best: Option<(LocalNodeId, f64)> = None;
        for c in candidates {
            let Some(n) = local.node_at(c.cell) else { continue };
            if n != robot && dist[n].is_finite() && best.is_none_or(|(_, b)| dist[n] < b) {
                best = Some((n, dist[n]));
            }
        }
        LocalIrm::path_to(&pred, robot, best?.0)
    }

    /// Last Local IRM node reached by following `path` from `robot`.
    fn last_local_node(local: &LocalIrm, robot: LocalNodeId, path: &[Heading]) -> LocalNodeId {
        let mut cur = robot;
        for &h in path {
            match local.neighbor(cur, h) {
                Some(n) => cur = n,
                None => break,
            }
        }
        cur
    }

    fn plan_plgrim(&mut self, local: LocalIrm, robot: LocalNodeId, candidates: &[FrontierCandidate]) -> EpisodePlan {
        let guidance_action = self.guidance(&local, robot);
        let chain: Vec<NodeId> = guidance_action.as_ref().map(|a| a.chain.clone()).unwrap_or_default();
        let relocation = self.relocation_route(&local, robot, &chain, candidates);
        let goal_cell = guidance_action.as_ref().and_then(|a| self.global.node(a.goal)).map(|n| n.cell);
        let guidance = match &relocation {
            Some(path) => {
                let t = Self::last_local_node(&local, robot, path);
                let (field, _) = local.dijkstra(t, |e| e.distance);
                Guidance {
                    target: goal_cell.or(Some(local.node(t).cell)),
                    field: Some(field),
                }
            }
            None => Guidance {
                target: goal_cell,
                field: None,
            },
        };

        let horizon = self.config.lcp.horizon();
        let model = LocalModel::new(local, &self.config.sensor, self.config.weights);
        let root = model.root_state(robot, self.pose.heading);

        let mut prefix: Vec<Heading> = Vec::new();
        let mut tau = None;
        if let Some((prev, executed)) = &self.previous {
            let start = (*executed).min(prev.actions.len());
            let tail = &prev.actions[start..];
            let predicted = &prev.predicted[start.min(prev.predicted.len())..];
            if !tail.is_empty() && matches!(prev.source, PolicySource::Lcp | PolicySource::Reconciled) {
                let rec = reconcile(&model, &root, tail, predicted);
                prefix = tail[..rec.tau].to_vec();
                tau = Some(rec.tau);
            }
        }

        let mut state = root.clone();
        for &h in &prefix {
            model.primitive_step(&mut state, h).expect("kept prefix is feasible");
        }
        let plan = pomcp_plan(&model, &state, &guidance, &self.config.lcp, &mut self.rng);

        // A plan whose own steps gather nothing is treated like an exhausted tree.
        let idle = {
            let mut st = state.clone();
            let info: f64 = plan.headings().iter().map_while(|&h| model.primitive_step(&mut st, h)).map(|t| t.info).sum();
            info <= self.config.lcp.info_epsilon
        };
        let (mode, actions, source) = if prefix.is_empty() && (plan.exhausted || idle) {
            match relocation {
                Some(path) => (Mode::Relocate, path, PolicySource::GcpGuided),
                None => (Mode::Relocate, plan.headings(), PolicySource::GcpGuided),
            }
        } else {
            let mut actions = prefix.clone();
            actions.extend(plan.headings());
            actions.truncate(horizon);
            let source = if prefix.is_empty() {
                PolicySource::Lcp
            } else {
                PolicySource::Reconciled
            };
            (Mode::LocalCoverage, actions, source)
        };
        let predicted = predict_rewards(&model, &root, &actions);
        EpisodePlan {
            mode,
            tau,
            policy: Policy {
                anchor: self.time,
                horizon: horizon.max(actions.len()),
                actions,
                predicted,
                source,
            },
        }
    }

    /// Relocation used by the baselines when their own rule finds nothing to gain.
    fn fallback_policy(&mut self, local: &LocalIrm, robot: LocalNodeId, candidates: &[FrontierCandidate], source: PolicySource) -> EpisodePlan {
        let route = hfe_plan(&self.global, local, robot).map(|c| c.route).unwrap_or_default();
        let actions = self.relocation_route(local, robot, &route, candidates).unwrap_or_default();
        EpisodePlan {
            mode: Mode::Relocate,
            tau: None,
            policy: Policy {
                anchor: self.time,
                horizon: actions.len(),
                predicted: Vec::new(),
                actions,
                source,
            },
        }
    }

    fn plan_nbv(&mut self, local: LocalIrm, robot: LocalNodeId, candidates: &[FrontierCandidate]) -> EpisodePlan {
        let model = LocalModel::new(local, &self.config.sensor, self.config.weights);
        let root = model.root_state(robot, self.pose.heading);
        match nbv_plan(&model, &root, self.config.nbv_samples, &mut self.rng) {
            Ok((best, _)) if best.info > 0.0 => {
                let predicted = predict_rewards(&model, &root, &best.path);
                EpisodePlan {
                    mode: Mode::LocalCoverage,
                    tau: None,
                    policy: Policy {
                        anchor: self.time,
                        horizon: best.path.len(),
                        actions: best.path,
                        predicted,
                        source: PolicySource::Nbv,
                    },
                }
            }
            Ok(_) | Err(BaselineError::NoViewpoint | BaselineError::Done | BaselineError::Unreachable) => {
                self.fallback_policy(model.irm(), robot, candidates, PolicySource::GcpGuided)
            }
        }
    }

    fn plan_hfe(&mut self, local: LocalIrm, robot: LocalNodeId, candidates: &[FrontierCandidate]) -> EpisodePlan {
        let mut plan = self.fallback_policy(&local, robot, candidates, PolicySource::Hfe);
        plan.mode = Mode::LocalCoverage;
        if let Ok(choice) = hfe_plan(&self.global, &local, robot) {
            if choice.scope == HfeScope::Global {
                plan.mode = Mode::Relocate;
            }
        }
        plan
    }

    /// Runs episodes until completion, budget exhaustion or abort.
    pub fn run(mut self) -> Result<MissionOutcome, MissionError> {
        while self.run_episode()?.is_some() {}
        let status = self.status.clone().unwrap_or(MissionStatus::BudgetExhausted);
        Ok(MissionOutcome {
            status,
            steps: self.steps,
            coverage_fraction: self.coverage_fraction(),
            frontier_count: self.global.frontier_count(),
            global_nodes: self.global.node_count(),
            frontier_events: self.global.frontier_events(),
            trajectory_length: self.pose_graph.path_length(self.world.resolution()),
            covered_reachable: self.reachable_covered,
            reachable: self.reachable_total,
            reports: self.reports,
            rows: self.rows,
        })
    }
}

/// Convenience wrapper: build a mission and run it to the end.
pub fn run_mission(world: GroundTruthWorld, config: &MissionConfig, seed: u64) -> Result<MissionOutcome, MissionError> {
    Mission::new(world, config.clone(), seed)?.run()
}
