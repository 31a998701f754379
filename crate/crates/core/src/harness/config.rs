//! Flat `key = value` configuration files with dotted module prefixes.
//!
//! Blank lines and anything after `#` are ignored. Every key may appear once;
//! unknown keys and malformed values are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::executive::{MissionConfig, PlannerKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for `{key}`: {reason}")]
    BadValue { line: usize, key: String, value: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

/// Parses the raw text into a key map, rejecting syntax errors and duplicates.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: raw.to_string() });
        };
        let (k, v) = (k.trim(), v.trim());
        let key_ok = !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
        if !key_ok || v.is_empty() {
            return Err(ConfigError::Syntax { line, text: raw.to_string() });
        }
        if out.insert(k.to_string(), Entry { line, value: v.to_string() }).is_some() {
            return Err(ConfigError::Duplicate { line, key: k.to_string() });
        }
    }
    Ok(out)
}

fn bad(key: &str, e: &Entry, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        line: e.line,
        key: key.to_string(),
        value: e.value.clone(),
        reason: reason.to_string(),
    }
}

fn num<T: std::str::FromStr>(key: &str, e: &Entry) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    e.value.parse().map_err(|err| bad(key, e, err))
}

fn flag(key: &str, e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, e, "expected true or false")),
    }
}

/// Sets one mission parameter. Returns `Ok(false)` when the key is not a
/// mission parameter.
pub fn apply_key(cfg: &mut MissionConfig, key: &str, e: &Entry) -> Result<bool, ConfigError> {
    match key {
        "planner" => {
            cfg.planner = PlannerKind::parse(&e.value).ok_or_else(|| bad(key, e, "expected plgrim, nbv or hfe"))?;
        }
        "budget" => {
            cfg.step_budget = match e.value.as_str() {
                "none" => None,
                _ => Some(num(key, e)?),
            }
        }
        "window_size" => cfg.window_size = num(key, e)?,
        "exec_steps" => cfg.exec_steps = num(key, e)?,
        "stuck_episodes" => cfg.stuck_episodes = num(key, e)?,
        "sensor.risk_radius" => cfg.sensor.risk_radius = num(key, e)?,
        "sensor.coverage_radius" => cfg.sensor.coverage_radius = num(key, e)?,
        "sensor.line_of_sight" => cfg.sensor.line_of_sight = flag(key, e)?,
        "noise.enabled" => cfg.noise.enabled = flag(key, e)?,
        "noise.slip_probability" => cfg.noise.slip_probability = num(key, e)?,
        "reward.k_info" => cfg.weights.k_info = num(key, e)?,
        "reward.k_cost" => cfg.weights.k_cost = num(key, e)?,
        "reward.k_dist" => cfg.weights.k_dist = num(key, e)?,
        "reward.k_risk" => cfg.weights.k_risk = num(key, e)?,
        "reward.k_turn" => cfg.weights.k_turn = num(key, e)?,
        "reward.gamma" => cfg.weights.gamma = num(key, e)?,
        "irm.breadcrumb_spacing" => cfg.irm.breadcrumb_spacing = num(key, e)?,
        "irm.edge_max_distance" => cfg.irm.edge_max_distance = num(key, e)?,
        "irm.edge_max_risk" => cfg.irm.edge_max_risk = num(key, e)?,
        "irm.neighborhood_radius" => cfg.irm.neighborhood_radius = num(key, e)?,
        "gcp.gamma" => cfg.gcp.gamma = num(key, e)?,
        "gcp.epsilon" => cfg.gcp.epsilon = num(key, e)?,
        "gcp.max_sweeps" => cfg.gcp.max_sweeps = num(key, e)?,
        "lcp.macro_length" => cfg.lcp.macro_length = num(key, e)?,
        "lcp.depth" => cfg.lcp.depth = num(key, e)?,
        "lcp.budget" => cfg.lcp.budget = num(key, e)?,
        "lcp.ucb_scale" => cfg.lcp.ucb_scale = num(key, e)?,
        "lcp.info_epsilon" => cfg.lcp.info_epsilon = num(key, e)?,
        "nbv.samples" => cfg.nbv_samples = num(key, e)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// A single mission: world file, seed and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub world: PathBuf,
    pub seed: u64,
    pub mission: MissionConfig,
}

/// Paths in a config resolve against the directory holding the config file.
fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let entries = parse_entries(text)?;
        let mut mission = MissionConfig::default();
        let mut world = None;
        let mut seed = 0;
        for (key, e) in &entries {
            match key.as_str() {
                "world" => world = Some(resolve(base, &e.value)),
                "seed" => seed = num(key, e)?,
                _ => {
                    if !apply_key(&mut mission, key, e)? {
                        return Err(ConfigError::UnknownKey { line: e.line, key: key.clone() });
                    }
                }
            }
        }
        mission.validate().map_err(ConfigError::Invalid)?;
        Ok(Self { world: world.ok_or(ConfigError::Missing("world"))?, seed, mission })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Planners × environments × seeds sharing one set of mission parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSpec {
    pub planners: Vec<PlannerKind>,
    /// Environment name (file stem) and world file.
    pub envs: Vec<(String, PathBuf)>,
    pub seeds: Vec<u64>,
    pub mission: MissionConfig,
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Seeds as a comma list whose items are numbers or inclusive `a..b` ranges.
fn seeds(key: &str, e: &Entry) -> Result<Vec<u64>, ConfigError> {
    let mut out = Vec::new();
    for item in list(&e.value) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|err| bad(key, e, err))?;
            let b: u64 = b.trim().parse().map_err(|err| bad(key, e, err))?;
            if b < a {
                return Err(bad(key, e, "empty range"));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|err| bad(key, e, err))?);
        }
    }
    Ok(out)
}

impl MatrixSpec {
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let entries = parse_entries(text)?;
        let mut mission = MissionConfig::default();
        let (mut planners, mut envs, mut seed_list) = (None, None, None);
        for (key, e) in &entries {
            match key.as_str() {
                "matrix.planners" => {
                    let ps = list(&e.value)
                        .map(|p| PlannerKind::parse(p).ok_or_else(|| bad(key, e, format!("unknown planner `{p}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    planners = Some(ps);
                }
                "matrix.envs" => {
                    let es = list(&e.value)
                        .map(|p| {
                            let path = resolve(base, p);
                            let name = path
                                .file_stem()
                                .and_then(|s| s.to_str())
                                .ok_or_else(|| bad(key, e, format!("no file name in `{p}`")))?
                                .to_string();
                            Ok((name, path))
                        })
                        .collect::<Result<Vec<_>, ConfigError>>()?;
                    envs = Some(es);
                }
                "matrix.seeds" => seed_list = Some(seeds(key, e)?),
                "planner" => return Err(ConfigError::UnknownKey { line: e.line, key: key.clone() }),
                _ => {
                    if !apply_key(&mut mission, key, e)? {
                        return Err(ConfigError::UnknownKey { line: e.line, key: key.clone() });
                    }
                }
            }
        }
        let spec = Self {
            planners: planners.ok_or(ConfigError::Missing("matrix.planners"))?,
            envs: envs.ok_or(ConfigError::Missing("matrix.envs"))?,
            seeds: seed_list.ok_or(ConfigError::Missing("matrix.seeds"))?,
            mission,
        };
        if spec.planners.is_empty() || spec.envs.is_empty() || spec.seeds.is_empty() {
            return Err(ConfigError::Invalid("matrix lists must be non-empty".into()));
        }
        let mut names: Vec<&str> = spec.envs.iter().map(|e| e.0.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid("matrix.envs has two files with the same name".into()));
        }
        spec.mission.validate().map_err(ConfigError::Invalid)?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}
