//! C ABI for plgrim-core.
//!
//! Functions return a [`PlgStatus`]; on failure a message for the calling
//! thread is available from [`plg_last_error`]. Handles and strings handed
//! out by this library must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plgrim_core::executive::{run_mission, MissionConfig, MissionStatus};
use plgrim_core::harness::config::{apply_key, Entry};
use plgrim_core::harness::run::run_csv;
use plgrim_core::reward::{self, RewardWeights};
use plgrim_core::world::{load_world, GroundTruthWorld};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Config = 4,
    Mission = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlgMissionStatus {
    Complete = 0,
    BudgetExhausted = 1,
    Aborted = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlgMissionResult {
    pub status: PlgMissionStatus,
    pub steps: u64,
    pub coverage_fraction: f64,
    pub frontier_count: u64,
    pub global_nodes: u64,
    /// Meters.
    pub trajectory_length: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlgRewardWeights {
    pub k_info: f64,
    pub k_cost: f64,
    pub k_dist: f64,
    pub k_risk: f64,
    pub k_turn: f64,
    pub gamma: f64,
}

impl From<PlgRewardWeights> for RewardWeights {
    fn from(w: PlgRewardWeights) -> Self {
        RewardWeights {
            k_info: w.k_info,
            k_cost: w.k_cost,
            k_dist: w.k_dist,
            k_risk: w.k_risk,
            k_turn: w.k_turn,
            gamma: w.gamma,
        }
    }
}

/// Opaque ground-truth world.
pub struct PlgWorld(GroundTruthWorld);

/// Opaque mission configuration.
pub struct PlgConfig(MissionConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: PlgStatus, msg: impl Into<String>) -> PlgStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PlgStatus) -> PlgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PlgStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, PlgStatus> {
    if p.is_null() {
        return Err(fail(PlgStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PlgStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn plg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a world from its text form into `*out`.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plg_world_from_text(text: *const c_char, out: *mut *mut PlgWorld) -> PlgStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlgStatus::NullPointer, "out is null");
        }
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match load_world(text) {
            Ok(w) => {
                *out = Box::into_raw(Box::new(PlgWorld(w)));
                PlgStatus::Ok
            }
            Err(e) => fail(PlgStatus::Parse, e.to_string()),
        }
    })
}

/// Width in cells, or 0 for a null handle.
///
/// # Safety
/// `world` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plg_world_width(world: *const PlgWorld) -> u32 {
    world.as_ref().map_or(0, |w| w.0.width() as u32)
}

/// Height in cells, or 0 for a null handle.
///
/// # Safety
/// `world` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plg_world_height(world: *const PlgWorld) -> u32 {
    world.as_ref().map_or(0, |w| w.0.height() as u32)
}

/// # Safety
/// `world` must be null or a handle from [`plg_world_from_text`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plg_world_free(world: *mut PlgWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Configuration with default parameters.
#[no_mangle]
pub extern "C" fn plg_config_new() -> *mut PlgConfig {
    Box::into_raw(Box::new(PlgConfig(MissionConfig::default())))
}

/// Sets one parameter using the config-file key names, e.g. `lcp.budget`.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn plg_config_set(config: *mut PlgConfig, key: *const c_char, value: *const c_char) -> PlgStatus {
    guard(|| {
        let Some(cfg) = config.as_mut() else {
            return fail(PlgStatus::NullPointer, "config is null");
        };
        let (key, value) = match (str_arg(key, "key"), str_arg(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let entry = Entry { line: 1, value: value.trim().to_string() };
        match apply_key(&mut cfg.0, key.trim(), &entry) {
            Ok(true) => PlgStatus::Ok,
            Ok(false) => fail(PlgStatus::Config, format!("unknown key `{key}`")),
            Err(e) => fail(PlgStatus::Config, e.to_string()),
        }
    })
}

/// # Safety
/// `config` must be null or a handle from [`plg_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plg_config_free(config: *mut PlgConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a mission on a copy of `world`. `config` may be null for defaults.
/// When `csv_out` is non-null it receives the per-step CSV, to be released
/// with [`plg_string_free`].
///
/// # Safety
/// Handles must be live; `result` must be valid; `csv_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn plg_mission_run(
    world: *const PlgWorld,
    config: *const PlgConfig,
    seed: u64,
    result: *mut PlgMissionResult,
    csv_out: *mut *mut c_char,
) -> PlgStatus {
    guard(|| {
        let Some(world) = world.as_ref() else {
            return fail(PlgStatus::NullPointer, "world is null");
        };
        if result.is_null() {
            return fail(PlgStatus::NullPointer, "result is null");
        }
        let cfg = config.as_ref().map_or_else(MissionConfig::default, |c| c.0.clone());
        let outcome = match run_mission(world.0.clone(), &cfg, seed) {
            Ok(o) => o,
            Err(e) => return fail(PlgStatus::Mission, e.to_string()),
        };
        let status = match &outcome.status {
            MissionStatus::Complete => PlgMissionStatus::Complete,
            MissionStatus::BudgetExhausted => PlgMissionStatus::BudgetExhausted,
            MissionStatus::Aborted(msg) => {
                set_error(msg.clone());
                PlgMissionStatus::Aborted
            }
        };
        *result = PlgMissionResult {
            status,
            steps: outcome.steps as u64,
            coverage_fraction: outcome.coverage_fraction,
            frontier_count: outcome.frontier_count as u64,
            global_nodes: outcome.global_nodes as u64,
            trajectory_length: outcome.trajectory_length,
        };
        if !csv_out.is_null() {
            let text = CString::new(run_csv(&outcome.rows)).expect("csv has no nul bytes");
            *csv_out = text.into_raw();
        }
        PlgStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn plg_reward_weights_default() -> PlgRewardWeights {
    let w = RewardWeights::default();
    PlgRewardWeights {
        k_info: w.k_info,
        k_cost: w.k_cost,
        k_dist: w.k_dist,
        k_risk: w.k_risk,
        k_turn: w.k_turn,
        gamma: w.gamma,
    }
}

/// Entropy in bits of a binary variable with probability `p`.
#[no_mangle]
pub extern "C" fn plg_binary_entropy(p: f64) -> f64 {
    reward::binary_entropy(p)
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], PlgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PlgStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Information gained by fully covering a footprint with the given coverage
/// probabilities.
///
/// # Safety
/// `probs` must point to `len` doubles (or be null with `len == 0`); `out` valid.
#[no_mangle]
pub unsafe extern "C" fn plg_info_gain(probs: *const f64, len: usize, out: *mut f64) -> PlgStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlgStatus::NullPointer, "out is null");
        }
        match slice_arg(probs, len, "probs") {
            Ok(p) => {
                *out = reward::info_gain(p.iter().copied());
                PlgStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// `k_dist·distance + k_risk·risk + k_turn·turn`.
#[no_mangle]
pub extern "C" fn plg_action_cost(distance: f64, risk: f64, turn: f64, weights: PlgRewardWeights) -> f64 {
    reward::action_cost(distance, risk, turn, &weights.into())
}

/// `k_info·info − k_cost·cost`.
#[no_mangle]
pub extern "C" fn plg_step_reward(info: f64, cost: f64, weights: PlgRewardWeights) -> f64 {
    reward::step_reward(info, cost, &weights.into())
}

/// # Safety
/// `rewards` must point to `len` doubles (or be null with `len == 0`); `out` valid.
#[no_mangle]
pub unsafe extern "C" fn plg_discounted_return(rewards: *const f64, len: usize, gamma: f64, out: *mut f64) -> PlgStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlgStatus::NullPointer, "out is null");
        }
        match slice_arg(rewards, len, "rewards") {
            Ok(r) => {
                *out = reward::discounted_return(r.iter().copied(), gamma);
                PlgStatus::Ok
            }
            Err(s) => s,
        }
    })
}
