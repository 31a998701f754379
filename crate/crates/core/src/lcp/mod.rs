//! Local coverage planner.

pub mod macros;
pub mod pomcp;
pub mod sim;

pub use macros::{enumerate_macro_actions, macro_nodes, MacroAction};
pub use pomcp::{pomcp_plan, Guidance, LcpParams, LocalPlan, RootStat};
pub use sim::{overlay_belief, LocalModel, LocalSimState, MacroOutcome, Transition};
