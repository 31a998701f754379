//! Information roadmaps: the dense local lattice and the sparse global graph.

pub mod frontier;
pub mod global;
pub mod local;
pub mod path;

pub use frontier::{detect_frontiers, FrontierCandidate};
pub use global::{edge_metrics, edge_route, EdgeId, GlobalEdge, GlobalIrm, GlobalIrmParams, GlobalNode, NodeId, NodeKind};
pub use local::{build_local_irm, LocalEdge, LocalIrm, LocalNode, LocalNodeId};
pub use path::{grid_astar, GridPath};
