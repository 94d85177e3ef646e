//! State space, covering grid, transition graphs and the replay buffer.

mod buffer;
mod dump;
mod graph;
mod grid;
mod state;

pub use buffer::ReplayBuffer;
pub use dump::{write_atomic, ExitReason, RunStats, SafeSetDump, DUMP_FORMAT, TOOL_VERSION};
pub use graph::TransitionGraph;
pub use grid::{lattice_axis, CellId, CoveringGrid, Metric};
pub use state::{Delta, State, StateBounds};
