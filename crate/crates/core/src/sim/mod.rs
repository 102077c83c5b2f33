//! Deterministic discrete-event packet simulator.

mod engine;
mod scheduler;
mod stats;

pub use engine::{
    run_simulation, PacketTotals, SimConfig, SimReport, SizeModel, TraceEvent, TraceKind,
};
pub use scheduler::{
    Dequeued, Discipline, DrrState, OutputPort, Queued, WfqState, DRR_BASE_QUANTUM,
};
pub use stats::{percentile, PerFlowStats, PERCENTILES};
