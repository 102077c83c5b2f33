//! Core of the flowtwin network digital twin.
//!
//! Everything here is pure computation over in-memory values: synthetic
//! topologies and routing, traffic-matrix sampling, a deterministic
//! packet-level simulator with SP/WFQ/DRR output ports, a small reverse-mode
//! autodiff engine, and RouteNet-family message-passing models that predict
//! per-path mean delay. File formats, the CLI and scoring live in the
//! `flowtwin` companion crate.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod gnn;
pub mod math;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod sample;
pub mod sim;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
pub use rng::{stream_rng, UnitSource};
pub use sample::{FlowKey, Sample, Tier};
pub use sim::{run_simulation, PerFlowStats, SimConfig, SimReport, SizeModel};
pub use topology::{
    make_synthetic_topology, Link, NodeScheduling, Policy, RoutingConfig, SchedulingConfig,
    Topology, TopologyKind,
};
pub use traffic::{FlowSpec, TrafficMatrix};
