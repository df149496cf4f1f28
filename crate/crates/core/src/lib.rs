//! Fiber delay line sequences under a recirculation budget.
//!
//! A linear compressor or 2-to-1 FIFO multiplexer built from `M` fiber delay
//! lines routes each packet by the C-transform of its delay. When a packet
//! may pass through at most `k` fibers, the usable delay range shrinks to the
//! maximum representable integer `B(d; k)`. This crate computes those values,
//! builds the greedy sequences that maximize them, searches for optimal
//! sequences, and simulates both switch constructions.

pub mod ctransform;
pub mod error;
pub mod greedy;
pub mod mri;
pub mod search;
pub mod simulator;
pub mod tables;
pub mod verify;

pub use ctransform::{
    c_transform, in_class_a, in_class_b, reconstruct, unique_representation_check, DelaySeq,
    Representation, DEFAULT_SCAN_LIMIT,
};
pub use error::{Error, Result};
pub use mri::{mri_recursive, mri_scan, BTable, CheckReport, MriQuery, Scanner};
pub use greedy::{greedy_from_partition, GreedyMode, GreedySeq, PartitionSeq, Strictness};
pub use search::{brute_force_optimal, greedy_optimal, SearchOptions, SearchResult, Space};
pub use simulator::{simulate_compressor, simulate_fifo_mux, PacketTrace, SimConfig};
pub use tables::{reproduce_table, Table, TableId};
pub use verify::{run_verification_suite, Scope, SuiteReport};
