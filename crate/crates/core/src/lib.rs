//! Co-design of intermodal mobility systems.
//!
//! The crate computes Pareto antichains of (average travel time, total cost,
//! CO2 emissions) for an intermodal mobility system — an autonomous-vehicle
//! fleet, a micromobility fleet, and subway service frequency — by composing
//! monotone design problems over a multi-commodity network-flow linear
//! program.

pub mod diagram;
pub mod dp;
pub mod flow;
pub mod mobility;
pub mod network;
pub mod poset;
pub mod scenario;
pub mod simplex;
